"""
Multi-seed evaluation: one training run per seed on a fixed augmentation
plan, persisted under `<output_root>/<name>/seed-NN/`, aggregated into
SeedStats once every seed has finished.
"""
import json
import multiprocessing
import shutil
from concurrent.futures import FIRST_EXCEPTION, ProcessPoolExecutor, wait
from pathlib import Path
from typing import Optional, Sequence
import torch
from augment.shuffling import build_plan, check_plan_corpus
from backend.store import FeatureStore
from corpus.manifest import load_manifest
from detector.run_io import ensure_writable, run_dir_name, save_run, stale_runs
from detector.training import train
from evalharness.metrics import seed_stats
from schemas.augment import AugmentationPlan
from schemas.corpus import Corpus
from schemas.evaluation import SeedStats
from schemas.experiment import ExperimentConfig
from utils.exceptions import DepProbeError, ProtocolError
from serializer.jsonl import read_plan
from utils.helpers import atomic_write_text
from utils.logger import get_logger

logger = get_logger(__name__)

STATS_FILE = "stats.json"
EXPERIMENT_FILE = "experiment.json"


def prepare_experiment(config: ExperimentConfig) -> tuple[Corpus, FeatureStore, AugmentationPlan]:
    """Load the corpus, the store and the plan shared by every seed; the plan is built when the config names none."""
    corpus = load_manifest(config.manifest)
    store = FeatureStore.open(config.resolve_store())
    if config.plan is None:
        plan = build_plan(corpus, config.augment, include_interviewer=config.include_interviewer)
    else:
        plan = read_plan(config.plan)
        check_plan_corpus(plan, corpus, include_interviewer=config.include_interviewer)
    return corpus, store, plan


def run_seed(config: ExperimentConfig, index: int, seed: int, force: bool = False, threads: Optional[int] = None) -> float:
    """Train and persist the run of one seed; returns its dev F1."""
    if threads is not None:
        torch.set_num_threads(threads)
    corpus, store, plan = prepare_experiment(config)
    run = train(
        store,
        plan,
        corpus,
        config.detector_config(seed),
        config.train_config(seed),
        config.backends,
        include_interviewer=config.include_interviewer,
        normalize=config.normalize,
    )
    save_run(
        run,
        config.experiment_dir / run_dir_name(index),
        force=force,
        extra={"experiment": config.name, "augment": plan.params.model_dump(mode="json")},
    )
    return run.dev_f1


def _wrap(seed: int, error: BaseException) -> ProtocolError:
    message = error.message if isinstance(error, DepProbeError) else f"{type(error).__name__}: {error}"
    return ProtocolError(message, seed=seed, details=getattr(error, "details", None))


def seed_protocol(
    config: ExperimentConfig,
    seeds: Optional[Sequence[int]] = None,
    jobs: int = 1,
    force: bool = False,
) -> tuple[SeedStats, list[Path]]:
    """
    Train one run per seed and aggregate their dev F1.

    The first failing seed aborts the protocol: pending seeds are cancelled
    and a ProtocolError naming the seed is raised. Existing run directories
    are refused up front unless `force`; with `force`, run directories and
    statistics from an earlier, larger seed list are removed first.
    """
    seeds = list(seeds if seeds is not None else config.seeds)
    experiment_dir = config.experiment_dir
    if config.plan is not None:
        # a plan that does not fit the corpus fails before any run directory is touched
        check_plan_corpus(
            read_plan(config.plan), load_manifest(config.manifest), include_interviewer=config.include_interviewer
        )
    run_dirs = [experiment_dir / run_dir_name(i) for i in range(len(seeds))]
    for run_dir in run_dirs:
        ensure_writable(run_dir, force)
    if force:
        for stale in stale_runs(experiment_dir, keep=len(seeds)):
            logger.info("Removing stale run %s", stale)
            shutil.rmtree(stale)
        (experiment_dir / STATS_FILE).unlink(missing_ok=True)
    experiment_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(experiment_dir / EXPERIMENT_FILE, config.model_dump_json(indent=2))

    logger.info("Running %d seed(s) of '%s' with %d job(s)", len(seeds), config.name, jobs)
    scores: dict[int, float] = {}
    if jobs <= 1:
        for index, seed in enumerate(seeds):
            try:
                scores[index] = run_seed(config, index, seed, force=force)
            except Exception as e:
                raise _wrap(seed, e)
    else:
        with ProcessPoolExecutor(max_workers=jobs, mp_context=multiprocessing.get_context("spawn")) as executor:
            futures = {
                executor.submit(run_seed, config, index, seed, force, 1): (index, seed)
                for index, seed in enumerate(seeds)
            }
            done, pending = wait(futures, return_when=FIRST_EXCEPTION)
            for future in done:
                index, seed = futures[future]
                if future.exception() is not None:
                    for other in pending:
                        other.cancel()
                    executor.shutdown(wait=True, cancel_futures=True)
                    raise _wrap(seed, future.exception())
                scores[index] = future.result()

    values = [scores[i] for i in range(len(seeds))]
    stats = seed_stats(values)
    summary = {
        "system": config.name,
        "stats": stats.model_dump(),
        "runs": [
            {"seed": seed, "run_dir": str(run_dir), "dev_f1": value}
            for seed, run_dir, value in zip(seeds, run_dirs, values)
        ],
    }
    atomic_write_text(experiment_dir / STATS_FILE, json.dumps(summary, indent=2))
    logger.info(
        "'%s': F1-avg %.3f, F1-max %.3f, F1-std %.3f over %d seeds",
        config.name,
        stats.f1_avg,
        stats.f1_max,
        stats.f1_std,
        stats.n_seeds,
    )
    return stats, run_dirs
