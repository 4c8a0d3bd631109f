import json
from pathlib import Path
from typing import Mapping, Sequence
from detector.run_io import is_complete, load_dev_predictions
from evalharness.metrics import f1, seed_stats
from evalharness.protocol import STATS_FILE
from schemas.evaluation import EnsembleSpec, SystemStats
from utils.exceptions import EnsembleError
from utils.helpers import PathLike, atomic_write_text
from utils.logger import get_logger

logger = get_logger(__name__)

ENSEMBLE_FILE = "ensemble.json"


def majority_vote(member_labels: Sequence[Sequence[int]]) -> list[int]:
    """
    Per position, the label chosen by more than half of the members.

    member_labels: k sequences (one per member) of equal length. k must be
    odd; k = 1 returns the single member unchanged.
    """
    k = len(member_labels)
    if k < 1 or k % 2 == 0:
        raise EnsembleError(f"majority voting needs an odd number of members, got {k}")
    lengths = {len(labels) for labels in member_labels}
    if len(lengths) != 1:
        raise EnsembleError(f"members predict different numbers of sessions: {sorted(lengths)}")
    return [int(sum(votes) * 2 > k) for votes in zip(*member_labels)]


def vote_sessions(members: Sequence[Mapping[str, int]]) -> dict[str, int]:
    """Majority vote over per-session predictions; every member must cover the same sessions."""
    if not members:
        raise EnsembleError("no members to vote")
    sessions = sorted(members[0])
    for i, member in enumerate(members[1:], start=1):
        if set(member) != set(sessions):
            raise EnsembleError(
                f"member {i} is not aligned with member 0 on dev sessions",
                details={"only_in_member": sorted(set(member) - set(sessions))[:10],
                         "missing": sorted(set(sessions) - set(member))[:10]},
            )
    fused = majority_vote([[member[s] for s in sessions] for member in members])
    return dict(zip(sessions, fused))


def recorded_runs(experiment_dir: PathLike) -> list[Path]:
    """Run directories listed in an experiment's stats.json, in seed-index order."""
    experiment_dir = Path(experiment_dir)
    stats_path = experiment_dir / STATS_FILE
    try:
        runs = json.loads(stats_path.read_text(encoding="utf-8"))["runs"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise EnsembleError(f"member {experiment_dir} has no completed protocol ({stats_path}): {e}")
    run_dirs = [experiment_dir / Path(run["run_dir"]).name for run in runs]
    incomplete = [str(p) for p in run_dirs if not is_complete(p)]
    if incomplete:
        raise EnsembleError(f"member {experiment_dir} lists incomplete runs", details={"runs": incomplete})
    return run_dirs


def ensemble_runs(spec: EnsembleSpec, system: str = None) -> SystemStats:
    """
    Fuse member experiments seed by seed: the i-th run of every member is
    voted into one prediction set, scored, and the per-seed F1 values are
    aggregated like a single system.
    """
    runs_per_member = [recorded_runs(member) for member in spec.members]
    counts = [len(runs) for runs in runs_per_member]
    if 0 in counts:
        empty = spec.members[counts.index(0)]
        raise EnsembleError(f"member {empty} has no completed runs")
    if len(set(counts)) != 1:
        raise EnsembleError(
            f"members have different seed counts: {counts}",
            details={str(m): c for m, c in zip(spec.members, counts)},
        )

    scores = []
    for seed_index, run_dirs in enumerate(zip(*runs_per_member)):
        predictions = [load_dev_predictions(run_dir) for run_dir in run_dirs]
        refs = {p.session_id: p.label for p in predictions[0]}
        for run_dir, member in zip(run_dirs[1:], predictions[1:]):
            if {p.session_id: p.label for p in member} != refs:
                raise EnsembleError(f"{run_dir} disagrees with {run_dirs[0]} on dev sessions or labels")
        fused = vote_sessions([{p.session_id: p.pred for p in member} for member in predictions])
        _, _, score = f1(fused, refs)
        scores.append(score)

    name = system or "+".join(Path(m).name for m in spec.members)
    result = SystemStats(system=name, stats=seed_stats(scores))
    logger.info("Ensemble '%s': F1-avg %.3f, F1-max %.3f over %d seeds", name, result.stats.f1_avg, result.stats.f1_max, len(scores))
    return result


def save_ensemble(result: SystemStats, spec: EnsembleSpec, path: PathLike) -> Path:
    path = Path(path)
    payload = {
        **result.model_dump(),
        "mode": spec.mode,
        "members": [str(m) for m in spec.members],
    }
    atomic_write_text(path, json.dumps(payload, indent=2))
    return path
