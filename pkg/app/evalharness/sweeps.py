from typing import Iterable, Sequence
from backend.store import FeatureStore
from corpus.manifest import load_manifest
from evalharness.protocol import seed_protocol
from schemas.corpus import Split
from schemas.evaluation import SweepAxis, SweepPoint, SweepResult
from schemas.experiment import ExperimentConfig
from utils.exceptions import ConfigError, StoreError
from utils.helpers import atomic_write_text
from utils.logger import get_logger

logger = get_logger(__name__)


def _axis_values(values: Iterable[int]) -> list[int]:
    values = list(values)
    if not values:
        raise ConfigError("a sweep needs at least one value")
    if len(set(values)) != len(values):
        raise ConfigError(f"sweep values must be distinct, got {values}")
    return sorted(values)


def with_block(config: ExperimentConfig, block: int) -> ExperimentConfig:
    """Point every block-bearing backend at `block`; text backends stay at block 0."""
    backends = [spec.with_block(block) for spec in config.backends]
    return config.model_copy(update={"backends": backends, "name": f"{config.name}-block{block:02d}"})


def with_m_plus(config: ExperimentConfig, m_plus: int) -> ExperimentConfig:
    augment = config.augment.model_copy(update={"m_plus": m_plus})
    return config.model_copy(update={"augment": augment, "name": f"{config.name}-mplus{m_plus}"})


def check_materialized(configs: Sequence[ExperimentConfig]) -> None:
    """Every backend of every config must be cached, at its block, for all train and dev sessions."""
    corpus = load_manifest(configs[0].manifest)
    store = FeatureStore.open(configs[0].resolve_store())
    needed = {d.session_id for split in (Split.train, Split.dev) for d in corpus.split(split)}
    for config in configs:
        for spec in config.backends:
            missing = needed - store.sessions(spec.tag, spec.block)
            if missing:
                raise StoreError(
                    f"block {spec.block} is not materialized for backend '{spec.tag}' ({len(missing)} session(s) missing)",
                    details={"block": spec.block, "backend": spec.tag, "sessions": sorted(missing)[:10]},
                )


def _save(config: ExperimentConfig, result: SweepResult) -> None:
    path = config.experiment_dir / f"sweep-{result.axis.value}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(path, result.model_dump_json(indent=2))
    best = result.best()
    logger.info("Sweep %s of '%s': best %s=%d (F1-avg %.3f)", result.axis.value, result.system, result.axis.value, best.value, best.stats.f1_avg)


def block_sweep(
    config: ExperimentConfig,
    blocks: Iterable[int],
    jobs: int = 1,
    force: bool = False,
) -> SweepResult:
    """Seed protocol per block, with the rest of the experiment held fixed."""
    blocks = _axis_values(blocks)
    variants = [with_block(config, block) for block in blocks]
    check_materialized(variants)

    points = []
    for block, variant in zip(blocks, variants):
        stats, _ = seed_protocol(variant, jobs=jobs, force=force)
        points.append(SweepPoint(value=block, stats=stats))
    result = SweepResult(system=config.name, axis=SweepAxis.block, points=points)
    _save(config, result)
    return result


def m_plus_sweep(
    config: ExperimentConfig,
    values: Iterable[int],
    jobs: int = 1,
    force: bool = False,
) -> SweepResult:
    """Seed protocol per positive multiplicity M+; M- follows from the balance rule."""
    if config.plan is not None:
        raise ConfigError("an m_plus sweep builds its own plans; drop `plan` from the config")
    values = _axis_values(values)
    if values[0] < 1:
        raise ConfigError(f"m_plus values must be positive, got {values}")
    check_materialized([config])

    points = []
    for m_plus in values:
        stats, _ = seed_protocol(with_m_plus(config, m_plus), jobs=jobs, force=force)
        points.append(SweepPoint(value=m_plus, stats=stats))
    result = SweepResult(system=config.name, axis=SweepAxis.m_plus, points=points)
    _save(config, result)
    return result
