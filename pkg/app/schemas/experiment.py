from pathlib import Path
from typing import Optional
from pydantic import BaseModel, Field, field_validator
from schemas.augment import AugmentParams
from schemas.backend import BackendSpec
from schemas.detector import DetectorConfig, TrainConfig
from utils import settings as st
from utils.logger import get_logger

logger = get_logger(__name__)


class ExperimentConfig(BaseModel):
    name: str = "experiment"
    manifest: Path
    store: Optional[Path] = None
    plan: Optional[Path] = None  # written by `plan`; built from `augment` when absent
    backends: list[BackendSpec] = Field(min_length=1)  # fusion order
    augment: AugmentParams = Field(default_factory=AugmentParams)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    seeds: list[int] = Field(default_factory=lambda: list(range(st.DEFAULT_N_SEEDS)))
    output_root: Path = Path("runs")
    include_interviewer: bool = False
    normalize: bool = False

    class Config:
        json_schema_extra = {
            "example": {
                "name": "wavlm-pt-b8",
                "manifest": "data/manifest.jsonl",
                "backends": [{"name": "wavlm-pt", "block": 8}],
                "augment": {"m_plus": 500},
                "seeds": [0, 1, 2],
                "output_root": "runs",
            }
        }

    @field_validator("manifest")
    def check_manifest_exists(cls, manifest):
        if not Path(manifest).is_file():
            raise ValueError(f"manifest not found: {manifest}")
        return manifest

    @field_validator("plan")
    def check_plan_exists(cls, plan):
        if plan is not None and not Path(plan).is_file():
            raise ValueError(f"plan file not found: {plan}")
        return plan

    @field_validator("backends")
    def check_dims_known(cls, backends):
        for spec in backends:
            if spec.dim is None:
                raise ValueError(f"backend '{spec.name}' needs an explicit 'dim'")
        return backends

    @field_validator("seeds")
    def check_seeds(cls, seeds):
        if not seeds:
            raise ValueError("at least one seed is required")
        if len(set(seeds)) != len(seeds):
            raise ValueError(f"seeds must be distinct, got {seeds}")
        return seeds

    @property
    def input_dim(self) -> int:
        return sum(spec.dim for spec in self.backends)

    def resolve_store(self) -> Path:
        if st.STORE_ROOT:
            if self.store is not None and Path(self.store).resolve() != Path(st.STORE_ROOT).resolve():
                logger.warning("DEPPROBE_STORE_ROOT=%s overrides the configured store %s", st.STORE_ROOT, self.store)
            return Path(st.STORE_ROOT)
        if self.store is not None:
            return Path(self.store)
        return Path(self.manifest).parent / "store"

    def detector_config(self, seed: int) -> DetectorConfig:
        return self.detector.model_copy(update={"input_dim": self.input_dim, "seed": seed})

    def train_config(self, seed: int) -> TrainConfig:
        return self.train.model_copy(update={"seed": seed})

    @property
    def experiment_dir(self) -> Path:
        return Path(self.output_root) / self.name
