from pathlib import Path
from typing import Optional
from backend.store import FeatureStore, open_store
from corpus.synthetic import load_synthetic_config
from schemas.corpus import SyntheticConfig
from schemas.experiment import ExperimentConfig
from utils import settings as st
from utils.exceptions import ConfigError
from utils.helpers import PathLike, apply_overrides, load_config_file

# experiment paths written relative to the config file
RELATIVE_FIELDS = ("manifest", "store", "plan", "output_root")


def get_experiment_config(path: PathLike, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Load an experiment config file, apply flag overrides and validate it."""
    path = Path(path)
    raw = load_config_file(path)
    for field in RELATIVE_FIELDS:
        value = raw.get(field)
        if value is not None and not Path(value).is_absolute():
            raw[field] = str(path.parent / value)
    # flag values stay relative to the working directory
    raw = apply_overrides(raw, overrides or {})
    return ExperimentConfig.model_validate(raw)


def get_store(root: Optional[PathLike], manifest: Optional[PathLike] = None) -> FeatureStore:
    """Store at DEPPROBE_STORE_ROOT, else `root`, else `store/` next to the manifest."""
    if root is None and not st.STORE_ROOT:
        if manifest is None:
            raise ConfigError("no store given: pass --store or set DEPPROBE_STORE_ROOT")
        root = Path(manifest).parent / "store"
    return open_store(root)


def get_synthetic_config(store: FeatureStore) -> Optional[SyntheticConfig]:
    if not (store.root / st.SYNTHETIC_CONFIG_FILE).is_file():
        return None
    return load_synthetic_config(store.root)
