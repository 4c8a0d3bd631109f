import io
import json
import shutil
from pathlib import Path
from typing import Optional
import pandas as pd
import torch
from detector.model import DepressionDetector, validate_config
from schemas.detector import CurvePoint, DetectorConfig, DevPrediction, TrainConfig, TrainedRun
from serializer.jsonl import iter_jsonl
from utils import settings as st
from utils.exceptions import RunExistsError, StoreError
from utils.helpers import PathLike, atomic_write_bytes, atomic_write_text, write_jsonl

PARAMS_FILE = "params.bin"
CONFIG_FILE = "config.json"
PREDICTIONS_FILE = "dev_predictions.jsonl"
CURVE_FILE = "curve.csv"
RUN_FILES = (PARAMS_FILE, CONFIG_FILE, PREDICTIONS_FILE, CURVE_FILE)


def run_dir_name(index: int) -> str:
    return f"{st.RUN_DIR_PREFIX}{index:02d}"


def stale_runs(experiment_dir: PathLike, keep: int) -> list[Path]:
    """Run directories left over from an earlier run with more than `keep` seeds."""
    current = {run_dir_name(i) for i in range(keep)}
    runs = sorted(p for p in Path(experiment_dir).glob(f"{st.RUN_DIR_PREFIX}*") if p.is_dir())
    return [p for p in runs if p.name not in current]


def is_complete(run_dir: PathLike) -> bool:
    run_dir = Path(run_dir)
    return (run_dir / CONFIG_FILE).is_file() and (run_dir / PREDICTIONS_FILE).is_file()


def ensure_writable(run_dir: PathLike, force: bool = False) -> None:
    run_dir = Path(run_dir)
    if run_dir.exists() and any(run_dir.iterdir()):
        if not force:
            raise RunExistsError(f"run directory {run_dir} already exists; pass --force to overwrite")
        shutil.rmtree(run_dir)


def save_run(run: TrainedRun, run_dir: PathLike, force: bool = False, extra: Optional[dict] = None) -> Path:
    """
    Persist a trained run as params.bin, config.json, dev_predictions.jsonl
    and curve.csv. Refuses to overwrite a non-empty directory unless `force`.
    """
    run_dir = Path(run_dir)
    ensure_writable(run_dir, force)
    run_dir.mkdir(parents=True, exist_ok=True)

    buffer = io.BytesIO()
    torch.save(
        {
            "format_version": st.PARAMS_FORMAT_VERSION,
            "state_dict": run.state_dict,
            "normalization": run.normalization,
        },
        buffer,
    )
    atomic_write_bytes(run_dir / PARAMS_FILE, buffer.getvalue())

    config = {
        "detector": run.detector.model_dump(mode="json"),
        "train": run.train.model_dump(mode="json"),
        "seeds": {"detector": run.detector.seed, "train": run.train.seed},
        "backends": run.backends,
        "best_epoch": run.best_epoch,
        "dev_f1": run.dev_f1,
        **(extra or {}),
    }
    atomic_write_text(run_dir / CONFIG_FILE, json.dumps(config, indent=2))
    write_jsonl(run_dir / PREDICTIONS_FILE, (p.model_dump() for p in run.dev_predictions))

    curve = pd.DataFrame([p.model_dump() for p in run.curve], columns=["epoch", "train_loss", "dev_f1"])
    atomic_write_text(run_dir / CURVE_FILE, curve.to_csv(index=False))
    return run_dir


def load_dev_predictions(run_dir: PathLike) -> list[DevPrediction]:
    return [DevPrediction.model_validate(obj) for _, obj in iter_jsonl(Path(run_dir) / PREDICTIONS_FILE)]


def load_run(run_dir: PathLike) -> TrainedRun:
    run_dir = Path(run_dir)
    missing = [name for name in RUN_FILES if not (run_dir / name).is_file()]
    if missing:
        raise StoreError(f"incomplete run directory {run_dir}: missing {', '.join(missing)}")

    config = json.loads((run_dir / CONFIG_FILE).read_text(encoding="utf-8"))
    params = torch.load(run_dir / PARAMS_FILE, map_location="cpu", weights_only=True)
    if params.get("format_version") != st.PARAMS_FORMAT_VERSION:
        raise StoreError(
            f"{run_dir / PARAMS_FILE}: unsupported params format {params.get('format_version')!r}"
        )
    curve = pd.read_csv(run_dir / CURVE_FILE)

    return TrainedRun(
        detector=DetectorConfig.model_validate(config["detector"]),
        train=TrainConfig.model_validate(config["train"]),
        backends=config.get("backends", []),
        state_dict=params["state_dict"],
        normalization=params.get("normalization"),
        curve=[CurvePoint(**row) for row in curve.to_dict(orient="records")],
        dev_predictions=load_dev_predictions(run_dir),
        best_epoch=config["best_epoch"],
        dev_f1=config["dev_f1"],
    )


def load_model(run: TrainedRun) -> DepressionDetector:
    validate_config(run.detector)
    model = DepressionDetector(run.detector)
    model.load_state_dict(run.state_dict)
    return model.eval()
