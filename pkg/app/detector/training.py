"""
Training loop of the detection block. One call trains one seed: batches of
sub-dialogues from the augmentation plan, cross-entropy, Adam, dev F1 after
every epoch and early stopping on it.
"""
import copy
from typing import Optional, Sequence
import numpy as np
import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader, Dataset
from backend.fusion import fuse_concat
from backend.store import FeatureStore
from detector.model import DepressionDetector, decide, init_detector
from evalharness.metrics import f1
from schemas.augment import AugmentationPlan
from schemas.backend import BackendSpec
from schemas.corpus import Corpus, Split
from schemas.detector import CurvePoint, DetectorConfig, DevPrediction, TrainConfig, TrainedRun
from utils.exceptions import TrainingError
from utils.logger import get_logger

logger = get_logger(__name__)


def load_features(
    store: FeatureStore,
    corpus: Corpus,
    backends: Sequence[BackendSpec],
    session_ids: Sequence[str],
    include_interviewer: bool = False,
) -> dict[str, np.ndarray]:
    """Fused (T x sum(D)) matrix per session, backends concatenated in the given order."""
    features = {}
    for session_id in session_ids:
        parts = [store.get(session_id, spec.tag, spec.block) for spec in backends]
        matrix = fuse_concat(parts)
        expected = corpus.get(session_id).n_rows(include_interviewer)
        if matrix.shape[0] != expected:
            raise TrainingError(
                f"session '{session_id}' has {matrix.shape[0]} cached rows, the manifest implies {expected}",
                details={"session_id": session_id},
            )
        features[session_id] = matrix
    return features


def check_plan(plan: AugmentationPlan, store: FeatureStore, backends: Sequence[BackendSpec]) -> None:
    """Fail before training if a plan entry points at features the store does not hold."""
    for spec in backends:
        missing = sorted(plan.session_ids() - store.sessions(spec.tag, spec.block))
        if missing:
            raise TrainingError(
                f"plan references {len(missing)} session(s) with no features for '{spec.tag}' block {spec.block}",
                details={"backend": spec.tag, "block": spec.block, "sessions": missing[:10]},
            )
    for entry in plan.entries:
        rows = store.index[(entry.session_id, backends[0].tag, backends[0].block)].rows
        if entry.e >= rows:
            raise TrainingError(
                f"plan entry {entry.session_id}[{entry.s}..{entry.e}] exceeds its {rows} feature rows",
                details=entry.model_dump(),
            )


def fit_normalization(features: dict[str, np.ndarray]) -> dict[str, list[float]]:
    rows = np.concatenate(list(features.values()), axis=0).astype(np.float64)
    std = rows.std(axis=0)
    std[std == 0] = 1.0
    return {"mean": rows.mean(axis=0).tolist(), "std": std.tolist()}


def apply_normalization(matrix: np.ndarray, normalization: Optional[dict]) -> np.ndarray:
    if normalization is None:
        return matrix
    mean = np.asarray(normalization["mean"], dtype=np.float64)
    std = np.asarray(normalization["std"], dtype=np.float64)
    return ((matrix - mean) / std).astype(np.float32)


class SubDialogueDataset(Dataset):
    def __init__(self, plan: AugmentationPlan, features: dict[str, np.ndarray]) -> None:
        self.entries = plan.entries
        self.features = features

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx: int):
        entry = self.entries[idx]
        rows = self.features[entry.session_id][entry.s: entry.e + 1]
        return torch.tensor(rows), entry.label


def collate_batch(items) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Pad to the longest sequence; the mask is True on padded rows."""
    lengths = [rows.shape[0] for rows, _ in items]
    batch = torch.zeros(len(items), max(lengths), items[0][0].shape[1], dtype=torch.float32)
    mask = torch.ones(len(items), max(lengths), dtype=torch.bool)
    for i, (rows, _) in enumerate(items):
        batch[i, : rows.shape[0]] = rows
        mask[i, : rows.shape[0]] = False
    labels = torch.tensor([label for _, label in items], dtype=torch.long)
    return batch, mask, labels


def batch_loss(model: DepressionDetector, features: torch.Tensor, mask: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(model(features, mask), labels)


@torch.no_grad()
def evaluate(
    model: DepressionDetector,
    features: dict[str, np.ndarray],
    labels: dict[str, int],
    batch_size: int,
) -> tuple[float, list[DevPrediction]]:
    """Score full (un-augmented) dialogues; returns dev F1 and per-session predictions."""
    model.eval()
    sessions = list(labels)
    predictions = []
    for start in range(0, len(sessions), batch_size):
        chunk = sessions[start: start + batch_size]
        batch, mask, _ = collate_batch([(torch.tensor(features[s]), labels[s]) for s in chunk])
        logits = model(batch, mask)
        for session_id, row in zip(chunk, logits):
            pred, score = decide(row)
            predictions.append(
                DevPrediction(session_id=session_id, label=labels[session_id], pred=pred, score=score)
            )
    _, _, score = f1({p.session_id: p.pred for p in predictions}, labels)
    return score, predictions


def train(
    store: FeatureStore,
    plan: AugmentationPlan,
    corpus: Corpus,
    detector_config: DetectorConfig,
    train_config: TrainConfig,
    backends: Sequence[BackendSpec],
    include_interviewer: bool = False,
    normalize: bool = False,
    progress: bool = False,
) -> TrainedRun:
    """
    Train one detector on the sub-dialogues of `plan` and keep the weights of
    the epoch with the best dev F1 (the earliest on ties).

    The detector seed draws the initial weights; the train seed drives batch
    order and dropout. Together with the data they fix every output.

    Raises:
    ------
    TrainingError:
        If the plan and the store disagree, or the dev split is empty.
    """
    if not backends:
        raise TrainingError("no backends to train on")
    dev_labels = corpus.labels(Split.dev)
    if not dev_labels:
        raise TrainingError("the dev split is empty")
    if not plan.entries:
        raise TrainingError("the augmentation plan is empty")

    check_plan(plan, store, backends)
    planned = plan.session_ids()
    train_ids = [d.session_id for d in corpus.split(Split.train) if d.session_id in planned]
    train_features = load_features(store, corpus, backends, train_ids, include_interviewer)
    dev_features = load_features(store, corpus, backends, list(dev_labels), include_interviewer)

    input_dim = next(iter(train_features.values())).shape[1]
    if detector_config.input_dim is None:
        detector_config = detector_config.model_copy(update={"input_dim": input_dim})
    elif detector_config.input_dim != input_dim:
        raise TrainingError(f"detector expects {detector_config.input_dim}-dim inputs, features have {input_dim}")

    normalization = fit_normalization(train_features) if normalize else None
    train_features = {s: apply_normalization(m, normalization) for s, m in train_features.items()}
    dev_features = {s: apply_normalization(m, normalization) for s, m in dev_features.items()}

    model = init_detector(detector_config)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(train_config.seed)
        generator = torch.Generator().manual_seed(train_config.seed)
        loader = DataLoader(
            SubDialogueDataset(plan, train_features),
            batch_size=train_config.batch_size,
            shuffle=True,
            generator=generator,
            collate_fn=collate_batch,
        )
        optimizer = torch.optim.Adam(model.parameters(), lr=train_config.learning_rate)

        curve = []
        best_f1, best_epoch, best_state = -1.0, 0, None
        stale = 0
        for epoch in range(1, train_config.max_epochs + 1):
            model.train()
            total, seen = 0.0, 0
            for batch, mask, labels in loader:
                optimizer.zero_grad()
                loss = batch_loss(model, batch, mask, labels)
                if not torch.isfinite(loss):
                    raise TrainingError(f"non-finite loss at epoch {epoch}")
                loss.backward()
                optimizer.step()
                total += loss.item() * labels.size(0)
                seen += labels.size(0)

            dev_f1, _ = evaluate(model, dev_features, dev_labels, train_config.eval_batch_size)
            curve.append(CurvePoint(epoch=epoch, train_loss=total / seen, dev_f1=dev_f1))
            if progress:
                logger.info("epoch %d: train_loss=%.4f dev_f1=%.4f", epoch, total / seen, dev_f1)

            if dev_f1 > best_f1:
                best_f1, best_epoch, stale = dev_f1, epoch, 0
                best_state = copy.deepcopy(model.state_dict())
            else:
                stale += 1
                if stale >= train_config.patience:
                    logger.debug("Early stop at epoch %d (best %d)", epoch, best_epoch)
                    break

    model.load_state_dict(best_state)
    dev_f1, dev_predictions = evaluate(model, dev_features, dev_labels, train_config.eval_batch_size)
    logger.info(
        "Trained seed %d/%d: best dev F1 %.4f at epoch %d",
        detector_config.seed,
        train_config.seed,
        dev_f1,
        best_epoch,
    )
    return TrainedRun(
        detector=detector_config,
        train=train_config,
        backends=[spec.tag for spec in backends],
        state_dict=best_state,
        normalization=normalization,
        curve=curve,
        dev_predictions=dev_predictions,
        best_epoch=best_epoch,
        dev_f1=dev_f1,
    )

