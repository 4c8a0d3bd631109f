from typing import Mapping, Sequence
import numpy as np
from sklearn.metrics import precision_recall_fscore_support
from schemas.evaluation import SeedStats
from utils.exceptions import MetricError


def f1(preds: Mapping[str, int], refs: Mapping[str, int]) -> tuple[float, float, float]:
    """
    Positive-class (depressed = 1) precision, recall and F1 over sessions.
    A zero denominator yields 0.

    Raises:
    ------
    MetricError:
        If `preds` and `refs` do not cover the same sessions.
    """
    if set(preds) != set(refs):
        missing = sorted(set(refs) - set(preds))
        extra = sorted(set(preds) - set(refs))
        raise MetricError(
            "prediction and reference session sets differ",
            details={"missing": missing[:10], "unexpected": extra[:10]},
        )
    if not refs:
        raise MetricError("cannot score an empty session set")

    sessions = sorted(refs)
    y_true = [int(refs[s]) for s in sessions]
    y_pred = [int(preds[s]) for s in sessions]
    precision, recall, score, _ = precision_recall_fscore_support(
        y_true, y_pred, labels=[1], average=None, zero_division=0
    )
    return float(precision[0]), float(recall[0]), float(score[0])


def seed_stats(values: Sequence[float]) -> SeedStats:
    """Mean, max and sample (n - 1) standard deviation of per-seed F1; one seed has std 0."""
    if len(values) == 0:
        raise MetricError("no per-seed scores to aggregate")

    scores = np.asarray(values, dtype=np.float64)
    std = float(scores.std(ddof=1)) if scores.size > 1 else 0.0
    return SeedStats(
        f1_avg=float(scores.mean()),
        f1_max=float(scores.max()),
        f1_std=std,
        n_seeds=int(scores.size),
        f1_values=[float(v) for v in scores],
    )
