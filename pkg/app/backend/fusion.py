from typing import Sequence
import numpy as np
from utils.exceptions import AlignmentError


def fuse_concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    """
    Concatenate representations of the same utterances, in the given order.

    Accepts either per-utterance vectors (1-D) or per-dialogue matrices
    (T x D_i, one row per utterance); the result has sum(D_i) columns.

    Raises:
    ------
    AlignmentError:
        Inputs mix vectors and matrices, or the matrices disagree on T.
    """
    if not parts:
        raise AlignmentError("nothing to fuse")

    arrays = [np.asarray(part, dtype=np.float32) for part in parts]
    ndims = {a.ndim for a in arrays}
    if len(ndims) != 1 or ndims.pop() not in (1, 2):
        raise AlignmentError(f"cannot fuse inputs of shapes {[a.shape for a in arrays]}")

    if arrays[0].ndim == 1:
        return np.concatenate(arrays)

    row_counts = [a.shape[0] for a in arrays]
    if len(set(row_counts)) != 1:
        raise AlignmentError(f"utterance counts differ across fused backends: {row_counts}")
    return np.concatenate(arrays, axis=1)
