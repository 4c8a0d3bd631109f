import numpy as np
from utils.exceptions import FeatureError


def pool_utterance(matrix) -> np.ndarray:
    """Average a (frames, D) matrix over time into one float32 D-vector."""
    values = np.asarray(matrix)
    if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
        raise FeatureError(f"cannot pool an empty or non 2-D utterance matrix of shape {values.shape}")
    return values.mean(axis=0, dtype=np.float64).astype(np.float32)
