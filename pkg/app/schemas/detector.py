from typing import Any, Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, model_validator


class DetectorConfig(BaseModel):
    input_dim: Optional[int] = Field(default=None, gt=0)  # filled from the backends
    model_dim: int = Field(default=128, gt=0)
    heads: int = Field(default=4, gt=0)
    blocks: int = Field(default=2, gt=0)
    ffn_dim: int = Field(default=256, gt=0)
    dropout: float = Field(default=0.1, ge=0, lt=1)
    max_len: int = Field(default=4096, gt=0)
    positional_encoding: bool = True
    seed: int = 0

    @model_validator(mode="after")
    def check_dims(self):
        if self.model_dim % self.heads != 0:
            raise ValueError(f"model_dim ({self.model_dim}) must be divisible by heads ({self.heads})")
        if self.ffn_dim < self.model_dim:
            raise ValueError(f"ffn_dim ({self.ffn_dim}) must be at least model_dim ({self.model_dim})")
        return self


class TrainConfig(BaseModel):
    learning_rate: float = Field(default=1e-4, gt=0)
    batch_size: int = Field(default=32, gt=0)
    max_epochs: int = Field(default=20, gt=0)
    patience: int = Field(default=5, gt=0)
    loss: Literal["cross_entropy"] = "cross_entropy"
    eval_batch_size: int = Field(default=16, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def check_patience(self):
        if self.patience >= self.max_epochs:
            raise ValueError(f"patience ({self.patience}) must be below max_epochs ({self.max_epochs})")
        return self


class CurvePoint(BaseModel):
    epoch: int
    train_loss: float
    dev_f1: float


class DevPrediction(BaseModel):
    session_id: str
    label: Literal[0, 1]
    pred: Literal[0, 1]
    score: float


class TrainedRun(BaseModel):
    """Outcome of one training run: best-epoch weights plus its dev evaluation."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    detector: DetectorConfig
    train: TrainConfig
    backends: list[str] = Field(default_factory=list)  # store tags in fusion order
    state_dict: dict[str, Any]
    normalization: Optional[dict[str, list[float]]] = None
    curve: list[CurvePoint]
    dev_predictions: list[DevPrediction]
    best_epoch: int
    dev_f1: float = Field(ge=0, le=1)
