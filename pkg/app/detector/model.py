import math
from typing import Optional
import torch
import torch.nn as nn
from schemas.detector import DetectorConfig
from utils.exceptions import ConfigError, DetectorInputError
from utils.logger import get_logger

logger = get_logger(__name__)


class SinusoidalPositionalEncoding(nn.Module):
    def __init__(self, model_dim: int, max_len: int) -> None:
        super().__init__()
        position = torch.arange(max_len, dtype=torch.float64).unsqueeze(1)
        div_term = torch.exp(torch.arange(0, model_dim, 2, dtype=torch.float64) * (-math.log(10000.0) / model_dim))
        table = torch.zeros(max_len, model_dim, dtype=torch.float64)
        table[:, 0::2] = torch.sin(position * div_term)
        table[:, 1::2] = torch.cos(position * div_term)[:, : model_dim // 2]
        self.register_buffer("table", table.float(), persistent=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        # x: (batch, T, model_dim)
        return x + self.table[: x.size(1)].to(x.dtype)


class EncoderBlock(nn.TransformerEncoderLayer):
    """
    Post-norm encoder block with an explicit forward, so the padding mask
    always goes through the regular attention path.
    """

    def forward(self, src, src_mask=None, src_key_padding_mask=None, is_causal=False):
        attended, _ = self.self_attn(
            src, src, src, attn_mask=src_mask, key_padding_mask=src_key_padding_mask, need_weights=False
        )
        src = self.norm1(src + self.dropout1(attended))
        src = self.norm2(src + self.dropout2(self.linear2(self.dropout(self.activation(self.linear1(src))))))
        return src


class DepressionDetector(nn.Module):
    """
    Detection head over a dialogue of pooled utterance vectors:
    projection -> positional encoding -> encoder blocks -> masked mean -> 2-way output.
    """

    def __init__(self, config: DetectorConfig) -> None:
        super().__init__()
        self.config = config
        self.projection = nn.Linear(config.input_dim, config.model_dim)
        self.positional = (
            SinusoidalPositionalEncoding(config.model_dim, config.max_len) if config.positional_encoding else None
        )
        self.blocks = nn.ModuleList(
            [
                EncoderBlock(
                    d_model=config.model_dim,
                    nhead=config.heads,
                    dim_feedforward=config.ffn_dim,
                    dropout=config.dropout,
                    activation="relu",
                    batch_first=True,
                    norm_first=False,
                )
                for _ in range(config.blocks)
            ]
        )
        self.output = nn.Linear(config.model_dim, 2)

    def forward(self, features: torch.Tensor, mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        """
        features: (batch, T, input_dim) or (T, input_dim)
        mask: (batch, T) booleans, True marks a padded row
        returns logits of shape (batch, 2), or (2,) for an unbatched input
        """
        unbatched = features.dim() == 2
        if unbatched:
            features = features.unsqueeze(0)
            mask = mask.unsqueeze(0) if mask is not None else None
        if mask is None:
            mask = torch.zeros(features.shape[:2], dtype=torch.bool, device=features.device)

        valid = ~mask
        if (valid.sum(dim=1) == 0).any():
            raise DetectorInputError("every sequence needs at least one unpadded row")
        if not torch.isfinite(features[valid]).all():
            raise DetectorInputError("features contain non-finite values")
        if features.size(1) > self.config.max_len:
            raise DetectorInputError(f"sequence of {features.size(1)} rows exceeds max_len {self.config.max_len}")

        # padded rows are zeroed so their content can never leak in
        features = features.masked_fill(mask.unsqueeze(-1), 0.0)
        hidden = self.projection(features)
        if self.positional is not None:
            hidden = self.positional(hidden)
        for block in self.blocks:
            hidden = block(hidden, src_key_padding_mask=mask)

        weights = valid.unsqueeze(-1).to(hidden.dtype)
        pooled = (hidden * weights).sum(dim=1) / weights.sum(dim=1).clamp(min=1)
        logits = self.output(pooled)
        return logits[0] if unbatched else logits


def validate_config(config: DetectorConfig) -> None:
    if config.input_dim is None:
        raise ConfigError("detector input_dim is not set")


def count_parameters(model: DepressionDetector, include_projection: bool = False) -> int:
    total = 0
    for name, param in model.named_parameters():
        if not include_projection and name.startswith("projection."):
            continue
        total += param.numel()
    return total


def init_detector(config: DetectorConfig) -> DepressionDetector:
    """Build the detector with weights drawn from `config.seed` only."""
    validate_config(config)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        model = DepressionDetector(config)

    logger.info(
        "Initialised detector: %d parameters (%d without the input projection)",
        count_parameters(model, include_projection=True),
        count_parameters(model),
    )
    return model


def forward(model: DepressionDetector, features: torch.Tensor, mask: Optional[torch.Tensor] = None) -> torch.Tensor:
    return model(features, mask)


def decide(logits: torch.Tensor) -> tuple[int, float]:
    """Label is the argmax with ties going to the negative class; score is P(positive)."""
    probs = torch.softmax(logits.double(), dim=-1)
    label = 1 if logits[1] > logits[0] else 0
    return label, float(probs[1])


@torch.no_grad()
def predict(model: DepressionDetector, features) -> tuple[int, float]:
    model.eval()
    features = torch.as_tensor(features, dtype=next(model.parameters()).dtype)
    return decide(model(features))
