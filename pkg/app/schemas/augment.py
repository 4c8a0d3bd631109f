from enum import Enum
from typing import Literal
from pydantic import BaseModel, Field, model_validator


class BalanceMode(str, Enum):
    corrected = "corrected"
    literal = "literal"


class AugmentParams(BaseModel):
    m_plus: int = Field(default=500, ge=1)
    eps_low: float = 0.3
    eps_high: float = 1.0
    seed: int = 0
    balance_mode: BalanceMode = BalanceMode.corrected
    balance: bool = True

    @model_validator(mode="after")
    def check_eps_bounds(self):
        if not 0 < self.eps_low < self.eps_high <= 1:
            raise ValueError(
                f"need 0 < eps_low < eps_high <= 1, got eps_low={self.eps_low}, eps_high={self.eps_high}"
            )
        return self


class SubDialogueRef(BaseModel):
    session_id: str
    s: int = Field(ge=0)
    e: int = Field(ge=0)
    label: Literal[0, 1]

    @model_validator(mode="after")
    def check_order(self):
        if self.e < self.s:
            raise ValueError(f"sub-dialogue end {self.e} before start {self.s}")
        return self

    @property
    def length(self) -> int:
        return self.e - self.s + 1


class AugmentationPlan(BaseModel):
    params: AugmentParams
    m_minus: int = Field(ge=1)
    include_interviewer: bool = False  # spans index participant rows only unless set
    entries: list[SubDialogueRef] = Field(default_factory=list)

    def label_counts(self) -> dict[int, int]:
        counts = {0: 0, 1: 0}
        for entry in self.entries:
            counts[entry.label] += 1
        return counts

    def session_ids(self) -> set[str]:
        return {entry.session_id for entry in self.entries}
