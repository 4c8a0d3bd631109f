from enum import Enum
from pathlib import Path
from typing import Literal, Union
from pydantic import BaseModel, Field, field_validator, model_validator

_TOLERANCE = 1e-12


class SeedStats(BaseModel):
    f1_avg: float = Field(ge=0, le=1)
    f1_max: float = Field(ge=0, le=1)
    f1_std: float = Field(ge=0)
    n_seeds: int = Field(ge=1)
    f1_values: list[float] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_order(self):
        if self.f1_max + _TOLERANCE < self.f1_avg:
            raise ValueError(f"f1_max {self.f1_max} below f1_avg {self.f1_avg}")
        return self


class SweepAxis(str, Enum):
    block = "block"
    m_plus = "m_plus"


class SweepPoint(BaseModel):
    value: int
    stats: SeedStats


class SweepResult(BaseModel):
    system: str
    axis: SweepAxis
    points: list[SweepPoint]

    @field_validator("points")
    def check_increasing(cls, points):
        values = [p.value for p in points]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"sweep axis values must be strictly increasing, got {values}")
        return points

    def best(self) -> SweepPoint:
        # first maximum wins on ties
        return max(self.points, key=lambda p: p.stats.f1_avg)


class SystemStats(BaseModel):
    """Statistics of one system, e.g. a fusion or an ensemble."""

    system: str
    stats: SeedStats


class EnsembleSpec(BaseModel):
    members: list[Path]
    mode: Literal["majority"] = "majority"

    @field_validator("members")
    def check_odd(cls, members):
        if len(members) < 3 or len(members) % 2 == 0:
            raise ValueError(f"an ensemble needs an odd number (>= 3) of members, got {len(members)}")
        return members


ReportInput = Union[SweepResult, SystemStats]
