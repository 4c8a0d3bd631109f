from enum import Enum
from typing import Literal, Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Speaker(str, Enum):
    participant = "participant"
    interviewer = "interviewer"


class Split(str, Enum):
    train = "train"
    dev = "dev"
    test = "test"


class Utterance(BaseModel):
    model_config = ConfigDict(populate_by_name=True, extra="ignore")

    index: int = Field(ge=0)
    start_time: float = Field(alias="start")
    end_time: float = Field(alias="end")
    speaker: Speaker
    text: str = ""
    hypothesis: Optional[str] = Field(default=None, alias="hyp")  # ASR transcript
    audio_ref: Optional[str] = Field(default=None, alias="audio")

    @model_validator(mode="after")
    def check_times(self):
        if self.end_time <= self.start_time:
            raise ValueError(
                f"utterance {self.index}: end ({self.end_time}) must be after start ({self.start_time})"
            )
        return self

    def to_manifest(self) -> dict:
        row = {
            "start": self.start_time,
            "end": self.end_time,
            "speaker": self.speaker.value,
            "text": self.text,
            "audio": self.audio_ref,
        }
        if self.hypothesis is not None:
            row["hyp"] = self.hypothesis
        return row


class Dialogue(BaseModel):
    model_config = ConfigDict(
        extra="ignore",
        json_schema_extra={
            "example": {
                "session_id": "300",
                "label": 0,
                "split": "train",
                "utterances": [
                    {"start": 36.6, "end": 39.7, "speaker": "participant", "text": "good", "audio": "300_AUDIO.wav"}
                ],
            }
        },
    )

    session_id: str = Field(min_length=1)
    label: Literal[0, 1]
    split: Split
    utterances: list[Utterance] = Field(min_length=1)
    line_no: Optional[int] = Field(default=None, exclude=True)  # manifest line, when loaded from one

    @field_validator("utterances")
    def check_contiguous_indices(cls, utterances):
        for position, utterance in enumerate(utterances):
            if utterance.index != position:
                raise ValueError(f"utterance indices must be contiguous from 0, got {utterance.index} at {position}")
        return utterances

    def feature_utterances(self, include_interviewer: bool = False) -> list[Utterance]:
        """Utterances that become feature rows, in dialogue order."""
        if include_interviewer:
            return list(self.utterances)
        return [u for u in self.utterances if u.speaker == Speaker.participant]

    def n_rows(self, include_interviewer: bool = False) -> int:
        return len(self.feature_utterances(include_interviewer))

    def to_manifest(self) -> dict:
        return {
            "session_id": self.session_id,
            "label": self.label,
            "split": self.split.value,
            "utterances": [u.to_manifest() for u in self.utterances],
        }


class Corpus(BaseModel):
    dialogues: list[Dialogue] = Field(default_factory=list)

    @field_validator("dialogues")
    def check_unique_sessions(cls, dialogues):
        seen = set()
        for dialogue in dialogues:
            if dialogue.session_id in seen:
                raise ValueError(f"duplicate session_id '{dialogue.session_id}'")
            seen.add(dialogue.session_id)
        return dialogues

    def split(self, split: Split) -> list[Dialogue]:
        return [d for d in self.dialogues if d.split == Split(split)]

    def get(self, session_id: str) -> Dialogue:
        for dialogue in self.dialogues:
            if dialogue.session_id == session_id:
                return dialogue
        raise KeyError(session_id)

    def labels(self, split: Split) -> dict[str, int]:
        return {d.session_id: d.label for d in self.split(split)}


class ClassCounts(BaseModel):
    n_pos: int = Field(ge=0)
    n_neg: int = Field(ge=0)


class SyntheticConfig(BaseModel):
    n_pos: int = Field(default=20, ge=0)
    n_neg: int = Field(default=20, ge=0)
    dev_pos: int = Field(default=6, ge=0)
    dev_neg: int = Field(default=6, ge=0)
    t_range: tuple[int, int] = (8, 24)
    dim: int = Field(default=32, gt=0)
    signal: float = Field(default=5.0, ge=0)
    noise_sigma: float = Field(default=1.0, gt=0)
    seed: int = 0
    # block -> signal scale; None emits a single store at block 0
    block_profile: Optional[dict[int, float]] = None

    @field_validator("t_range")
    def check_t_range(cls, t_range):
        t_min, t_max = t_range
        if t_min < 2:
            raise ValueError("t_range minimum must be at least 2")
        if t_max < t_min:
            raise ValueError("t_range maximum must not be below the minimum")
        return t_range

    @field_validator("block_profile")
    def check_block_profile(cls, profile):
        if profile is not None:
            if not profile:
                raise ValueError("block_profile must name at least one block")
            if any(block < 0 or scale < 0 for block, scale in profile.items()):
                raise ValueError("block_profile needs non-negative blocks and scales")
        return profile

    @property
    def blocks(self) -> list[int]:
        return sorted(self.block_profile) if self.block_profile else [0]

    def signal_at(self, block: int) -> float:
        if self.block_profile is None:
            return self.signal
        return self.signal * self.block_profile[block]

    @classmethod
    def daic_woz_shaped(cls, **overrides) -> "SyntheticConfig":
        """Class counts of the DAIC-WOZ train/dev splits (30/107 and 12/35 positive)."""
        values = {"n_pos": 30, "n_neg": 77, "dev_pos": 12, "dev_neg": 23}
        values.update(overrides)
        return cls(**values)
