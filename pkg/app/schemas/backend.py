from enum import Enum
from typing import Optional
from pydantic import BaseModel, Field, model_validator
from utils import settings as st


class BackendKind(str, Enum):
    speech = "speech"
    text = "text"
    synthetic = "synthetic"


class Transcript(str, Enum):
    ref = "ref"
    hyp = "hyp"


class BackendSpec(BaseModel):
    name: str
    block: int = Field(default=0, ge=0)
    dim: Optional[int] = Field(default=None, gt=0)
    kind: Optional[BackendKind] = None
    checkpoint: Optional[str] = None  # hub id or local path; defaults from the registry
    depth: Optional[int] = Field(default=None, gt=0)
    transcript: Transcript = Transcript.ref

    @model_validator(mode="after")
    def fill_from_registry(self):
        entry = st.BACKEND_REGISTRY.get(self.name)
        if entry is None:
            if self.kind is None or self.checkpoint is None:
                raise ValueError(
                    f"backend '{self.name}' is not registered; give 'kind' and 'checkpoint' explicitly"
                )
        else:
            self.kind = self.kind or BackendKind(entry["kind"])
            self.checkpoint = self.checkpoint or entry["checkpoint"]
            self.depth = self.depth or entry["depth"]
            self.dim = self.dim or entry["dim"]
        if self.kind == BackendKind.text:
            # text encoders are read at their final block
            self.block = 0
        return self

    @property
    def tag(self) -> str:
        """Store tag; text encodings of hypotheses and references are kept apart."""
        if self.kind == BackendKind.text:
            return f"{self.name}-{self.transcript.value}"
        return self.name

    def with_block(self, block: int) -> "BackendSpec":
        if self.kind == BackendKind.text:
            return self
        return self.model_copy(update={"block": block})


class IndexEntry(BaseModel):
    session_id: str
    backend: str
    block: int
    file: str
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    checksum: int

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.session_id, self.backend, self.block)
