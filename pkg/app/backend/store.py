import re
from pathlib import Path
from typing import Optional
import numpy as np
from pydantic import ValidationError
from schemas.backend import IndexEntry
from serializer.fmat import read_fmat_with_checksum, write_fmat
from serializer.jsonl import iter_jsonl
from utils import settings as st
from utils.exceptions import DepProbeError, ManifestParseError, StoreError
from utils.helpers import PathLike, generate_hash, write_jsonl
from utils.logger import get_logger

logger = get_logger(__name__)

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]")

Key = tuple[str, str, int]


def _file_stem(session_id: str) -> str:
    safe = _UNSAFE.sub("_", session_id)
    if safe != session_id:
        safe = f"{safe}-{generate_hash(session_id)[:8]}"
    return safe


class FeatureStore:
    """
    On-disk cache of per-dialogue feature matrices, one FMAT file per
    (session_id, backend tag, block), indexed by `index.jsonl`.

    Files are written temp-then-rename so readers never see partial
    matrices. The index is rewritten the same way on `flush`.
    """

    def __init__(self, root: PathLike) -> None:
        self.root = Path(root)
        self.index: dict[Key, IndexEntry] = {}
        self.last_run: dict[str, int] = {}

    @classmethod
    def open(cls, root: PathLike) -> "FeatureStore":
        store = cls(root)
        store.root.mkdir(parents=True, exist_ok=True)
        index_path = store.root / st.INDEX_FILE
        if index_path.is_file():
            try:
                for line_no, obj in iter_jsonl(index_path):
                    entry = IndexEntry.model_validate(obj)
                    store.index[entry.key] = entry
            except (ManifestParseError, ValidationError) as e:
                raise StoreError(f"Corrupted store index {index_path}: {e}")
        logger.debug("Opened feature store %s with %d entries", store.root, len(store.index))
        return store

    def relative_path(self, session_id: str, tag: str, block: int) -> str:
        return f"{_UNSAFE.sub('_', tag)}/block{block:02d}/{_file_stem(session_id)}.fmat"

    def put(self, session_id: str, tag: str, block: int, matrix: np.ndarray, flush: bool = True) -> IndexEntry:
        rel = self.relative_path(session_id, tag, block)
        checksum = write_fmat(self.root / rel, matrix)
        rows, cols = np.shape(matrix)
        entry = IndexEntry(
            session_id=session_id, backend=tag, block=block, file=rel, rows=rows, cols=cols, checksum=checksum
        )
        self.index[entry.key] = entry
        if flush:
            self.flush()
        return entry

    def get(self, session_id: str, tag: str, block: int) -> np.ndarray:
        entry = self.index.get((session_id, tag, block))
        if entry is None:
            raise StoreError(
                f"No cached features for session '{session_id}', backend '{tag}', block {block}",
                details={"session_id": session_id, "backend": tag, "block": block},
            )
        path = self.root / entry.file
        try:
            matrix, checksum = read_fmat_with_checksum(path)
        except FileNotFoundError:
            raise StoreError(f"Indexed file is missing: {path}")
        if matrix.shape != (entry.rows, entry.cols):
            raise StoreError(f"{path}: shape {matrix.shape} does not match index ({entry.rows}, {entry.cols})")
        if checksum != entry.checksum:
            raise StoreError(f"{path}: checksum mismatch")
        return matrix

    def is_valid(self, session_id: str, tag: str, block: int, rows: Optional[int] = None) -> bool:
        try:
            matrix = self.get(session_id, tag, block)
        except (DepProbeError, OSError):
            return False
        return rows is None or matrix.shape[0] == rows

    def sessions(self, tag: str, block: int) -> set[str]:
        return {key[0] for key in self.index if key[1] == tag and key[2] == block}

    def blocks(self, tag: str) -> list[int]:
        return sorted({key[2] for key in self.index if key[1] == tag})

    def flush(self) -> None:
        entries = sorted(self.index.values(), key=lambda e: (e.backend, e.block, e.session_id))
        write_jsonl(self.root / st.INDEX_FILE, (e.model_dump() for e in entries))


def open_store(root: Optional[PathLike] = None) -> FeatureStore:
    """Open the store at `root`, or at DEPPROBE_STORE_ROOT when that is set."""
    if st.STORE_ROOT:
        if root is not None and Path(root).resolve() != Path(st.STORE_ROOT).resolve():
            logger.warning("DEPPROBE_STORE_ROOT=%s overrides the store %s given explicitly", st.STORE_ROOT, root)
        root = st.STORE_ROOT
    if root is None:
        raise StoreError("No store root given and DEPPROBE_STORE_ROOT is not set")
    return FeatureStore.open(root)
