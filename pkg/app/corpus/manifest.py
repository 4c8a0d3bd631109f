from pathlib import Path
from typing import Iterable
from pydantic import ValidationError
from schemas.corpus import ClassCounts, Corpus, Dialogue, Split
from serializer.jsonl import iter_jsonl
from utils.exceptions import CorpusValidationError
from utils.helpers import PathLike, write_jsonl
from utils.logger import get_logger

logger = get_logger(__name__)


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"])
    if first["type"] == "missing":
        return f"missing required field '{location}'"
    return f"{location}: {first['msg']}" if location else first["msg"]


def load_manifest(path: PathLike) -> Corpus:
    """
    Load a JSON-lines manifest, one dialogue per line.

    Utterance order is kept as written and indices are assigned from 0.
    Unknown keys are ignored.

    Raises:
    ------
    ManifestParseError:
        A line is not a JSON object; the error names the line number.
    CorpusValidationError:
        A required field is missing or invalid, or a session_id repeats.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusValidationError(f"Manifest not found: {path}")

    dialogues = []
    first_seen: dict[str, int] = {}
    for line_no, obj in iter_jsonl(path):
        utterances = obj.get("utterances")
        if isinstance(utterances, list):
            obj["utterances"] = [
                {**u, "index": i} if isinstance(u, dict) else u for i, u in enumerate(utterances)
            ]
        try:
            dialogue = Dialogue.model_validate({**obj, "line_no": line_no})
        except ValidationError as e:
            raise CorpusValidationError(
                f"line {line_no}: {_describe(e)}", details={"line": line_no, "path": str(path)}
            )

        if dialogue.session_id in first_seen:
            raise CorpusValidationError(
                f"line {line_no}: duplicate session_id '{dialogue.session_id}' "
                f"(first seen on line {first_seen[dialogue.session_id]})",
                details={"line": line_no, "session_id": dialogue.session_id},
            )
        first_seen[dialogue.session_id] = line_no
        dialogues.append(dialogue)

    corpus = Corpus(dialogues=dialogues)
    logger.info("Loaded %d dialogues from %s", len(dialogues), path)
    return corpus


def check_feature_rows(dialogues: Iterable[Dialogue], include_interviewer: bool = False) -> None:
    """Every dialogue must leave at least one feature row after the speaker filter."""
    empty = [d for d in dialogues if d.n_rows(include_interviewer) == 0]
    if not empty:
        return
    first = empty[0]
    where = f" (manifest line {first.line_no})" if first.line_no is not None else ""
    raise CorpusValidationError(
        f"session '{first.session_id}'{where} has no participant utterances; "
        "remove it from the manifest or include interviewer turns",
        details={"sessions": [{"session_id": d.session_id, "line": d.line_no} for d in empty]},
    )


def write_manifest(corpus: Corpus, path: PathLike) -> None:
    write_jsonl(path, (dialogue.to_manifest() for dialogue in corpus.dialogues))


def class_counts(corpus: Corpus, split: Split = Split.train) -> ClassCounts:
    if not corpus.dialogues:
        raise CorpusValidationError("Corpus is empty")

    dialogues = corpus.split(split)
    if not dialogues:
        raise CorpusValidationError(f"Split '{Split(split).value}' has no dialogues")

    n_pos = sum(1 for d in dialogues if d.label == 1)
    return ClassCounts(n_pos=n_pos, n_neg=len(dialogues) - n_pos)
