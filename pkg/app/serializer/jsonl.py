import json
from pathlib import Path
from typing import Iterator
from pydantic import ValidationError
from schemas.augment import AugmentParams, AugmentationPlan, SubDialogueRef
from utils.exceptions import ManifestParseError
from utils.helpers import PathLike, write_jsonl


def iter_jsonl(path: PathLike) -> Iterator[tuple[int, dict]]:
    """Yield (1-based line number, object) for every non-blank line."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestParseError(f"invalid JSON: {e.msg}", line_no=line_no, details={"path": str(path)})
            if not isinstance(obj, dict):
                raise ManifestParseError("expected a JSON object", line_no=line_no, details={"path": str(path)})
            yield line_no, obj


def write_plan(plan: AugmentationPlan, path: PathLike) -> None:
    header = {
        "params": plan.params.model_dump(mode="json"),
        "m_minus": plan.m_minus,
        "include_interviewer": plan.include_interviewer,
        "n_entries": len(plan.entries),
    }
    rows = [header] + [entry.model_dump(mode="json") for entry in plan.entries]
    write_jsonl(path, rows)


def read_plan(path: PathLike) -> AugmentationPlan:
    lines = iter_jsonl(Path(path))
    try:
        _, header = next(lines)
    except StopIteration:
        raise ManifestParseError("empty plan file", line_no=1)

    entries = []
    for line_no, obj in lines:
        try:
            entries.append(SubDialogueRef.model_validate(obj))
        except ValidationError as e:
            raise ManifestParseError(e.errors()[0]["msg"], line_no=line_no)

    try:
        plan = AugmentationPlan(
            params=AugmentParams.model_validate(header["params"]),
            m_minus=header["m_minus"],
            include_interviewer=header.get("include_interviewer", False),
            entries=entries,
        )
    except (KeyError, ValidationError) as e:
        raise ManifestParseError(f"invalid plan header: {e}", line_no=1)

    if header.get("n_entries", len(entries)) != len(entries):
        raise ManifestParseError(
            f"header announces {header['n_entries']} entries, file has {len(entries)}", line_no=1
        )
    return plan
