import os
import json
import zlib
import hashlib
import tempfile
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Iterable, Union
from utils.exceptions import ConfigError

PathLike = Union[str, os.PathLike]


def get_payload(
    message: str = None,
    ok: bool = False,
    details: Any = None,
):
    payload = {
        "ok": ok,
        "message": message,
        "details": details,
        "meta_info": {},
    }
    return payload


def generate_hash(info: str) -> str:
    return hashlib.sha256(f"{info}".encode()).hexdigest()


def crc32(data: bytes) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def atomic_write_bytes(path: PathLike, data: bytes) -> None:
    """
    Write `data` to `path` so that readers see either the old file or the
    complete new one.

    Parameters:
    ----------
    path : PathLike
        Destination file. Parent directories are created.
    data : bytes
        Full file contents.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def atomic_write_text(path: PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_jsonl(path: PathLike, rows: Iterable[dict]) -> None:
    lines = [json.dumps(row, ensure_ascii=False) for row in rows]
    atomic_write_text(path, "".join(f"{line}\n" for line in lines))


def load_config_file(path: PathLike) -> dict:
    """
    Load a TOML or JSON config file into a plain dict.

    Raises:
    ------
    ConfigError:
        If the file is missing, has an unknown extension or does not parse.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")

    try:
        if path.suffix == ".toml":
            with open(path, "rb") as fh:
                return tomllib.load(fh)
        if path.suffix == ".json":
            with open(path, "r", encoding="utf-8") as fh:
                return json.load(fh)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"Invalid config file {path}: {e}")

    raise ConfigError(f"Unsupported config format '{path.suffix}', use .toml or .json")


def apply_overrides(config: dict, overrides: dict) -> dict:
    """
    Apply dotted-key overrides ({"train.max_epochs": 5}) on a nested dict.
    `None` values are skipped so unset CLI flags leave the file untouched.
    """
    for dotted_key, value in overrides.items():
        if value is None:
            continue
        node = config
        *parents, leaf = dotted_key.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    return config


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigError(f"Expected a comma separated list of integers, got '{text}'")


def parse_block_profile(text: str) -> dict[int, float]:
    # "2:0,4:0.1,8:1.0"
    profile = {}
    try:
        for item in text.split(","):
            block, scale = item.split(":")
            profile[int(block)] = float(scale)
    except ValueError:
        raise ConfigError(f"Expected block:scale pairs, got '{text}'")
    return profile
