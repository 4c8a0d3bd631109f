from typing import Any, Optional
from utils import settings as st


class DepProbeError(Exception):
    """
    Base error of the toolkit. Carries the same fields as a response payload
    so the CLI can render it with `get_payload`.
    """

    exit_code: int = st.EXIT_RUNTIME

    def __init__(self, message: str, details: Any = None) -> None:
        super().__init__(message)
        self.message = message
        self.details = details


class ConfigError(DepProbeError):
    exit_code = st.EXIT_USAGE


class ManifestParseError(DepProbeError):
    def __init__(self, message: str, line_no: int, details: Any = None) -> None:
        super().__init__(f"line {line_no}: {message}", details={"line": line_no, **(details or {})})
        self.line_no = line_no


class CorpusValidationError(DepProbeError):
    pass


class AugmentError(DepProbeError):
    pass


class FormatError(DepProbeError):
    def __init__(self, message: str, offset: int, path: Optional[str] = None) -> None:
        super().__init__(
            f"{message} (byte offset {offset})", details={"offset": offset, "path": path}
        )
        self.offset = offset


class AlignmentError(DepProbeError):
    pass


class StoreError(DepProbeError):
    pass


class FeatureError(DepProbeError):
    pass


class AudioError(DepProbeError):
    pass


class DetectorInputError(DepProbeError):
    pass


class TrainingError(DepProbeError):
    pass


class ProtocolError(DepProbeError):
    def __init__(self, message: str, seed: int, details: Any = None) -> None:
        super().__init__(f"seed {seed}: {message}", details={"seed": seed, "error": details})
        self.seed = seed


class EnsembleError(DepProbeError):
    pass


class MetricError(DepProbeError):
    pass


class ReportError(DepProbeError):
    pass


class RunExistsError(DepProbeError):
    exit_code = st.EXIT_USAGE
