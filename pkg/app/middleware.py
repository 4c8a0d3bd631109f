import json
import sys
from functools import wraps
from typing import Callable
from pydantic import ValidationError
from utils import settings as st
from utils.exceptions import DepProbeError
from utils.helpers import get_payload
from utils.logger import get_logger

logger = get_logger(__name__)


def _emit(payload: dict, stream) -> None:
    stream.write(json.dumps(payload, default=str) + "\n")
    stream.flush()


def apply_error_handlers(handler: Callable) -> Callable[..., int]:
    """
    Run a command handler and turn its outcome into an exit code.

    Success prints the handler's payload on stdout (exit 0). Toolkit errors
    print an error payload on stderr with their own exit code; config
    validation errors are usage errors (exit 2); anything else is a
    runtime failure (exit 1).
    """

    @wraps(handler)
    def wrapper(*args, **kwargs) -> int:
        try:
            payload = handler(*args, **kwargs)

        except DepProbeError as exc:
            _emit(get_payload(message=exc.message, details=exc.details), sys.stderr)
            return exc.exit_code

        except ValidationError as exc:
            errors = [{"loc": list(err["loc"]), "msg": err["msg"]} for err in exc.errors()]
            first = errors[0] if errors else {"loc": [], "msg": str(exc)}
            location = ".".join(str(part) for part in first["loc"])
            message = f"{location}: {first['msg']}" if location else first["msg"]
            _emit(get_payload(message=message, details=errors), sys.stderr)
            return st.EXIT_USAGE

        except Exception as exc:
            logger.exception("Unexpected failure in %s", handler.__name__)
            _emit(get_payload(message=f"{type(exc).__name__}: {exc}"), sys.stderr)
            return st.EXIT_RUNTIME

        _emit(payload, sys.stdout)
        return st.EXIT_OK

    return wrapper
