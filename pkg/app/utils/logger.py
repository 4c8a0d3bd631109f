import logging
from utils import settings as st

_configured = False


def get_logger(name: str) -> logging.Logger:
    global _configured
    if not _configured:
        logging.basicConfig(level=st.LOG_LEVEL.upper(), format=st.LOG_FORMAT)
        _configured = True
    return logging.getLogger(name)


def set_level(level: str) -> None:
    logging.getLogger().setLevel(level.upper())
