import os
from dotenv import load_dotenv

load_dotenv()

# STORE VARIABLES
STORE_ROOT: str = os.getenv("DEPPROBE_STORE_ROOT")
INDEX_FILE = "index.jsonl"
SYNTHETIC_CONFIG_FILE = "synthetic.json"
MANIFEST_FILE = "manifest.jsonl"

# FMAT CODEC
FMAT_MAGIC = b"FMAT"
FMAT_VERSION = 1
FMAT_HEADER_SIZE = 16
FMAT_DTYPE = "<f4"

# LOGGING
LOG_LEVEL: str = os.getenv("DEPPROBE_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# BACKEND REGISTRY
SAMPLE_RATE = 16000
SYNTHETIC_BACKEND = "synthetic"
SYNTHETIC_TEXT_BACKEND = "synthetic-text"
BACKEND_REGISTRY = {
    "w2v2-pt": {"kind": "speech", "checkpoint": "facebook/wav2vec2-base", "depth": 12, "dim": 768},
    "hubert-pt": {"kind": "speech", "checkpoint": "facebook/hubert-base-ls960", "depth": 12, "dim": 768},
    "wavlm-pt": {"kind": "speech", "checkpoint": "microsoft/wavlm-base-plus", "depth": 12, "dim": 768},
    "w2v2-asr": {"kind": "speech", "checkpoint": "facebook/wav2vec2-base-960h", "depth": 12, "dim": 768},
    "roberta": {"kind": "text", "checkpoint": "roberta-base", "depth": 12, "dim": 768},
    SYNTHETIC_BACKEND: {"kind": "synthetic", "checkpoint": None, "depth": None, "dim": None},
    SYNTHETIC_TEXT_BACKEND: {"kind": "text", "checkpoint": None, "depth": None, "dim": 64},
}

# EXPERIMENT DEFAULTS
DEFAULT_N_SEEDS = 20
DEFAULT_BLOCKS = (2, 4, 6, 8, 10, 12)
DEFAULT_M_PLUS_VALUES = (100, 200, 500, 1000, 1500)
RUN_DIR_PREFIX = "seed-"
PARAMS_FORMAT_VERSION = 1

# REPORT
SUMMARY_COLUMNS = ["axis", "f1_avg", "f1_max", "f1_std", "n_seeds"]

# EXIT CODES
EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
