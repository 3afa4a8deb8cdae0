import os

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
MODELS_DIR = os.path.join(BASE_DIR, "data", "models")
CITATIONS_FILE = os.path.join(BASE_DIR, "data", "citations.json")
MODEL_SUFFIX = ".lsm"

# Environment override for MODELS_DIR, read at call time by utils.models_dir()
MODELS_DIR_ENV = "LOGSURF_EXAMPLES_DIR"

EXAMPLE_MODELS = {
    "sharp-untwisted": "sharp_untwisted.lsm",
    "sharp-twisted": "sharp_twisted.lsm",
    "inseparable-elliptic": "inseparable_elliptic.lsm",
}
EXAMPLE_ALIASES = {
    "example-3-2": "sharp-untwisted",
    "prop-4-1": "sharp-twisted",
    "prop-4-2": "inseparable-elliptic",
}

# Residual grid used by the case-family reductions
REDUCTION_MULTIPLICITIES = (2, 3, 4, 5, 6)
REDUCTION_EXTRA_FIBERS = 2

HORIZON_SCAN_LIMIT = 10 ** 6
DEFAULT_JOBS = 1

DEBUG = False
