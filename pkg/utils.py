import os
import hashlib
import logging
from fractions import Fraction

import consts
from errors import LogSurfInputError


def setup_logger(name, log_file, level=logging.INFO):
    log_dir = os.path.dirname(log_file)
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
    handler = logging.FileHandler(log_file)
    handler.setFormatter(logging.Formatter('%(asctime)s %(message)s'))

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.addHandler(handler)

    return logger


def format_rational(value):
    """Render an exact rational as '3', '-2/3'."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text):
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise LogSurfInputError(f"not a rational number: '{text}'") from exc


def models_dir():
    return os.environ.get(consts.MODELS_DIR_ENV) or consts.MODELS_DIR


def resolve_model_path(path):
    """Return `path` if it exists, else look it up in the models directory.

    Params:
        path: a file path or a bare bundled model file name.

    Returns:
        An existing file path.

    Examples:
        >>> resolve_model_path("sharp_untwisted.lsm")  # doctest: +SKIP
        '.../data/models/sharp_untwisted.lsm'
    """
    if os.path.isfile(path):
        return path
    candidates = [os.path.join(models_dir(), path)]
    if not path.endswith(consts.MODEL_SUFFIX):
        candidates.append(os.path.join(models_dir(), path + consts.MODEL_SUFFIX))
    for candidate in candidates:
        if os.path.isfile(candidate):
            return candidate
    raise LogSurfInputError(f"model file not found: {path}")


def read_text(path):
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def digest(text):
    return hashlib.md5(text.encode("utf-8")).hexdigest()
