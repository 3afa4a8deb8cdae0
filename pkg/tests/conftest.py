import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)

import consts  # noqa: E402
from pair_model import load_model  # noqa: E402


def read_bundled(name):
    with open(os.path.join(consts.MODELS_DIR, name), "r", encoding="utf-8") as f:
        return f.read()


@pytest.fixture
def untwisted_text():
    return read_bundled("sharp_untwisted.lsm")


@pytest.fixture
def twisted_text():
    return read_bundled("sharp_twisted.lsm")


@pytest.fixture
def elliptic_text():
    return read_bundled("inseparable_elliptic.lsm")


@pytest.fixture
def untwisted(untwisted_text):
    return load_model(untwisted_text)


@pytest.fixture
def twisted(twisted_text):
    return load_model(twisted_text)


@pytest.fixture
def elliptic(elliptic_text):
    return load_model(elliptic_text)


@pytest.fixture
def bundled_models(untwisted, twisted, elliptic):
    return {"sharp-untwisted": untwisted, "sharp-twisted": twisted, "inseparable-elliptic": elliptic}
