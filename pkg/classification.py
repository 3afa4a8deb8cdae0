"""Nefness on tracked curves, the Zariski decomposition of K + D and the log Kodaira verdict."""
import logging
from dataclasses import dataclass
from enum import Enum

from errors import ConsistencyError, NotAlmostMinimalError
from lattice_core import DivisorClass, QDivisor, classes_equal, gram_is_negative_definite, intersection_matrix
from peeling import almost_minimalize, compute_bark

logger = logging.getLogger(__name__)


class Kappa(Enum):
    ZERO = "zero"
    ONE = "one"
    TWO = "two"
    NOT_NEF_ON_TRACKED = "not_nef_on_tracked"

    @property
    def label(self):
        return {"zero": "0", "one": "1", "two": "2"}.get(self.value, self.value)


@dataclass(frozen=True)
class ZariskiData:
    nef_class: DivisorClass
    dsharp: QDivisor
    negative_part: QDivisor
    nef_self_intersection: object
    kappa: Kappa
    violators: tuple = ()


def is_nef_on_tracked(model, x):
    """Returns (nef, violators) where violators are (curve name, pairing) with x.c < 0."""
    violators = []
    for c in model.curves:
        value = model.lattice.pairing(x, c.divisor_class)
        if value < 0:
            violators.append((c.name, value))
    return not violators, violators


def ample_witness_check(model, witness):
    """Nakai-Moishezon relative to tracked curves: L^2 > 0 and L.c > 0 for every tracked c."""
    cls = model.class_of(witness)
    if model.lattice.self_intersection(cls) <= 0:
        return False
    return all(model.lattice.pairing(cls, c.divisor_class) > 0 for c in model.curves)


def floor_multiple_class(model, dsharp, m):
    """Class of m*K + floor(m*dsharp), the integral part of m(K + D^#)."""
    return model.canonical_class * m + model.class_of((dsharp * m).floor())


def _check_decomposition(model, data):
    lattice = model.lattice
    total = model.canonical_class + model.class_of(model.boundary)
    if not classes_equal(data.nef_class + model.class_of(data.negative_part), total):
        raise ConsistencyError("nef part + negative part differs from K + D")
    support = list(data.negative_part.support())
    for name in support:
        if lattice.pairing(data.nef_class, model.curve(name).divisor_class) != 0:
            raise ConsistencyError(f"nef part is not orthogonal to {name}")
    if not gram_is_negative_definite(intersection_matrix(support, model)):
        raise ConsistencyError("negative part support is not negative definite")


def zariski(model):
    contracted = almost_minimalize(model)[1]
    if contracted:
        raise NotAlmostMinimalError(contracted)

    result = compute_bark(model)
    nef_class = model.canonical_class + model.class_of(result.dsharp)
    square = model.lattice.self_intersection(nef_class)
    nef, violators = is_nef_on_tracked(model, nef_class)
    if not nef:
        kappa = Kappa.NOT_NEF_ON_TRACKED
    elif nef_class.is_zero():
        kappa = Kappa.ZERO
    elif square == 0:
        kappa = Kappa.ONE
    elif square > 0:
        kappa = Kappa.TWO
    else:
        raise ConsistencyError("K + dsharp is nef on tracked curves but has negative square; "
                               "the model is missing curves")

    data = ZariskiData(nef_class, result.dsharp, result.bark, square, kappa, tuple(violators))
    _check_decomposition(model, data)
    logger.info("Log Kodaira verdict: %s", kappa.value)
    return data


def log_kodaira_dimension(model):
    return zariski(model).kappa
