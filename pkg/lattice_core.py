"""Exact rational arithmetic on an intersection lattice.

Classes are coefficient vectors over the lattice basis; pairings go through
the gram matrix. Everything is a `fractions.Fraction`, held in numpy object
arrays, with sympy doing determinants and linear solves exactly.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
import sympy

from errors import DimensionMismatchError, LatticeError, UnknownCurveError
from utils import format_rational

logger = logging.getLogger(__name__)


def to_sympy_matrix(rows):
    return sympy.Matrix([[sympy.Rational(Fraction(v).numerator, Fraction(v).denominator) for v in row]
                         for row in rows])


def to_fraction(value):
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def leading_principal_minors(rows):
    matrix = to_sympy_matrix(rows)
    return [to_fraction(matrix[:k, :k].det()) for k in range(1, matrix.rows + 1)]


def gram_is_negative_definite(rows):
    """Sylvester's criterion: the k-th leading minor has sign (-1)^k."""
    if len(rows) == 0:
        return True
    for k, minor in enumerate(leading_principal_minors(rows), start=1):
        if minor == 0 or (minor > 0) != (k % 2 == 0):
            return False
    return True


def solve_exact(rows, rhs):
    """Solve rows * x = rhs over the rationals. The matrix must be invertible."""
    matrix = to_sympy_matrix(rows)
    if matrix.det() == 0:
        raise LatticeError("singular system")
    solution = matrix.LUsolve(to_sympy_matrix([[v] for v in rhs]))
    return [to_fraction(solution[i, 0]) for i in range(matrix.rows)]


@dataclass(frozen=True)
class DivisorClass:
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))

    @classmethod
    def zero(cls, rank):
        return cls((0,) * rank)

    @classmethod
    def basis(cls, rank, index):
        return cls(tuple(1 if i == index else 0 for i in range(rank)))

    @property
    def rank(self):
        return len(self.coeffs)

    def _check(self, other):
        if self.rank != other.rank:
            raise DimensionMismatchError(f"class lengths differ: {self.rank} vs {other.rank}")

    def __add__(self, other):
        self._check(other)
        return DivisorClass(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        self._check(other)
        return DivisorClass(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return DivisorClass(tuple(-a for a in self.coeffs))

    def __mul__(self, scalar):
        scalar = Fraction(scalar)
        return DivisorClass(tuple(scalar * a for a in self.coeffs))

    __rmul__ = __mul__

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def is_integral(self):
        return all(c.denominator == 1 for c in self.coeffs)

    def as_vector(self):
        return np.array(self.coeffs, dtype=object)

    def format(self, basis_names=None):
        if basis_names is None:
            return "(" + ", ".join(format_rational(c) for c in self.coeffs) + ")"
        terms = [f"{format_rational(c)}*{name}" for c, name in zip(self.coeffs, basis_names) if c != 0]
        return " + ".join(terms) if terms else "0"


@dataclass(frozen=True)
class QDivisor:
    """A formal rational combination of named curves, kept sorted by name."""
    terms: tuple = ()

    def __post_init__(self):
        merged = {}
        for name, coeff in self.terms:
            merged[name] = merged.get(name, Fraction(0)) + Fraction(coeff)
        object.__setattr__(self, "terms",
                           tuple(sorted((n, c) for n, c in merged.items() if c != 0)))

    @classmethod
    def from_mapping(cls, mapping):
        return cls(tuple(mapping.items()))

    def coefficient(self, name):
        return dict(self.terms).get(name, Fraction(0))

    def support(self):
        return tuple(name for name, _ in self.terms)

    def as_dict(self):
        return dict(self.terms)

    def __add__(self, other):
        return QDivisor(self.terms + other.terms)

    def __sub__(self, other):
        return QDivisor(self.terms + tuple((n, -c) for n, c in other.terms))

    def __mul__(self, scalar):
        scalar = Fraction(scalar)
        return QDivisor(tuple((n, scalar * c) for n, c in self.terms))

    __rmul__ = __mul__

    def floor(self):
        return QDivisor(tuple((n, math.floor(c)) for n, c in self.terms))

    def ceil(self):
        return QDivisor(tuple((n, math.ceil(c)) for n, c in self.terms))

    def is_zero(self):
        return not self.terms

    def format(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{format_rational(c)}*{n}" if c != 1 else n for n, c in self.terms)


@dataclass(frozen=True)
class IntersectionLattice:
    basis_names: tuple
    gram: tuple
    canonical: tuple

    def __post_init__(self):
        object.__setattr__(self, "basis_names", tuple(self.basis_names))
        object.__setattr__(self, "gram", tuple(tuple(int(v) for v in row) for row in self.gram))
        object.__setattr__(self, "canonical", tuple(int(v) for v in self.canonical))
        n = len(self.basis_names)
        if len(set(self.basis_names)) != n:
            raise LatticeError("basis names must be distinct")
        if len(self.gram) != n or any(len(row) != n for row in self.gram):
            raise LatticeError(f"gram must be {n}x{n}")
        if len(self.canonical) != n:
            raise LatticeError("canonical class length differs from lattice rank")
        for i in range(n):
            for j in range(i + 1, n):
                if self.gram[i][j] != self.gram[j][i]:
                    raise LatticeError(f"gram is not symmetric at ({i}, {j})")
        if n > 0 and to_sympy_matrix(self.gram).det() == 0:
            raise LatticeError("gram is degenerate")

    @property
    def rank(self):
        return len(self.basis_names)

    @cached_property
    def matrix(self):
        return np.array(self.gram, dtype=object).reshape(self.rank, self.rank)

    @property
    def canonical_class(self):
        return DivisorClass(self.canonical)

    def basis_class(self, name):
        return DivisorClass.basis(self.rank, self.basis_names.index(name))

    def _check(self, x):
        if x.rank != self.rank:
            raise DimensionMismatchError(
                f"class of length {x.rank} does not belong to a rank {self.rank} lattice")

    def pairing(self, x, y):
        self._check(x)
        self._check(y)
        if self.rank == 0:
            return Fraction(0)
        return Fraction(x.as_vector().dot(self.matrix).dot(y.as_vector()))

    def self_intersection(self, x):
        return self.pairing(x, x)

    def adjunction_pa(self, x):
        return (self.pairing(x, x) + self.pairing(self.canonical_class, x)) / 2 + 1


def pairing(x, y, lattice):
    return lattice.pairing(x, y)


def adjunction_pa(c_class, lattice):
    return lattice.adjunction_pa(c_class)


def classes_equal(x, y):
    """Class equality; numerical and Q-linear equivalence coincide on a nondegenerate lattice."""
    if x.rank != y.rank:
        raise DimensionMismatchError(f"class lengths differ: {x.rank} vs {y.rank}")
    return x.coeffs == y.coeffs


def intersection_matrix(curve_names, model):
    classes = [model.curve(name).divisor_class for name in curve_names]
    return [[model.lattice.pairing(a, b) for b in classes] for a in classes]


def is_negative_definite(curve_names, model):
    """True iff the curves' intersection matrix is negative definite."""
    curve_names = list(curve_names)
    if len(set(curve_names)) != len(curve_names):
        raise LatticeError("curves must be pairwise distinct")
    for name in curve_names:
        if not model.has_curve(name):
            raise UnknownCurveError(name)
    return gram_is_negative_definite(intersection_matrix(curve_names, model))
