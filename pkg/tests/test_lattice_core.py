"""Tests for exact lattice arithmetic."""
import itertools
import random
from fractions import Fraction

import pytest

from errors import DimensionMismatchError, LatticeError, UnknownCurveError
from lattice_core import (DivisorClass, IntersectionLattice, QDivisor, adjunction_pa, classes_equal,
                          gram_is_negative_definite, intersection_matrix, is_negative_definite, pairing,
                          solve_exact)
from pair_model import base_lattice


def gauss_jordan(rows, rhs):
    """Dense rational Gauss-Jordan elimination with row pivoting."""
    n = len(rows)
    a = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(rows, rhs)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        p = a[col][col]
        a[col] = [v / p for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [v - factor * w for v, w in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def elimination_negative_definite(rows):
    """Symmetric elimination without pivoting: negative definite iff every pivot is negative."""
    a = [[Fraction(v) for v in row] for row in rows]
    n = len(a)
    for k in range(n):
        if a[k][k] >= 0:
            return False
        for i in range(k + 1, n):
            factor = a[i][k] / a[k][k]
            for j in range(k, n):
                a[i][j] -= factor * a[k][j]
    return True


def random_symmetric(rng, n):
    rows = [[0] * n for _ in range(n)]
    for i in range(n):
        rows[i][i] = rng.randint(-5, 1)
        for j in range(i + 1, n):
            rows[i][j] = rows[j][i] = rng.randint(-1, 2)
    return rows


def test_pairing_on_quadric():
    lattice = base_lattice("p1xp1")
    f, s = lattice.basis_class("f"), lattice.basis_class("s")
    assert pairing(f, s, lattice) == 1
    assert pairing(f, f, lattice) == 0
    assert lattice.self_intersection(f + s) == 2


@pytest.mark.parametrize("degree,genus", [(1, 0), (2, 0), (3, 1), (4, 3)])
def test_plane_curve_genus(degree, genus):
    lattice = base_lattice("p2")
    assert adjunction_pa(DivisorClass((degree,)), lattice) == genus


def test_quadric_bidegree_genus():
    lattice = base_lattice("p1xp1")
    assert adjunction_pa(DivisorClass((1, 1)), lattice) == 0
    assert adjunction_pa(DivisorClass((2, 2)), lattice) == 1


def test_hirzebruch_negative_section():
    lattice = base_lattice("hirzebruch", 3)
    c = lattice.basis_class("c")
    assert lattice.self_intersection(c) == -3
    assert lattice.adjunction_pa(c) == 0


def random_class(rng, rank):
    return DivisorClass(tuple(Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(rank)))


def test_pairing_is_symmetric_and_bilinear(bundled_models):
    rng = random.Random(17)
    for model in bundled_models.values():
        lattice = model.lattice
        for _ in range(40):
            x, y, z = (random_class(rng, lattice.rank) for _ in range(3))
            a, b = Fraction(rng.randint(-5, 5), rng.randint(1, 3)), Fraction(rng.randint(-5, 5), 2)
            assert pairing(x, y, lattice) == pairing(y, x, lattice)
            assert pairing(a * x + b * y, z, lattice) == a * pairing(x, z, lattice) + b * pairing(y, z, lattice)


def test_classes_equal_examples(untwisted):
    lattice = base_lattice("p1xp1")
    f, s = lattice.basis_class("f"), lattice.basis_class("s")
    assert classes_equal(f, f)
    assert not classes_equal(f, s)

    dsharp = QDivisor.from_mapping({"H1": 1, "H2": 1, "F1": 1, "D1": Fraction(2, 3), "D2": Fraction(2, 3),
                                    "D3": Fraction(1, 3), "D4": Fraction(1, 2), "D5": Fraction(1, 2)})
    nef = untwisted.canonical_class + untwisted.class_of(dsharp)
    assert classes_equal(nef, untwisted.curve("F1").divisor_class * Fraction(1, 6))


def test_classes_equal_iff_orthogonal_to_every_basis_class(bundled_models):
    rng = random.Random(23)
    for model in bundled_models.values():
        lattice = model.lattice
        basis = [lattice.basis_class(name) for name in lattice.basis_names]
        for _ in range(30):
            x = random_class(rng, lattice.rank)
            y = x if rng.random() < 0.5 else random_class(rng, lattice.rank)
            orthogonal = all(pairing(x - y, c, lattice) == 0 for c in basis)
            assert classes_equal(x, y) == orthogonal


def test_dimension_mismatch():
    lattice = base_lattice("p1xp1")
    with pytest.raises(DimensionMismatchError):
        pairing(DivisorClass((1, 0, 0)), DivisorClass((1, 0)), lattice)
    with pytest.raises(DimensionMismatchError):
        classes_equal(DivisorClass((1,)), DivisorClass((1, 0)))
    with pytest.raises(DimensionMismatchError):
        DivisorClass((1,)) + DivisorClass((1, 0))


def test_lattice_rejects_bad_gram():
    with pytest.raises(LatticeError):
        IntersectionLattice(("a", "b"), ((0, 1), (2, 0)), (0, 0))
    with pytest.raises(LatticeError):
        IntersectionLattice(("a", "b"), ((1, 1), (1, 1)), (0, 0))
    with pytest.raises(LatticeError):
        IntersectionLattice(("a", "a"), ((1, 0), (0, 1)), (0, 0))
    with pytest.raises(LatticeError):
        IntersectionLattice(("a",), ((1,),), (0, 0))


def test_divisor_class_arithmetic():
    x = DivisorClass((1, 2))
    y = DivisorClass((Fraction(1, 2), -1))
    assert (x + y).coeffs == (Fraction(3, 2), Fraction(1))
    assert (x - x).is_zero()
    assert (2 * y).coeffs == (1, -2)
    assert (2 * y).is_integral()
    assert not y.is_integral()
    assert y.format(("f", "s")) == "1/2*f + -1*s"


def test_qdivisor_merges_and_drops_zeros():
    d = QDivisor((("B", Fraction(1, 2)), ("A", 1), ("B", Fraction(-1, 2))))
    assert d.terms == (("A", Fraction(1)),)
    assert QDivisor.from_mapping({"A": 0}).is_zero()


def test_qdivisor_floor_and_ceil():
    d = QDivisor.from_mapping({"A": Fraction(2, 3), "B": Fraction(-1, 2), "C": 2})
    assert d.floor().as_dict() == {"B": -1, "C": 2}
    assert d.ceil().as_dict() == {"A": 1, "C": 2}
    assert (d * 3).coefficient("A") == 2


@pytest.mark.parametrize("rows,expected", [
    ([[-2, 1], [1, -2]], True),
    ([[-2, 1], [1, -1]], True),
    ([[-2, 2], [2, -2]], False),
    ([[-1, 1], [1, -1]], False),
    ([[0]], False),
    ([[-1, 0, 0], [0, -1, 0], [0, 0, 1]], False),
    ([], True),
])
def test_sylvester_criterion(rows, expected):
    assert gram_is_negative_definite(rows) is expected


def test_sylvester_matches_elimination_oracle():
    rng = random.Random(11)
    for _ in range(150):
        rows = random_symmetric(rng, rng.randint(1, 6))
        assert gram_is_negative_definite(rows) == elimination_negative_definite(rows)


def test_solve_exact_matches_gauss_jordan():
    rng = random.Random(5)
    solved = 0
    while solved < 60:
        n = rng.randint(1, 5)
        rows = [[rng.randint(-4, 4) for _ in range(n)] for _ in range(n)]
        rhs = [Fraction(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(n)]
        try:
            expected = gauss_jordan(rows, rhs)
        except StopIteration:
            with pytest.raises(LatticeError):
                solve_exact(rows, rhs)
            continue
        assert solve_exact(rows, rhs) == expected
        solved += 1


def test_solve_exact_singular():
    with pytest.raises(LatticeError):
        solve_exact([[1, 2], [2, 4]], [1, 1])


@pytest.mark.parametrize("size", range(1, 7))
def test_is_negative_definite_on_models(bundled_models, size):
    for model in bundled_models.values():
        for subset in itertools.combinations(model.curve_names, size):
            rows = intersection_matrix(subset, model)
            assert is_negative_definite(subset, model) == elimination_negative_definite(rows)


def test_is_negative_definite_fiber_support(untwisted):
    assert is_negative_definite(["D1", "D2", "D3"], untwisted)
    assert not is_negative_definite(["E2", "D1", "D3", "D2"], untwisted)


def test_is_negative_definite_errors(untwisted):
    with pytest.raises(UnknownCurveError):
        is_negative_definite(["D1", "nope"], untwisted)
    with pytest.raises(LatticeError):
        is_negative_definite(["D1", "D1"], untwisted)
