import pickle
from dataclasses import replace
from fractions import Fraction

import pytest

from errors import FiberDataMismatchError, FibrationDataError, NotLogKodairaOneError
from fibration_bound import (INF, BoundaryFiberDatum, FibrationData, HorizontalType, case_catalog, d_value,
                             delta_m_degree, enumerate_family, extract_fibration_data, fiber_boundary_degree,
                             fiber_class, fibration_criterion, fibration_threshold, find_case, horizon,
                             parse_fibration_data, reduced_instances, threshold_with_horizon, verify_family,
                             verify_global_bound)
from lattice_core import DivisorClass
from pair_model import load_model

KAPPA_ZERO = """
surface p1xp1
curve F0 class=1,0 pa=0 boundary=yes
curve F1 class=1,0 pa=0 boundary=yes
curve S0 class=0,1 pa=0 boundary=yes
curve S1 class=0,1 pa=0 boundary=yes
flags affine=yes
fibration base_genus=0 horiz=2sec horizontal=S0,S1
fiber A F0*1 branches=2
fiber B F1*1 branches=2
"""


def test_d_values():
    assert d_value(2, 2) == Fraction(1, 2)
    assert d_value(2, 3) == Fraction(2, 3)
    assert d_value(2, INF) == 1
    assert d_value(1, INF) == Fraction(1, 2)
    assert d_value(2, 1) == 0
    with pytest.raises(FibrationDataError):
        d_value(3, 2)
    with pytest.raises(FibrationDataError):
        d_value(2, 0)


def test_d_value_range():
    for branch_count in (1, 2):
        for multiplicity in [*range(1, 13), INF]:
            d = d_value(branch_count, multiplicity)
            assert 0 <= d <= 1
            assert (d == 1) == (branch_count == 2 and multiplicity is INF)
            assert (d == 0) == (multiplicity == 1)


def test_half_fiber_needs_infinite_multiplicity():
    with pytest.raises(FibrationDataError):
        BoundaryFiberDatum(1, 3)
    assert BoundaryFiberDatum(1, 1).d == 0


def test_infinity_survives_pickling():
    assert pickle.loads(pickle.dumps(INF)) is INF
    assert str(INF) == "inf"


def test_create_sorts_and_drops_trivial_fibers():
    data = FibrationData.create(0, 0, "2sec", [(2, 2), (2, 1), (2, INF), (2, 3)])
    assert data.format() == "g=0 t=0 horiz=2sec fibers=(2,inf),(2,3),(2,2)"
    assert data.s == 3
    assert data.epsilon == Fraction(1, 6)
    assert data.horizontal_type is HorizontalType.TWO_SECTIONS


def test_validation_rules():
    with pytest.raises(NotLogKodairaOneError):
        FibrationData.create(0, 0, "2sec", [(2, 2), (2, 2)])
    with pytest.raises(FibrationDataError):
        FibrationData.create(0, -1, "sep", [(2, INF)] * 4)
    with pytest.raises(FibrationDataError):
        FibrationData.create(1, 1, "insep", [(1, INF)])
    with pytest.raises(FibrationDataError):
        FibrationData.create(1, 0, "insep", [(2, INF)])
    with pytest.raises(FibrationDataError):
        FibrationData.create(-1, 5, "2sec")
    with pytest.raises(FibrationDataError):
        HorizontalType.from_tag("triple")


def test_parse_fibration_data():
    data = parse_fibration_data("g=0 t=1 horiz=sep fibers=(2,2),(2,3)")
    assert data.format() == "g=0 t=1 horiz=sep fibers=(2,3),(2,2)"
    assert parse_fibration_data("g=1 t=0 horiz=insep fibers=(1,inf)").epsilon == Fraction(1, 2)
    assert parse_fibration_data("g=0 t=3 horiz=2sec").fibers == ()


@pytest.mark.parametrize("text", [
    "g=0 t=1",
    "g=0 t=1 horiz=sep fibers=(2,3",
    "g=0 t=1 horiz=sep fibers=(2)",
    "g=0 t=1 horiz=sep fibers=(x,3)",
    "g=0 t=1 horiz=sep fibers=(2,y)",
    "g=zero t=1 horiz=sep",
    "g=0 t=1 horiz=sep colour=red",
    "g=0 t=1 horiz=sep oops",
])
def test_parse_errors(text):
    with pytest.raises(FibrationDataError):
        parse_fibration_data(text)


def test_untwisted_degrees():
    data = parse_fibration_data("g=0 t=0 horiz=2sec fibers=(2,inf),(2,3),(2,2)")
    assert [delta_m_degree(data, m) for m in range(1, 11)] == [-1, 0, 0, 0, 0, 1, 0, 1, 1, 1]
    assert not fibration_criterion(data, 7)
    assert fibration_criterion(data, 8)
    assert threshold_with_horizon(data) == (8, 24)


def test_thresholds_of_bundled_data():
    assert fibration_threshold(parse_fibration_data("g=0 t=1 horiz=sep fibers=(2,3),(2,2)")) == 8
    assert fibration_threshold(parse_fibration_data("g=1 t=0 horiz=insep fibers=(1,inf)")) == 6
    assert fibration_threshold(parse_fibration_data("g=0 t=3 horiz=2sec")) == 1


def test_threshold_is_least_m_from_which_criterion_holds():
    for text in ("g=0 t=1 horiz=2sec fibers=(2,5),(2,4)",
                 "g=0 t=0 horiz=2sec fibers=(2,inf),(2,2),(2,2),(2,6)",
                 "g=2 t=0 horiz=sep",
                 "g=1 t=0 horiz=insep fibers=(1,inf),(1,inf)"):
        data = parse_fibration_data(text)
        threshold = fibration_threshold(data)
        assert threshold <= horizon(data)
        assert all(fibration_criterion(data, m) for m in range(threshold, 3 * horizon(data)))
        if threshold > 1:
            assert not fibration_criterion(data, threshold - 1)


def test_catalog_shape():
    catalog = case_catalog()
    assert len(catalog) == 21
    assert len({family.case_id for family in catalog}) == 21
    assert [f.case_id for f in catalog if f.impossible] == ["5-3", "7-2"]
    assert find_case("6-1-2").s_range == (2, 2)
    with pytest.raises(KeyError):
        find_case("9-9")


def test_exact_thresholds_match_claims():
    for family in case_catalog():
        verdict = verify_family(family, 8)
        if family.impossible:
            assert verdict.status == "impossible"
            assert verdict.reason
            continue
        assert verdict.exact_threshold == family.claimed_threshold, family.case_id


def test_global_bound_holds_at_eight():
    report = verify_global_bound(8)
    assert report.all_hold
    assert report.failing_cases == []
    assert report.verdict("7-2").status == "impossible"


def test_global_bound_fails_at_seven():
    report = verify_global_bound(7)
    assert not report.all_hold
    assert report.failing_cases == ["6-1-2", "6-2-1", "6-2-2", "7-1-2"]
    witnesses = [w.format() for w in report.verdict("6-1-2").witnesses]
    assert "g=0 t=1 horiz=2sec fibers=(2,3),(2,2)" in witnesses


def test_small_m_verdicts():
    report = verify_global_bound(1)
    assert report.verdict("1").status == "holds"
    assert report.verdict("3-2").status == "fails"


def test_sharp_families():
    assert verify_family(find_case("6-1-2"), 7).status == "fails"
    assert verify_family(find_case("7-1-2"), 7).status == "fails"
    assert verify_family(find_case("4-3"), 5).status == "fails"
    assert verify_family(find_case("4-3"), 6).status == "holds"


def test_verdict_table():
    frame = verify_global_bound(7).to_frame()
    assert list(frame.columns) == ["case", "status", "claimed", "exact", "witnesses"]
    assert len(frame) == 21
    row = frame[frame["case"] == "7-2"].iloc[0]
    assert row["status"] == "impossible"
    assert row["claimed"] == "-"


def test_parallel_matches_serial():
    serial = verify_global_bound(8, processes=1)
    parallel = verify_global_bound(8, processes=2)
    assert parallel == serial


def test_verify_global_bound_rejects_bad_m():
    with pytest.raises(FibrationDataError):
        verify_global_bound(0)


def test_reduced_instances_are_members():
    for family in case_catalog():
        for data in reduced_instances(family):
            assert family.admits(data.fibers)
            assert data.epsilon > 0


@pytest.mark.parametrize("case_id", [family.case_id for family in case_catalog() if not family.impossible])
def test_verdicts_agree_with_brute_force_enumeration(case_id):
    family = find_case(case_id)
    # unconstrained fibers make the grid grow fastest
    s_max = 4 if family.fiber_rule == "any" else 6
    members = enumerate_family(family, g_max=5, s_max=s_max, multiplicity_max=12, t_max=4)
    for m in range(1, 13):
        brute_fails = any(not fibration_criterion(data, m) for data in members)
        verdict = verify_family(family, m)
        assert (verdict.status == "fails") == brute_fails, (case_id, m)


def sample_data():
    for family in case_catalog():
        yield from reduced_instances(family)


def test_delta_m_degree_steps():
    for data in sample_data():
        slope = 2 * data.g - 2 + data.t
        for m in range(1, 40):
            step = delta_m_degree(data, m + 1) - delta_m_degree(data, m)
            assert slope <= step <= slope + data.s, (data.format(), m)


def test_delta_m_degree_grows_like_epsilon():
    m = 10 ** 4
    for data in sample_data():
        assert abs(Fraction(delta_m_degree(data, m), m) - data.epsilon) <= Fraction(data.s + 1, m)


def test_extract_untwisted(untwisted):
    data = extract_fibration_data(untwisted)
    assert data.format() == "g=0 t=0 horiz=2sec fibers=(2,inf),(2,3),(2,2)"
    assert fiber_class(untwisted) == DivisorClass((1, 0, 0, 0, 0, 0, 0))
    assert fiber_boundary_degree(untwisted) == 2


def test_extract_twisted(twisted):
    data = extract_fibration_data(twisted)
    assert data.format() == "g=0 t=1 horiz=sep fibers=(2,3),(2,2)"
    assert fibration_threshold(data) == 8
    assert fiber_boundary_degree(twisted) == 2


def test_extract_elliptic(elliptic):
    data = extract_fibration_data(elliptic)
    assert data.format() == "g=1 t=0 horiz=insep fibers=(1,inf)"
    assert data.epsilon == Fraction(1, 2)
    assert fibration_threshold(data) == 6


def test_extract_needs_kappa_one():
    with pytest.raises(FibrationDataError):
        extract_fibration_data(load_model(KAPPA_ZERO))


def test_extract_rejects_odd_branch_points(twisted):
    broken = replace(twisted, fibration=replace(twisted.fibration, branch_points=3))
    with pytest.raises(FibrationDataError):
        extract_fibration_data(broken)


def test_extract_detects_wrong_fiber_assignment(untwisted):
    groups = untwisted.fibration.fibers
    wrong = replace(groups[1], components=(("D1", 1), ("D4", 1)))
    broken = replace(untwisted, fibration=replace(untwisted.fibration, fibers=(groups[0], wrong, groups[2])))
    with pytest.raises(FiberDataMismatchError):
        extract_fibration_data(broken)


def test_extract_needs_an_assignment(untwisted):
    with pytest.raises(FibrationDataError):
        extract_fibration_data(replace(untwisted, fibration=None))
