"""Degrees of the multicanonical divisors on the base of a P1-fibration.

For a log Kodaira dimension one pair the nef part of K + D is the pullback
of K_B + delta plus a sum of d_i times boundary fibers. This module evaluates

    deg delta_m = m(2g - 2 + t) + sum(floor(m * d_i))

against the fibration criterion deg delta_m >= 2g + 1, computes exact
per-configuration thresholds and checks the bound across the catalog of case
families a log Kodaira dimension one affine surface can fall into.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from multiprocessing import Pool, cpu_count
from typing import Optional

import pandas as pd

import consts
from classification import Kappa, zariski
from errors import FiberDataMismatchError, FibrationDataError, NotLogKodairaOneError
from lattice_core import classes_equal

logger = logging.getLogger(__name__)


class _Infinity:
    """Infinite fiber multiplicity; 1/INF = 0."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return "INF"


INF = _Infinity()


def _inverse(multiplicity):
    return Fraction(0) if multiplicity is INF else Fraction(1, multiplicity)


def _check_multiplicity(multiplicity):
    if multiplicity is INF:
        return
    if isinstance(multiplicity, bool) or not isinstance(multiplicity, int) or multiplicity < 1:
        raise FibrationDataError(f"fiber multiplicity must be a positive integer or inf, got {multiplicity!r}")


def d_value(branch_count, multiplicity):
    if branch_count not in (1, 2):
        raise FibrationDataError(f"branch count must be 1 or 2, got {branch_count!r}")
    _check_multiplicity(multiplicity)
    value = 1 - _inverse(multiplicity)
    return value if branch_count == 2 else value / 2


def parse_multiplicity(text):
    text = text.strip().lower()
    if text in ("inf", "infinity", "+inf"):
        return INF
    try:
        return int(text)
    except ValueError as exc:
        raise FibrationDataError(f"bad fiber multiplicity '{text}'") from exc


@dataclass(frozen=True)
class BoundaryFiberDatum:
    branch_count: int
    multiplicity: object

    def __post_init__(self):
        d = d_value(self.branch_count, self.multiplicity)
        if self.branch_count == 1 and 0 < d != Fraction(1, 2):
            raise FibrationDataError(
                f"a fiber meeting the horizontal part once has d in {{0, 1/2}}, "
                f"multiplicity {self.multiplicity} gives {d}")

    @property
    def d(self):
        return d_value(self.branch_count, self.multiplicity)

    @property
    def is_split(self):
        return self.branch_count == 2

    def sort_key(self):
        finite = self.multiplicity is not INF
        return (-self.d, -self.branch_count, finite, self.multiplicity if finite else 0)

    def format(self):
        return f"({self.branch_count},{self.multiplicity})"


class HorizontalType(Enum):
    TWO_SECTIONS = "2sec"
    SEPARABLE = "sep"
    INSEPARABLE = "insep"

    @classmethod
    def from_tag(cls, tag):
        for member in cls:
            if member.value == tag:
                return member
        raise FibrationDataError(f"unknown horizontal type '{tag}', expected 2sec, sep or insep")


@dataclass(frozen=True)
class FibrationData:
    g: int
    t: int
    horizontal_type: HorizontalType
    fibers: tuple

    @classmethod
    def create(cls, g, t, horizontal_type, fibers=()):
        """Normalize (drop d = 0 fibers, sort by descending d) and validate."""
        if isinstance(horizontal_type, str):
            horizontal_type = HorizontalType.from_tag(horizontal_type)
        fibers = tuple(f if isinstance(f, BoundaryFiberDatum) else BoundaryFiberDatum(*f) for f in fibers)
        fibers = tuple(sorted((f for f in fibers if f.d > 0), key=BoundaryFiberDatum.sort_key))
        data = cls(int(g), int(t), horizontal_type, fibers)
        data.validate()
        return data

    @property
    def s(self):
        return len(self.fibers)

    @property
    def d_values(self):
        return tuple(f.d for f in self.fibers)

    @property
    def epsilon(self):
        return 2 * self.g - 2 + self.t + sum(self.d_values, Fraction(0))

    def validate(self):
        if self.g < 0:
            raise FibrationDataError("base genus must be nonnegative")
        if self.horizontal_type is HorizontalType.INSEPARABLE:
            if self.t != 1 - self.g:
                raise FibrationDataError(f"an inseparable 2-section forces t = 1 - g = {1 - self.g}, got {self.t}")
            if any(f.branch_count != 1 for f in self.fibers):
                raise FibrationDataError("every fiber meets an inseparable 2-section once")
        elif self.t < 0:
            raise FibrationDataError(f"t must be nonnegative for {self.horizontal_type.value}, got {self.t}")
        if self.epsilon <= 0:
            raise NotLogKodairaOneError(
                f"not log Kodaira dimension one: 2g - 2 + t + sum(d) = {self.epsilon} <= 0")

    def format(self):
        fibers = ",".join(f.format() for f in self.fibers)
        return f"g={self.g} t={self.t} horiz={self.horizontal_type.value} fibers={fibers}"


def parse_fibration_data(text):
    """Parse the inline form `g=<int> t=<int> horiz=<tag> fibers=(b,m),...`."""
    fields = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise FibrationDataError(f"expected key=value, got '{token}'")
        fields[key] = value
    missing = [k for k in ("g", "t", "horiz") if k not in fields]
    if missing:
        raise FibrationDataError("missing field(s): " + ", ".join(missing))
    unknown = sorted(set(fields) - {"g", "t", "horiz", "fibers"})
    if unknown:
        raise FibrationDataError("unknown field(s): " + ", ".join(unknown))
    try:
        g, t = int(fields["g"]), int(fields["t"])
    except ValueError as exc:
        raise FibrationDataError("g and t must be integers") from exc

    fibers = []
    body = fields.get("fibers", "").replace(" ", "")
    while body:
        if not body.startswith("("):
            raise FibrationDataError(f"bad fiber list near '{body}'")
        close = body.find(")")
        if close < 0:
            raise FibrationDataError("unbalanced parenthesis in fiber list")
        parts = body[1:close].split(",")
        if len(parts) != 2:
            raise FibrationDataError(f"a fiber is (branch_count,multiplicity), got '({body[1:close]})'")
        try:
            branch_count = int(parts[0])
        except ValueError as exc:
            raise FibrationDataError(f"bad branch count '{parts[0]}'") from exc
        fibers.append(BoundaryFiberDatum(branch_count, parse_multiplicity(parts[1])))
        body = body[close + 1:].lstrip(",")
    return FibrationData.create(g, t, fields["horiz"], fibers)


def delta_m_degree(data, m):
    return m * (2 * data.g - 2 + data.t) + sum(math.floor(m * d) for d in data.d_values)


def fibration_criterion(data, m):
    return delta_m_degree(data, m) >= 2 * data.g + 1


def horizon(data):
    """Past this m the criterion always holds, since floor(x) > x - 1."""
    return max(1, math.ceil((2 * data.g + 1 + data.s) / data.epsilon))


def threshold_with_horizon(data):
    data.validate()
    top = horizon(data)
    if top > consts.HORIZON_SCAN_LIMIT:
        raise FibrationDataError(f"horizon {top} exceeds the scan limit {consts.HORIZON_SCAN_LIMIT}")
    m = top
    while m >= 1 and fibration_criterion(data, m):
        m -= 1
    return m + 1, top


def fibration_threshold(data):
    return threshold_with_horizon(data)[0]


# --- case families -------------------------------------------------------

def _count_half(fibers):
    return sum(1 for f in fibers if not f.is_split)


FIBER_RULES = {
    "any": lambda fibers: True,
    "split": lambda fibers: all(f.is_split for f in fibers),
    "split_one_infinite": lambda fibers: (all(f.is_split for f in fibers)
                                          and any(f.multiplicity is INF for f in fibers)),
    "half": lambda fibers: all(not f.is_split for f in fibers),
    "some_split": lambda fibers: any(f.is_split for f in fibers),
    "branch_one": lambda fibers: _count_half(fibers) == 1,
    "branch_two": lambda fibers: _count_half(fibers) == 2,
}


@dataclass(frozen=True)
class CaseFamily:
    case_id: str
    summary: str
    horizontal_types: tuple = ()
    genus: tuple = (0, 0)  # (min, max or None)
    t_range: Optional[tuple] = None  # None means t = 1 - g
    s_range: tuple = (0, None)
    fiber_rule: str = "any"
    claimed_threshold: Optional[int] = None
    impossible: bool = False
    reason: str = ""

    @property
    def t_is_one_minus_g(self):
        return self.t_range is None

    def t_for(self, g):
        return 1 - g if self.t_is_one_minus_g else self.t_range[0]

    def admits(self, fibers):
        s_min, s_max = self.s_range
        if len(fibers) < s_min or (s_max is not None and len(fibers) > s_max):
            return False
        return FIBER_RULES[self.fiber_rule](fibers)

    def constraints(self):
        g_min, g_max = self.genus
        if g_max == g_min:
            genus = f"g={g_min}"
        elif g_max is None:
            genus = f"g>={g_min}"
        else:
            genus = f"{g_min}<=g<={g_max}"
        if self.t_is_one_minus_g:
            t = "t=1-g"
        elif self.t_range[1] is None:
            t = f"t>={self.t_range[0]}"
        elif self.t_range[0] == self.t_range[1]:
            t = f"t={self.t_range[0]}"
        else:
            t = f"{self.t_range[0]}<=t<={self.t_range[1]}"
        s_min, s_max = self.s_range
        s = f"s={s_min}" if s_max == s_min else f"s>={s_min}"
        horiz = "|".join(h.value for h in self.horizontal_types)
        return f"{genus} {t} horiz={horiz} {s} fibers={self.fiber_rule}"


_TWO_SEC = HorizontalType.TWO_SECTIONS
_SEP = HorizontalType.SEPARABLE
_INSEP = HorizontalType.INSEPARABLE

_CATALOG = (
    CaseFamily("1", "t >= 3", (_TWO_SEC, _SEP), (0, None), (3, None), (0, None), "any", 1),
    CaseFamily("2-1", "g >= 2, 0 <= t <= 2", (_TWO_SEC, _SEP), (2, None), (0, 2), (0, None), "any", 3),
    CaseFamily("2-2", "g >= 2, inseparable 2-section", (_INSEP,), (2, None), None, (0, None), "half", 5),
    CaseFamily("3-1", "g = 1, t = 2", (_TWO_SEC, _SEP), (1, 1), (2, 2), (0, None), "any", 2),
    CaseFamily("3-2", "g = 1, t = 1", (_TWO_SEC, _SEP), (1, 1), (1, 1), (0, None), "any", 3),
    CaseFamily("4-1", "g = 1, t = 0, disjoint sections, one boundary fiber",
               (_TWO_SEC,), (1, 1), (0, 0), (1, None), "split_one_infinite", 3),
    CaseFamily("4-2", "g = 1, t = 0, etale 2-section", (_SEP,), (1, 1), (0, 0), (1, None), "split", 6),
    CaseFamily("4-3", "g = 1, t = 0, inseparable 2-section", (_INSEP,), (1, 1), None, (1, None), "half", 6),
    CaseFamily("5-1", "g = 0, t = 2, two sections", (_TWO_SEC,), (0, 0), (2, 2), (1, None), "split", 2),
    CaseFamily("5-2-1", "g = 0, t = 2, elliptic 2-section, some fiber met twice",
               (_SEP,), (0, 0), (2, 2), (1, None), "some_split", 2),
    CaseFamily("5-2-2", "g = 0, t = 2, elliptic 2-section, every fiber met once",
               (_SEP,), (0, 0), (2, 2), (1, None), "half", 2),
    CaseFamily("5-3", "g = 0, t = 2, inseparable 2-section", (_INSEP,), (0, 0), (2, 2),
               impossible=True, reason="an inseparable 2-section forces t = 1 - g = 1, not 2"),
    CaseFamily("6-1-1", "g = 0, t = 1, two sections, s >= 3", (_TWO_SEC,), (0, 0), (1, 1), (3, None), "split", 4),
    CaseFamily("6-1-2", "g = 0, t = 1, two sections, s = 2", (_TWO_SEC,), (0, 0), (1, 1), (2, 2), "split", 8),
    CaseFamily("6-2-1", "g = 0, t = 1, rational 2-section, no branch fiber",
               (_SEP,), (0, 0), (1, 1), (2, None), "split", 8),
    CaseFamily("6-2-2", "g = 0, t = 1, rational 2-section, one branch fiber",
               (_SEP,), (0, 0), (1, 1), (2, None), "branch_one", 8),
    CaseFamily("6-2-3", "g = 0, t = 1, rational 2-section, both branch fibers",
               (_SEP,), (0, 0), (1, 1), (3, None), "branch_two", 4),
    CaseFamily("6-3", "g = 0, t = 1, inseparable 2-section", (_INSEP,), (0, 0), None, (3, None), "half", 4),
    CaseFamily("7-1-1", "g = 0, t = 0, disjoint sections, s >= 4",
               (_TWO_SEC,), (0, 0), (0, 0), (4, None), "split_one_infinite", 4),
    CaseFamily("7-1-2", "g = 0, t = 0, disjoint sections, s = 3",
               (_TWO_SEC,), (0, 0), (0, 0), (3, 3), "split_one_infinite", 8),
    CaseFamily("7-2", "g = 0, t = 0, irreducible 2-section", (_SEP, _INSEP), (0, 0), (0, 0),
               impossible=True, reason="an unramified double cover of P1 does not exist"),
)


def case_catalog():
    return list(_CATALOG)


def find_case(case_id):
    for family in _CATALOG:
        if family.case_id == case_id:
            return family
    raise KeyError(case_id)


def _fiber_kinds(multiplicities):
    kinds = [BoundaryFiberDatum(2, m) for m in multiplicities]
    kinds.append(BoundaryFiberDatum(2, INF))
    kinds.append(BoundaryFiberDatum(1, INF))
    return kinds


def _fiber_lists(family, s_low, s_high, multiplicities):
    kinds = _fiber_kinds(multiplicities)
    for s in range(s_low, s_high + 1):
        for combo in itertools.combinations_with_replacement(kinds, s):
            if family.admits(combo):
                yield combo


def _instance(family, g, t, horizontal_type, fibers):
    try:
        return FibrationData.create(g, t, horizontal_type, fibers)
    except NotLogKodairaOneError:
        return None


def reduced_instances(family, g=None):
    """Family members at one genus over the residual grid of fibers.

    Larger t and extra fibers only raise deg delta_m, and floor(m*d) is
    monotone in d, so these instances bound the whole family from below.
    """
    if family.impossible:
        return []
    if g is None:
        g = family.genus[0]
    s_min, s_max = family.s_range
    s_high = s_min + consts.REDUCTION_EXTRA_FIBERS
    if s_max is not None:
        s_high = min(s_high, s_max)
    horizontal_type = family.horizontal_types[0]
    instances = []
    for fibers in _fiber_lists(family, s_min, s_high, consts.REDUCTION_MULTIPLICITIES):
        data = _instance(family, g, family.t_for(g), horizontal_type, fibers)
        if data is not None:
            instances.append(data)
    return instances


def enumerate_family(family, g_max, s_max, multiplicity_max, t_max):
    """Every member of `family` inside a finite parameter grid."""
    if family.impossible:
        return []
    g_min, family_g_max = family.genus
    g_high = g_max if family_g_max is None else min(g_max, family_g_max)
    s_low, family_s_max = family.s_range
    s_high = s_max if family_s_max is None else min(s_max, family_s_max)
    fiber_lists = list(_fiber_lists(family, s_low, s_high, range(2, multiplicity_max + 1)))
    members = []
    for g in range(g_min, g_high + 1):
        if family.t_is_one_minus_g:
            t_values = [1 - g]
        else:
            t_low, t_high = family.t_range
            t_values = range(t_low, (t_max if t_high is None else min(t_high, t_max)) + 1)
        for t in t_values:
            for horizontal_type in family.horizontal_types:
                for fibers in fiber_lists:
                    data = _instance(family, g, t, horizontal_type, fibers)
                    if data is not None:
                        members.append(data)
    return members


def _genus_slope(family, m):
    return m - 2 if family.t_is_one_minus_g else 2 * m - 2


def _failing_genus(family, fibers, m):
    """Least genus at which the reduced instance fails when the slack shrinks with g."""
    g = family.genus[0]
    while True:
        data = _instance(family, g, family.t_for(g), family.horizontal_types[0], fibers)
        if data is not None and not fibration_criterion(data, m):
            return data
        g += 1


@dataclass(frozen=True)
class CaseVerdict:
    case_id: str
    status: str  # holds, fails or impossible
    claimed_threshold: Optional[int]
    exact_threshold: Optional[int]
    witnesses: tuple = ()
    reason: str = ""

    @property
    def holds(self):
        return self.status != "fails"


def verify_family(family, m):
    if family.impossible:
        return CaseVerdict(family.case_id, "impossible", None, None, (), family.reason)

    instances = reduced_instances(family)
    exact = max(fibration_threshold(data) for data in instances)
    witnesses = [data for data in instances if not fibration_criterion(data, m)]
    if family.genus[1] is None and _genus_slope(family, m) < 0 and not witnesses:
        witnesses.append(_failing_genus(family, instances[0].fibers, m))
    status = "fails" if witnesses else "holds"
    logger.debug("Case %s at m=%d: %s", family.case_id, m, status)
    return CaseVerdict(family.case_id, status, family.claimed_threshold, exact, tuple(witnesses))


@dataclass(frozen=True)
class VerificationReport:
    m: int
    verdicts: tuple

    @property
    def all_hold(self):
        return all(v.holds for v in self.verdicts)

    @property
    def failing_cases(self):
        return [v.case_id for v in self.verdicts if not v.holds]

    def verdict(self, case_id):
        for v in self.verdicts:
            if v.case_id == case_id:
                return v
        raise KeyError(case_id)

    def to_frame(self):
        rows = []
        for v in self.verdicts:
            rows.append({
                "case": v.case_id,
                "status": v.status,
                "claimed": "-" if v.claimed_threshold is None else v.claimed_threshold,
                "exact": "-" if v.exact_threshold is None else v.exact_threshold,
                "witnesses": "; ".join(w.format() for w in v.witnesses) or v.reason,
            })
        return pd.DataFrame(rows, columns=["case", "status", "claimed", "exact", "witnesses"])


def verify_global_bound(m, processes=consts.DEFAULT_JOBS):
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise FibrationDataError(f"m must be a positive integer, got {m!r}")
    arguments = [(family, m) for family in _CATALOG]
    if processes == 0:
        processes = cpu_count()
    if processes > 1:
        with Pool(processes=processes) as pool:
            verdicts = pool.starmap(verify_family, arguments)
    else:
        verdicts = [verify_family(*args) for args in arguments]
    report = VerificationReport(m, tuple(verdicts))
    logger.info("Verified %d case families at m=%d: %s", len(verdicts), m,
                "all hold" if report.all_hold else "failing " + ", ".join(report.failing_cases))
    return report


# --- fibration data from a model ------------------------------------------

def _assignment(model, assignment):
    assignment = assignment if assignment is not None else model.fibration
    if assignment is None:
        raise FibrationDataError("model has no fiber assignment")
    return assignment


def fiber_class(model, assignment=None):
    """Class of a fiber, either the declared general fiber or the common class of all fiber groups."""
    assignment = _assignment(model, assignment)
    if assignment.general:
        return model.curve(assignment.general).divisor_class
    classes = []
    for group in assignment.fibers:
        total = model.curve(group.components[0][0]).divisor_class * 0
        for name, mult in group.components:
            total = total + model.curve(name).divisor_class * mult
        classes.append((group.label, total))
    if not classes:
        raise FibrationDataError("fiber assignment names neither a general fiber nor fiber groups")
    first_label, first = classes[0]
    for label, cls in classes[1:]:
        if not classes_equal(cls, first):
            raise FiberDataMismatchError(f"fiber groups {first_label} and {label} have different classes")
    return first


def _horizontal_degree(model, assignment):
    kind = HorizontalType.from_tag(assignment.horizontal_type)
    if kind is HorizontalType.TWO_SECTIONS:
        if len(assignment.horizontal) != 2:
            raise FibrationDataError("two sections need two horizontal curves")
        a, b = assignment.horizontal
        return kind, int(model.intersect(a, b))
    if kind is HorizontalType.SEPARABLE:
        if assignment.branch_points is None:
            raise FibrationDataError("a separable 2-section needs branch_points")
        if assignment.branch_points % 2:
            raise FibrationDataError(f"odd number of branch points: {assignment.branch_points}")
        return kind, assignment.branch_points // 2
    return kind, 1 - assignment.base_genus


def _multiplicity_from_d(label, branch_count, d):
    if d == 0:
        return 1
    if branch_count == 1:
        if d == Fraction(1, 2):
            return INF
    elif d == 1:
        return INF
    elif 0 < d < 1 and (1 / (1 - d)).denominator == 1:
        return int(1 / (1 - d))
    raise FiberDataMismatchError(f"fiber {label}: d = {d} fits no multiplicity with branch count {branch_count}")


def extract_fibration_data(model, assignment=None):
    assignment = _assignment(model, assignment)
    data_z = zariski(model)
    if data_z.kappa is not Kappa.ONE:
        raise FibrationDataError(f"model has kappa {data_z.kappa.label}, fibration data needs kappa 1")
    kind, t = _horizontal_degree(model, assignment)

    boundary = set(model.boundary_names)
    fibers = []
    for group in assignment.fibers:
        values = {data_z.dsharp.coefficient(name) for name, mult in group.components
                  if mult == 1 and name in boundary}
        if len(values) > 1:
            raise FiberDataMismatchError(
                f"fiber {group.label}: reduced boundary components disagree on d: "
                + ", ".join(str(v) for v in sorted(values)))
        d = values.pop() if values else Fraction(0)
        fibers.append(BoundaryFiberDatum(group.branch_count,
                                         _multiplicity_from_d(group.label, group.branch_count, d)))

    data = FibrationData.create(assignment.base_genus, t, kind, fibers)
    expected = fiber_class(model, assignment) * data.epsilon
    if not classes_equal(data_z.nef_class, expected):
        raise FiberDataMismatchError(
            f"K + dsharp differs from {data.epsilon} times the fiber class")
    logger.info("Extracted fibration data %s", data.format())
    return data


def fiber_boundary_degree(model, assignment=None):
    """F.D for the fiber class of the assignment."""
    return model.lattice.pairing(fiber_class(model, assignment), model.class_of(model.boundary))
