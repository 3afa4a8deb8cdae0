"""Combinatorial SNC pairs: surface models, their file format, blow-ups and contractions.

A model is an intersection lattice plus the curves it tracks. Curves in the
boundary make up D. Models are immutable; every operation returns a new one.
"""
import logging
import re
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

import networkx as nx
import sympy
from sympy.matrices.normalforms import hermite_normal_form

from errors import (ContractionError, LatticeError, LogSurfInputError, ModelParseError,
                    ModelValidationError, UnknownCurveError)
from lattice_core import DivisorClass, IntersectionLattice, QDivisor, solve_exact
from utils import format_rational

logger = logging.getLogger(__name__)

HORIZONTAL_TAGS = ("2sec", "sep", "insep")


def base_lattice(tag, parameter=None):
    if tag == "p1xp1":
        return IntersectionLattice(("f", "s"), ((0, 1), (1, 0)), (-2, -2))
    if tag == "p2":
        return IntersectionLattice(("l",), ((1,),), (-3,))
    if tag == "hirzebruch":
        n = int(parameter)
        if n < 0:
            raise LatticeError("Hirzebruch index must be nonnegative")
        return IntersectionLattice(("f", "c"), ((0, 1), (1, -n)), (-(n + 2), -2))
    raise LatticeError(f"unknown base surface '{tag}'")


@dataclass(frozen=True)
class Curve:
    name: str
    divisor_class: DivisorClass
    pa: int
    in_boundary: bool


@dataclass(frozen=True)
class CurveDeclaration:
    name: str
    coeffs: tuple
    pa: int
    in_boundary: bool


@dataclass(frozen=True)
class BlowUpRecord:
    exceptional: str
    hosts: tuple
    in_boundary: bool


@dataclass(frozen=True)
class BaseSurface:
    tag: str
    parameter: Optional[int]
    lattice: IntersectionLattice


@dataclass(frozen=True)
class Provenance:
    base: BaseSurface
    steps: tuple = ()


@dataclass(frozen=True)
class ModelFlags:
    affine_claimed: bool = False
    base_genus_hint: Optional[int] = None


@dataclass(frozen=True)
class FiberGroup:
    label: str
    components: tuple  # ((curve name, multiplicity), ...)
    branch_count: int

    def curve_names(self):
        return tuple(name for name, _ in self.components)


@dataclass(frozen=True)
class FiberAssignment:
    base_genus: int
    horizontal_type: str
    horizontal: tuple
    branch_points: Optional[int] = None
    general: Optional[str] = None
    fibers: tuple = ()

    def curve_names(self):
        names = list(self.horizontal)
        if self.general:
            names.append(self.general)
        for group in self.fibers:
            names.extend(group.curve_names())
        return tuple(names)


@dataclass(frozen=True)
class SurfaceModel:
    lattice: IntersectionLattice
    curves: tuple
    provenance: Provenance
    flags: ModelFlags = ModelFlags()
    transversal: tuple = ()
    witness: Optional[QDivisor] = None
    fibration: Optional[FiberAssignment] = None

    def curve(self, name):
        for c in self.curves:
            if c.name == name:
                return c
        raise UnknownCurveError(name)

    def has_curve(self, name):
        return any(c.name == name for c in self.curves)

    @property
    def curve_names(self):
        return tuple(c.name for c in self.curves)

    @property
    def boundary_names(self):
        return tuple(c.name for c in self.curves if c.in_boundary)

    @property
    def boundary(self):
        return QDivisor(tuple((name, 1) for name in self.boundary_names))

    @property
    def canonical_class(self):
        return self.lattice.canonical_class

    def class_of(self, divisor):
        total = DivisorClass.zero(self.lattice.rank)
        for name, coeff in divisor.terms:
            total = total + self.curve(name).divisor_class * coeff
        return total

    def intersect(self, a, b):
        return self.lattice.pairing(self.curve(a).divisor_class, self.curve(b).divisor_class)

    def self_intersection(self, name):
        return self.intersect(name, name)

    def canonical_degree(self, name):
        return self.lattice.pairing(self.canonical_class, self.curve(name).divisor_class)

    def is_minus_one_curve(self, name):
        c = self.curve(name)
        return c.pa == 0 and self.self_intersection(name) == -1


def empty_model(tag, parameter=None, lattice=None, flags=ModelFlags()):
    if lattice is None:
        lattice = base_lattice(tag, parameter)
    return SurfaceModel(lattice=lattice, curves=(),
                        provenance=Provenance(BaseSurface(tag, parameter, lattice)), flags=flags)


def add_curve(model, name, coeffs, pa, in_boundary):
    if model.has_curve(name):
        raise ModelValidationError([f"duplicate curve name '{name}'"])
    coeffs = tuple(int(c) for c in coeffs)
    if len(coeffs) != model.lattice.rank:
        raise LogSurfInputError(
            f"class of '{name}' has {len(coeffs)} entries, lattice rank is {model.lattice.rank}")
    curve = Curve(name, DivisorClass(coeffs), int(pa), bool(in_boundary))
    step = CurveDeclaration(name, coeffs, int(pa), bool(in_boundary))
    return replace(model, curves=model.curves + (curve,),
                   provenance=replace(model.provenance, steps=model.provenance.steps + (step,)))


def _fresh_basis_name(names):
    k = 1
    while f"e{k}" in names:
        k += 1
    return f"e{k}"


def blow_up(model, exceptional, hosts=(), in_boundary=False):
    """Blow up a point lying on every curve in `hosts` (a free point if empty).

    The lattice gains an orthogonal class e with e^2 = -1, K grows by e and
    every host loses one copy of e. The exceptional curve is appended.
    """
    hosts = tuple(hosts)
    if model.has_curve(exceptional):
        raise ModelValidationError([f"duplicate curve name '{exceptional}'"])
    if len(set(hosts)) != len(hosts):
        raise LogSurfInputError(f"repeated host curve in blow-up of '{exceptional}'")
    for name in hosts:
        model.curve(name)
    for i, a in enumerate(hosts):
        for b in hosts[i + 1:]:
            if model.intersect(a, b) <= 0:
                raise LogSurfInputError(f"curves '{a}' and '{b}' are disjoint")

    old = model.lattice
    n = old.rank
    gram = [list(row) + [0] for row in old.gram] + [[0] * n + [-1]]
    lattice = IntersectionLattice(old.basis_names + (_fresh_basis_name(old.basis_names),),
                                  gram, old.canonical + (1,))
    e = DivisorClass.basis(n + 1, n)

    curves = []
    for c in model.curves:
        cls = DivisorClass(c.divisor_class.coeffs + (0,))
        if c.name in hosts:
            cls = cls - e
        curves.append(replace(c, divisor_class=cls))
    curves.append(Curve(exceptional, e, 0, bool(in_boundary)))

    step = BlowUpRecord(exceptional, hosts, bool(in_boundary))
    logger.debug("Blew up %s at %s", exceptional, ",".join(hosts) or "a free point")
    return replace(model, lattice=lattice, curves=tuple(curves),
                   provenance=replace(model.provenance, steps=model.provenance.steps + (step,)))


def _orthogonal_basis(columns, e_coeffs):
    """Integral basis of the span of `columns` (the pushed-forward old basis)."""
    n = len(e_coeffs)
    unit = [i for i in range(n) if abs(e_coeffs[i]) == 1]
    if unit:
        k = unit[-1]
        keep = [i for i in range(n) if i != k]
        return [columns[i] for i in keep], keep
    matrix = sympy.Matrix([[columns[j][i] for j in range(n)] for i in range(n)])
    hnf = hermite_normal_form(matrix)
    basis = []
    for j in range(hnf.cols):
        col = [int(hnf[i, j]) for i in range(n)]
        if any(col):
            basis.append(col)
    if len(basis) != n - 1:
        raise ContractionError("integral reduction did not produce a rank n-1 basis")
    return basis, None


def contract_with_pullback(model, curve_name):
    """Contract a (-1)-curve; also return the pullback matrix (old rank x new rank)."""
    if not model.has_curve(curve_name):
        raise UnknownCurveError(curve_name)
    if not model.is_minus_one_curve(curve_name):
        raise ContractionError(f"'{curve_name}' is not a (-1)-curve of genus 0")

    lattice = model.lattice
    n = lattice.rank
    e = model.curve(curve_name).divisor_class
    if not e.is_integral():
        raise ContractionError(f"class of '{curve_name}' is not integral")
    e_coeffs = [int(c) for c in e.coeffs]

    def push(x):
        return x + e * lattice.pairing(x, e)

    columns = [[int(c) for c in push(DivisorClass.basis(n, i)).coeffs] for i in range(n)]
    basis, kept = _orthogonal_basis(columns, e_coeffs)
    if kept is not None:
        names = tuple(lattice.basis_names[i] for i in kept)
    else:
        names = tuple(f"u{i + 1}" for i in range(n - 1))

    basis_classes = [DivisorClass(col) for col in basis]
    new_gram = [[int(lattice.pairing(a, b)) for b in basis_classes] for a in basis_classes]

    def coordinates(x):
        image = push(x)
        rhs = [lattice.pairing(b, image) for b in basis_classes]
        return DivisorClass(solve_exact(new_gram, rhs)) if basis_classes else DivisorClass(())

    canonical = coordinates(lattice.canonical_class)
    if not canonical.is_integral():
        raise ContractionError("pushed-forward canonical class is not integral")
    new_lattice = IntersectionLattice(names, new_gram, tuple(int(c) for c in canonical.coeffs))

    curves = []
    for c in model.curves:
        if c.name == curve_name:
            continue
        k = int(lattice.pairing(c.divisor_class, e))
        cls = coordinates(c.divisor_class)
        if not cls.is_integral():
            raise ContractionError(f"image of '{c.name}' is not integral")
        curves.append(replace(c, divisor_class=cls, pa=c.pa + k * (k - 1) // 2))

    steps = tuple(CurveDeclaration(c.name, tuple(int(v) for v in c.divisor_class.coeffs), c.pa, c.in_boundary)
                  for c in curves)
    provenance = Provenance(BaseSurface("abstract", None, new_lattice), steps)

    transversal = tuple(p for p in model.transversal if curve_name not in p)
    witness = model.witness
    if witness is not None and curve_name in witness.support():
        logger.debug("Dropping ample witness that mentions %s", curve_name)
        witness = None
    fibration = model.fibration
    if fibration is not None and curve_name in fibration.curve_names():
        logger.debug("Dropping fiber assignment that mentions %s", curve_name)
        fibration = None

    pullback = tuple(tuple(basis[j][i] for j in range(len(basis))) for i in range(n))
    logger.debug("Contracted %s, rank %d -> %d", curve_name, n, n - 1)
    contracted = SurfaceModel(new_lattice, tuple(curves), provenance, model.flags,
                              transversal, witness, fibration)
    return contracted, pullback


def contract(model, curve_name):
    return contract_with_pullback(model, curve_name)[0]


def boundary_dual_graph(model):
    """Weighted dual graph of the boundary: one node per component, edge weight = intersection."""
    graph = nx.Graph()
    names = model.boundary_names
    for name in names:
        graph.add_node(name, self_intersection=model.self_intersection(name), pa=model.curve(name).pa)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            value = model.intersect(a, b)
            if value > 0:
                graph.add_edge(a, b, weight=int(value))
    return graph


def pushforward_to_base(model, x):
    """Image of a class on the base surface of the model's replay history."""
    rank = model.provenance.base.lattice.rank
    return DivisorClass(x.coeffs[:rank])


def validate(model):
    """List every broken model invariant; an empty list means the model is valid."""
    violations = []
    names = model.curve_names
    seen = set()
    for name in names:
        if name in seen:
            violations.append(f"duplicate curve name: {name}")
        seen.add(name)

    for c in model.curves:
        if not c.divisor_class.is_integral():
            violations.append(f"non-integral class: {c.name}")
        if c.pa < 0:
            violations.append(f"negative arithmetic genus: {c.name}")
        expected = model.lattice.adjunction_pa(c.divisor_class)
        if expected != c.pa:
            violations.append(
                f"adjunction mismatch: {c.name} declares pa={c.pa}, adjunction gives {format_rational(expected)}")

    declared = set(model.transversal)
    boundary = model.boundary_names
    for i, a in enumerate(boundary):
        for b in boundary[i + 1:]:
            value = model.intersect(a, b)
            if value < 0:
                violations.append(f"negative intersection: {a}, {b} ({format_rational(value)})")
            elif value >= 2 and tuple(sorted((a, b))) not in declared:
                violations.append(f"non-SNC tangency: {a}, {b} meet with multiplicity {format_rational(value)}")

    for pair in model.transversal:
        for name in pair:
            if name not in seen:
                violations.append(f"transversal declaration names unknown curve: {name}")

    if model.flags.affine_claimed:
        graph = boundary_dual_graph(model)
        if graph.number_of_nodes() == 0 or not nx.is_connected(graph):
            violations.append("boundary not connected")

    if model.witness is not None:
        for name in model.witness.support():
            if name not in seen:
                violations.append(f"ample witness names unknown curve: {name}")

    if model.fibration is not None:
        for name in model.fibration.curve_names():
            if name not in seen:
                violations.append(f"fiber assignment names unknown curve: {name}")
        for group in model.fibration.fibers:
            if group.branch_count not in (1, 2):
                violations.append(f"fiber {group.label}: branch count must be 1 or 2")
            if any(mult < 1 for _, mult in group.components):
                violations.append(f"fiber {group.label}: multiplicities must be positive")
        hint = model.flags.base_genus_hint
        if hint is not None and hint != model.fibration.base_genus:
            violations.append(f"base genus mismatch: surface declares {hint}, fibration declares "
                              f"{model.fibration.base_genus}")
    return violations


# --- model file grammar -------------------------------------------------

_YES_NO = {"yes": True, "no": False}


def _tokens(line):
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", line)]


class _ModelParser:
    def __init__(self):
        self.model = None
        self.abstract = None  # pending abstract surface data
        self.base_genus = None
        self.affine = False
        self.transversal = []
        self.witness = None
        self.fibration = None
        self.fibers = []
        self.deferred = []  # (line, column, curve name) checked after all curves exist

    def fail(self, message, line, column=None):
        raise ModelParseError(message, line, column)

    def options(self, tokens, lineno, allowed):
        result = {}
        for text, col in tokens:
            if "=" not in text:
                self.fail(f"expected key=value, got '{text}'", lineno, col)
            key, value = text.split("=", 1)
            if key not in allowed:
                self.fail(f"unexpected option '{key}'", lineno, col)
            if key in result:
                self.fail(f"repeated option '{key}'", lineno, col)
            result[key] = (value, col)
        return result

    def integer(self, text, lineno, col):
        try:
            return int(text)
        except ValueError:
            self.fail(f"expected an integer, got '{text}'", lineno, col)

    def integers(self, text, lineno, col):
        if text == "":
            return ()
        return tuple(self.integer(t, lineno, col) for t in text.split(","))

    def yes_no(self, text, lineno, col):
        if text not in _YES_NO:
            self.fail(f"expected yes or no, got '{text}'", lineno, col)
        return _YES_NO[text]

    def require_model(self, lineno):
        if self.model is None:
            if self.abstract is None:
                self.fail("surface statement must come first", lineno, 1)
            self.materialize(lineno)
        return self.model

    def materialize(self, lineno):
        rank, names, gram, canonical = self.abstract
        if gram is None or canonical is None:
            self.fail("abstract surface needs gram and canonical statements", lineno)
        try:
            lattice = IntersectionLattice(names, gram, canonical)
        except LatticeError as exc:
            self.fail(str(exc), lineno)
        self.model = empty_model("abstract", lattice=lattice)
        self.abstract = None

    def parse(self, text):
        lineno = 0
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0]
            tokens = _tokens(line)
            if not tokens:
                continue
            keyword, col = tokens[0]
            handler = getattr(self, "stmt_" + keyword, None)
            if handler is None:
                self.fail(f"unknown statement '{keyword}'", lineno, col)
            handler(tokens[1:], lineno)
        if self.model is None and self.abstract is None:
            self.fail("missing surface statement", max(lineno, 1))
        self.require_model(lineno)
        return self.finish(lineno)

    def stmt_surface(self, args, lineno):
        if self.model is not None or self.abstract is not None:
            self.fail("repeated surface statement", lineno, 1)
        if not args:
            self.fail("surface needs a type", lineno)
        tag, col = args[0]
        if tag in ("p1xp1", "p2"):
            if len(args) != 1:
                self.fail("unexpected arguments", lineno, args[1][1])
            self.model = empty_model(tag)
        elif tag == "hirzebruch":
            if len(args) != 2:
                self.fail("hirzebruch needs one integer parameter", lineno, col)
            n = self.integer(args[1][0], lineno, args[1][1])
            try:
                self.model = empty_model(tag, n)
            except LatticeError as exc:
                self.fail(str(exc), lineno, args[1][1])
        elif tag == "abstract":
            opts = self.options(args[1:], lineno, ("rank", "names"))
            if "rank" not in opts:
                self.fail("abstract surface needs rank=<r>", lineno, col)
            rank = self.integer(opts["rank"][0], lineno, opts["rank"][1])
            if rank < 1:
                self.fail("rank must be positive", lineno, opts["rank"][1])
            if "names" in opts:
                names = tuple(opts["names"][0].split(","))
                if len(names) != rank:
                    self.fail(f"expected {rank} basis names", lineno, opts["names"][1])
            else:
                names = tuple(f"b{i + 1}" for i in range(rank))
            self.abstract = (rank, names, None, None)
        else:
            self.fail(f"unknown surface type '{tag}'", lineno, col)

    def stmt_gram(self, args, lineno):
        if self.abstract is None:
            self.fail("gram is only allowed right after an abstract surface", lineno, 1)
        rank, names, _, canonical = self.abstract
        text = "".join(t for t, _ in args)
        rows = [self.integers(row, lineno, args[0][1] if args else None) for row in text.split(";")]
        if len(rows) != rank or any(len(row) != rank for row in rows):
            self.fail(f"gram must have {rank} rows of {rank} integers", lineno, args[0][1] if args else None)
        self.abstract = (rank, names, tuple(rows), canonical)

    def stmt_canonical(self, args, lineno):
        if self.abstract is None:
            self.fail("canonical is only allowed right after an abstract surface", lineno, 1)
        rank, names, gram, _ = self.abstract
        if len(args) != 1:
            self.fail("canonical needs one comma-separated list", lineno)
        values = self.integers(args[0][0], lineno, args[0][1])
        if len(values) != rank:
            self.fail(f"canonical must have {rank} entries", lineno, args[0][1])
        self.abstract = (rank, names, gram, values)

    def stmt_base_genus(self, args, lineno):
        if len(args) != 1:
            self.fail("base_genus needs one integer", lineno)
        g = self.integer(args[0][0], lineno, args[0][1])
        if g < 0:
            self.fail("base genus must be nonnegative", lineno, args[0][1])
        self.base_genus = g

    def stmt_curve(self, args, lineno):
        model = self.require_model(lineno)
        if not args:
            self.fail("curve needs a name", lineno)
        name, col = args[0]
        opts = self.options(args[1:], lineno, ("class", "pa", "boundary"))
        for key in ("class", "pa", "boundary"):
            if key not in opts:
                self.fail(f"curve '{name}' needs {key}=", lineno, col)
        coeffs = self.integers(opts["class"][0], lineno, opts["class"][1])
        if len(coeffs) != model.lattice.rank:
            self.fail(f"class must have {model.lattice.rank} entries", lineno, opts["class"][1])
        pa = self.integer(opts["pa"][0], lineno, opts["pa"][1])
        boundary = self.yes_no(opts["boundary"][0], lineno, opts["boundary"][1])
        if model.has_curve(name):
            self.fail(f"duplicate curve name '{name}'", lineno, col)
        self.model = add_curve(model, name, coeffs, pa, boundary)

    def stmt_blowup(self, args, lineno):
        model = self.require_model(lineno)
        if not args:
            self.fail("blowup needs an exceptional curve name", lineno)
        name, col = args[0]
        rest = args[1:]
        hosts = ()
        if rest and rest[0][0] == "at":
            if len(rest) < 2:
                self.fail("blowup ... at needs curve names", lineno, rest[0][1])
            hosts = tuple(rest[1][0].split(","))
            for host in hosts:
                if not model.has_curve(host):
                    self.fail(f"unknown curve '{host}'", lineno, rest[1][1])
            rest = rest[2:]
        opts = self.options(rest, lineno, ("boundary",))
        boundary = False
        if "boundary" in opts:
            boundary = self.yes_no(opts["boundary"][0], lineno, opts["boundary"][1])
        if model.has_curve(name):
            self.fail(f"duplicate curve name '{name}'", lineno, col)
        try:
            self.model = blow_up(model, name, hosts, boundary)
        except LogSurfInputError as exc:
            self.fail(str(exc), lineno, col)

    def stmt_transversal(self, args, lineno):
        if len(args) != 1 or args[0][0].count(",") != 1:
            self.fail("transversal needs two curve names", lineno)
        a, b = args[0][0].split(",")
        self.deferred.extend([(lineno, args[0][1], a), (lineno, args[0][1], b)])
        pair = tuple(sorted((a, b)))
        if pair not in self.transversal:
            self.transversal.append(pair)

    def stmt_flags(self, args, lineno):
        opts = self.options(args, lineno, ("affine",))
        if "affine" in opts:
            self.affine = self.yes_no(opts["affine"][0], lineno, opts["affine"][1])

    def term_list(self, text, lineno, col):
        terms = []
        for item in text.split(","):
            if "*" in item:
                left, right = item.split("*", 1)
                terms.append((left, right))
            else:
                terms.append((None, item))
        return terms

    def stmt_witness(self, args, lineno):
        if not args:
            self.fail("witness needs terms", lineno)
        text = "".join(t for t, _ in args)
        col = args[0][1]
        terms = []
        for coeff, name in self.term_list(text, lineno, col):
            try:
                value = Fraction(coeff) if coeff is not None else Fraction(1)
            except (ValueError, ZeroDivisionError):
                self.fail(f"bad coefficient '{coeff}'", lineno, col)
            self.deferred.append((lineno, col, name))
            terms.append((name, value))
        self.witness = QDivisor(tuple(terms))

    def stmt_fibration(self, args, lineno):
        opts = self.options(args, lineno, ("base_genus", "horiz", "horizontal", "branch_points", "general"))
        for key in ("base_genus", "horiz", "horizontal"):
            if key not in opts:
                self.fail(f"fibration needs {key}=", lineno, 1)
        horiz, col = opts["horiz"]
        if horiz not in HORIZONTAL_TAGS:
            self.fail(f"horiz must be one of {', '.join(HORIZONTAL_TAGS)}", lineno, col)
        horizontal = tuple(opts["horizontal"][0].split(","))
        expected = 2 if horiz == "2sec" else 1
        if len(horizontal) != expected:
            self.fail(f"horiz={horiz} needs {expected} horizontal curve(s)", lineno, opts["horizontal"][1])
        for name in horizontal:
            self.deferred.append((lineno, opts["horizontal"][1], name))
        branch_points = None
        if "branch_points" in opts:
            branch_points = self.integer(opts["branch_points"][0], lineno, opts["branch_points"][1])
        general = None
        if "general" in opts:
            general = opts["general"][0]
            self.deferred.append((lineno, opts["general"][1], general))
        genus = self.integer(opts["base_genus"][0], lineno, opts["base_genus"][1])
        self.fibration = FiberAssignment(genus, horiz, horizontal, branch_points, general)

    def stmt_fiber(self, args, lineno):
        if len(args) < 3:
            self.fail("fiber needs a label, components and branches=", lineno)
        label = args[0][0]
        comp_text, comp_col = args[1]
        opts = self.options(args[2:], lineno, ("branches",))
        if "branches" not in opts:
            self.fail("fiber needs branches=", lineno, 1)
        branches = self.integer(opts["branches"][0], lineno, opts["branches"][1])
        if branches not in (1, 2):
            self.fail("branches must be 1 or 2", lineno, opts["branches"][1])
        components = []
        # components are written name*multiplicity
        for left, right in self.term_list(comp_text, lineno, comp_col):
            if left is None:
                curve, multiplicity = right, 1
            else:
                curve, multiplicity = left, self.integer(right, lineno, comp_col)
            if multiplicity < 1:
                self.fail("fiber multiplicities must be positive", lineno, comp_col)
            self.deferred.append((lineno, comp_col, curve))
            components.append((curve, multiplicity))
        self.fibers.append((lineno, FiberGroup(label, tuple(components), branches)))

    def finish(self, lineno):
        model = self.model
        for line, col, name in self.deferred:
            if not model.has_curve(name):
                self.fail(f"unknown curve '{name}'", line, col)
        fibration = self.fibration
        if self.fibers:
            if fibration is None:
                self.fail("fiber statements need a fibration statement", self.fibers[0][0], 1)
            fibration = replace(fibration, fibers=tuple(group for _, group in self.fibers))
        flags = ModelFlags(self.affine, self.base_genus)
        return replace(model, flags=flags, transversal=tuple(sorted(self.transversal)),
                       witness=self.witness, fibration=fibration)


def load_model(text):
    """Parse model-file text into a SurfaceModel.

    Raises ModelParseError (with line and column) on malformed input.
    """
    return _ModelParser().parse(text)


def _yes_no(flag):
    return "yes" if flag else "no"


def _join(values):
    return ",".join(str(v) for v in values)


def save_model(model):
    """Canonical text form: the replay history, then declarations and flags."""
    base = model.provenance.base
    lines = []
    if base.tag == "abstract":
        lattice = base.lattice
        lines.append(f"surface abstract rank={lattice.rank} names={_join(lattice.basis_names)}")
        lines.append("gram " + ";".join(_join(row) for row in lattice.gram))
        lines.append("canonical " + _join(lattice.canonical))
    elif base.tag == "hirzebruch":
        lines.append(f"surface hirzebruch {base.parameter}")
    else:
        lines.append(f"surface {base.tag}")
    if model.flags.base_genus_hint is not None:
        lines.append(f"base_genus {model.flags.base_genus_hint}")
    for step in model.provenance.steps:
        if isinstance(step, CurveDeclaration):
            lines.append(f"curve {step.name} class={_join(step.coeffs)} pa={step.pa} "
                         f"boundary={_yes_no(step.in_boundary)}")
        else:
            at = f" at {_join(step.hosts)}" if step.hosts else ""
            lines.append(f"blowup {step.exceptional}{at} boundary={_yes_no(step.in_boundary)}")
    for a, b in model.transversal:
        lines.append(f"transversal {a},{b}")
    lines.append(f"flags affine={_yes_no(model.flags.affine_claimed)}")
    if model.witness is not None:
        lines.append("witness " + ",".join(f"{format_rational(c)}*{n}" for n, c in model.witness.terms))
    fib = model.fibration
    if fib is not None:
        line = f"fibration base_genus={fib.base_genus} horiz={fib.horizontal_type} horizontal={_join(fib.horizontal)}"
        if fib.branch_points is not None:
            line += f" branch_points={fib.branch_points}"
        if fib.general is not None:
            line += f" general={fib.general}"
        lines.append(line)
        for group in fib.fibers:
            comps = ",".join(f"{name}*{mult}" for name, mult in group.components)
            lines.append(f"fiber {group.label} {comps} branches={group.branch_count}")
    return "\n".join(lines) + "\n"
