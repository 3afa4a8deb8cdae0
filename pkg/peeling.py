"""Twigs, bark and the peeling contractions, all relative to tracked curves.

The bark of D is the unique Q-divisor supported on the maximal admissible
rational twigs with (K + D - Bk(D)).Z = 0 for every twig component Z, and
D^# = D - Bk(D).
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import networkx as nx

from errors import BoundaryNotBigError, ConsistencyError, LatticeError, ModelValidationError
from lattice_core import (DivisorClass, QDivisor, classes_equal, gram_is_negative_definite, intersection_matrix,
                          solve_exact)
from pair_model import boundary_dual_graph, contract_with_pullback

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Twig:
    components: tuple  # tip first, attachment end last
    attachment: Optional[str]

    @property
    def tip(self):
        return self.components[0]


@dataclass(frozen=True)
class PeelingResult:
    dsharp: QDivisor
    bark: QDivisor
    twigs: tuple


def _is_admissible_component(model, name):
    return model.curve(name).pa == 0 and model.self_intersection(name) <= -2


def _boundary_is_admissible_rod_or_fork(model, graph):
    names = list(graph.nodes)
    if not names or not nx.is_tree(graph):
        return False
    if any(data["weight"] != 1 for _, _, data in graph.edges(data=True)):
        return False
    if not all(_is_admissible_component(model, n) for n in names):
        return False
    return gram_is_negative_definite(intersection_matrix(names, model))


def _walk_from_tip(model, graph, tip, admissible):
    """Follow the chain that starts at `tip`; returns (components, attachment)."""
    chain = []
    previous = None
    current = tip
    while True:
        if graph.degree(current) > 2:
            break
        if admissible:
            if not _is_admissible_component(model, current):
                break
            if not gram_is_negative_definite(intersection_matrix(chain + [current], model)):
                break
        elif model.curve(current).pa != 0:
            break
        neighbours = [n for n in graph.neighbors(current) if n != previous]
        if not neighbours:
            # reached the far end: the whole boundary is a chain
            chain.append(current)
            return chain, None
        following = neighbours[0]
        if graph[current][following]["weight"] != 1:
            break
        chain.append(current)
        previous, current = current, following
    return chain, (current if chain else None)


def maximal_admissible_twigs(model):
    """All maximal admissible rational twigs of D, ordered by tip name."""
    graph = boundary_dual_graph(model)
    if graph.number_of_nodes() == 0:
        return []
    if _boundary_is_admissible_rod_or_fork(model, graph):
        raise BoundaryNotBigError("boundary not big: D is an admissible rod or fork, "
                                  "so it cannot complete an affine surface")
    twigs = []
    for tip in sorted(n for n in graph.nodes if graph.degree(n) == 1):
        components, attachment = _walk_from_tip(model, graph, tip, admissible=True)
        if components and attachment is not None:
            twigs.append(Twig(tuple(components), attachment))
    logger.debug("Found %d maximal admissible twigs", len(twigs))
    return twigs


def twig_warnings(model):
    """Maximal rational twigs that fail admissibility."""
    graph = boundary_dual_graph(model)
    if graph.number_of_nodes() < 2:
        return []
    admissible = {t.components for t in maximal_admissible_twigs(model)}
    warnings = []
    for tip in sorted(n for n in graph.nodes if graph.degree(n) == 1):
        components, attachment = _walk_from_tip(model, graph, tip, admissible=False)
        if not components or attachment is None or tuple(components) in admissible:
            continue
        warnings.append(f"maximal rational twig {'-'.join(components)} at {attachment} is not admissible")
    return warnings


def compute_bark(model, twigs=None):
    if twigs is None:
        twigs = maximal_admissible_twigs(model)
    lattice = model.lattice
    k_plus_d = model.canonical_class + model.class_of(model.boundary)
    bark_terms = []
    for twig in twigs:
        names = list(twig.components)
        rows = intersection_matrix(names, model)
        rhs = [lattice.pairing(k_plus_d, model.curve(n).divisor_class) for n in names]
        try:
            solution = solve_exact(rows, rhs)
        except LatticeError as exc:
            raise ConsistencyError(f"singular bark system on twig {'-'.join(names)}") from exc
        bark_terms.extend(zip(names, solution))
    bark = QDivisor(tuple(bark_terms))
    dsharp = model.boundary - bark
    result = PeelingResult(dsharp, bark, tuple(twigs))
    check_peeling_result(model, result)
    return result


def check_peeling_result(model, result):
    if result.dsharp + result.bark != model.boundary:
        raise ConsistencyError("dsharp + bark differs from D")
    twig_names = {n for t in result.twigs for n in t.components}
    if set(result.bark.support()) != twig_names:
        raise ConsistencyError("bark support differs from the union of twigs")
    for name, coeff in result.bark.terms:
        if not 0 < coeff < 1:
            raise ConsistencyError(f"bark coefficient of {name} is {coeff}, outside (0, 1)")
    if result.dsharp.ceil() != model.boundary:
        raise ConsistencyError("ceiling of dsharp differs from D")
    nef = model.canonical_class + model.class_of(result.dsharp)
    for name in twig_names:
        if model.lattice.pairing(nef, model.curve(name).divisor_class) != 0:
            raise ConsistencyError(f"(K + dsharp).{name} is not zero")


def find_superfluous_exceptional(model):
    """First boundary (-1)-curve E (by name) with E.(D - E) <= 2, meeting two components when equal."""
    boundary = model.boundary_names
    for name in sorted(boundary):
        if not model.is_minus_one_curve(name):
            continue
        meets = [(other, model.intersect(name, other)) for other in boundary if other != name]
        meets = [(other, v) for other, v in meets if v != 0]
        total = sum(v for _, v in meets)
        if total > 2:
            continue
        if total == 2 and not (len(meets) == 2 and all(v == 1 for _, v in meets)):
            continue
        return name
    return None


def _meets_boundary_count(model, name):
    return sum(1 for other in model.boundary_names if other != name and model.intersect(name, other) != 0)


def _contract_followers(model, names, log, pullbacks):
    """Contract images of `names` that became (-1)-curves meeting at most two boundary components."""
    changed = True
    while changed:
        changed = False
        for name in sorted(names):
            if not model.has_curve(name) or not model.is_minus_one_curve(name):
                continue
            if _meets_boundary_count(model, name) > 2:
                continue
            model, pullback = contract_with_pullback(model, name)
            log.append(name)
            pullbacks.append(pullback)
            logger.info("Contracted %s after its neighbour", name)
            changed = True
            break
    return model


def _twig_components_meeting(model, twigs, name):
    result = []
    for twig in twigs:
        if any(model.intersect(name, c) != 0 for c in twig.components):
            result.extend(twig.components)
    return result


def _require_affine(model):
    if not model.flags.affine_claimed:
        raise ModelValidationError(["peeling needs a model flagged affine=yes"])


def almost_minimalize(model):
    """Run the peeling contractions until none applies.

    Returns the resulting model and the ordered list of contracted curves.
    """
    _require_affine(model)
    log = []
    pullbacks = []
    while True:
        superfluous = find_superfluous_exceptional(model)
        if superfluous is not None:
            model, pullback = contract_with_pullback(model, superfluous)
            log.append(superfluous)
            pullbacks.append(pullback)
            logger.info("Contracted superfluous component %s", superfluous)
            continue

        result = compute_bark(model)
        nef = model.canonical_class + model.class_of(result.dsharp)
        bark_support = list(result.bark.support())
        candidate = None
        for c in sorted(model.curves, key=lambda c: c.name):
            if c.in_boundary or not model.is_minus_one_curve(c.name):
                continue
            if model.lattice.pairing(c.divisor_class, nef) >= 0:
                continue
            if gram_is_negative_definite(intersection_matrix([c.name] + bark_support, model)):
                candidate = c.name
                break
        if candidate is None:
            return model, log

        followers = _twig_components_meeting(model, result.twigs, candidate)
        model, pullback = contract_with_pullback(model, candidate)
        log.append(candidate)
        pullbacks.append(pullback)
        logger.info("Contracted %s with negative degree on K + dsharp", candidate)
        model = _contract_followers(model, followers, log, pullbacks)


def compose_pullbacks(pullbacks):
    """Matrix product of successive pullbacks (oldest first)."""
    total = None
    for p in pullbacks:
        if total is None:
            total = [list(row) for row in p]
            continue
        inner = len(p)
        cols = len(p[0]) if p else 0
        total = [[sum(row[k] * p[k][j] for k in range(inner)) for j in range(cols)] for row in total]
    return total


def _pull_back(pullback, coeffs):
    return tuple(sum(Fraction(row[j]) * coeffs[j] for j in range(len(coeffs))) for row in pullback)


def strongly_minimalize(model):
    """Almost minimalize, then contract the (-1)-curves orthogonal to K + dsharp."""
    model, log = almost_minimalize(model)
    while True:
        result = compute_bark(model)
        nef = model.canonical_class + model.class_of(result.dsharp)
        floor_support = set(result.dsharp.floor().support())
        bark_support = list(result.bark.support())
        candidate = None
        for c in sorted(model.curves, key=lambda c: c.name):
            if not model.is_minus_one_curve(c.name) or c.name in floor_support:
                continue
            if c.name in bark_support:
                continue
            if model.lattice.pairing(c.divisor_class, nef) != 0:
                continue
            if gram_is_negative_definite(intersection_matrix([c.name] + bark_support, model)):
                candidate = c.name
                break
        if candidate is None:
            return model, log

        e = model.curve(candidate).divisor_class
        meets_d = model.lattice.pairing(e, model.class_of(model.boundary))
        meets_floor = model.lattice.pairing(e, model.class_of(result.dsharp.floor()))
        if meets_d != 1 or meets_floor != 1:
            raise ConsistencyError(
                f"{candidate}: expected E.D = E.floor(dsharp) = 1, got {meets_d} and {meets_floor}")

        before_square = model.lattice.self_intersection(nef)
        followers = _twig_components_meeting(model, result.twigs, candidate)
        pullbacks = []
        step_log = [candidate]
        new_model, pullback = contract_with_pullback(model, candidate)
        pullbacks.append(pullback)
        logger.info("Contracted %s orthogonal to K + dsharp", candidate)
        new_model = _contract_followers(new_model, followers, step_log, pullbacks)

        new_result = compute_bark(new_model)
        new_nef = new_model.canonical_class + new_model.class_of(new_result.dsharp)
        if new_model.lattice.self_intersection(new_nef) != before_square:
            raise ConsistencyError(f"{candidate}: (K + dsharp)^2 changed under contraction")
        pulled = _pull_back(compose_pullbacks(pullbacks), new_nef.coeffs)
        if not classes_equal(DivisorClass(pulled), nef):
            raise ConsistencyError(f"{candidate}: pullback of K + dsharp differs after contraction")
        model = new_model
        log.extend(step_log)
