"""Structured reports behind the logsurf commands.

Every cmd_* function returns (Report, exit_code): 0 for success, 1 for a
mathematical negative or a failed example claim. Input problems surface as
LogSurfInputError and are mapped to exit code 2 by the CLI.
"""
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import consts
from classification import Kappa, ample_witness_check, floor_multiple_class, is_nef_on_tracked, zariski
from errors import BoundaryNotBigError, LogSurfInputError, ModelValidationError
from fibration_bound import (delta_m_degree, extract_fibration_data, fiber_boundary_degree, fiber_class,
                             fibration_criterion, parse_fibration_data, threshold_with_horizon,
                             verify_global_bound)
from pair_model import load_model, pushforward_to_base, validate
from peeling import almost_minimalize, compute_bark, strongly_minimalize, twig_warnings
from utils import digest, format_rational, read_text, resolve_model_path

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT_ERROR = 2


@dataclass
class Report:
    command: str
    inputs: dict
    digest: str
    result: dict = field(default_factory=dict)
    claims: list = field(default_factory=list)
    citations: list = field(default_factory=list)

    def to_dict(self):
        body = {"command": self.command, "inputs": self.inputs, "digest": self.digest, "result": self.result,
                "citations": self.citations}
        if self.claims:
            body["claims"] = self.claims
        return body

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self):
        return "\n".join(_render(self.to_dict(), 0))

    def render(self, output_format="text"):
        return self.to_json() if output_format == "json" else self.to_text()


def _render(value, indent):
    pad = " " * indent
    lines = []
    if isinstance(value, dict):
        for key, item in value.items():
            if isinstance(item, (dict, list)) and item:
                lines.append(f"{pad}{key}:")
                lines.extend(_render(item, indent + 2))
            else:
                lines.append(f"{pad}{key}: {_scalar(item)}")
    elif isinstance(value, list):
        for item in value:
            if isinstance(item, (dict, list)):
                nested = _render(item, indent + 2)
                lines.append(f"{pad}- {nested[0].lstrip()}")
                lines.extend(nested[1:])
            else:
                lines.append(f"{pad}- {_scalar(item)}")
    return lines


def _scalar(value):
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (dict, list)):
        return "none"
    return str(value)


def _divisor(divisor):
    return {name: format_rational(coeff) for name, coeff in divisor.terms}


def _class(model, cls):
    return cls.format(model.lattice.basis_names)


def _base_class(model, cls):
    return cls.format(model.provenance.base.lattice.basis_names)


@lru_cache(maxsize=None)
def load_citations():
    """Source references for commands, example claims and case families."""
    with open(consts.CITATIONS_FILE, "r", encoding="utf-8") as f:
        return json.load(f)


def command_citations(command):
    return list(load_citations()["commands"][command])


def load_checked_model(path):
    """Resolve, read, parse and validate a model file."""
    resolved = resolve_model_path(path)
    text = read_text(resolved)
    model = load_model(text)
    violations = validate(model)
    if violations:
        raise ModelValidationError(violations)
    return model, text


def cmd_validate(path):
    resolved = resolve_model_path(path)
    text = read_text(resolved)
    model = load_model(text)
    violations = validate(model)
    result = {
        "rank": model.lattice.rank,
        "curves": len(model.curves),
        "boundary": list(model.boundary_names),
        "valid": not violations,
        "violations": violations,
    }
    if not violations and model.flags.affine_claimed:
        try:
            result["warnings"] = twig_warnings(model)
        except BoundaryNotBigError as e:
            violations.append(str(e))
            result["valid"] = False
    exit_code = EXIT_OK
    if violations:
        exit_code = EXIT_INPUT_ERROR
    elif model.witness is not None:
        ample = ample_witness_check(model, model.witness)
        result["ample_witness"] = ample
        if not ample:
            exit_code = EXIT_NEGATIVE
    report = Report("validate", {"model": path}, digest(text), result, citations=command_citations("validate"))
    return report, exit_code


def cmd_peel(path, strong=False):
    model, text = load_checked_model(path)
    minimal, contracted = (strongly_minimalize if strong else almost_minimalize)(model)
    peeled = compute_bark(minimal)
    result = {
        "contracted": contracted,
        "twigs": [{"components": list(t.components), "attachment": t.attachment} for t in peeled.twigs],
        "bark": _divisor(peeled.bark),
        "dsharp": _divisor(peeled.dsharp),
    }
    return Report("peel", {"model": path, "strong": strong}, digest(text), result,
                  citations=command_citations("peel")), EXIT_OK


def _minimal_zariski(path):
    model, text = load_checked_model(path)
    minimal, contracted = almost_minimalize(model)
    return minimal, contracted, zariski(minimal), text


def cmd_kappa(path):
    _, contracted, data, text = _minimal_zariski(path)
    result = {"contracted": contracted, "kappa": data.kappa.label}
    if data.violators:
        result["violators"] = {name: format_rational(v) for name, v in data.violators}
    exit_code = EXIT_NEGATIVE if data.kappa is Kappa.NOT_NEF_ON_TRACKED else EXIT_OK
    return Report("kappa", {"model": path}, digest(text), result, citations=command_citations("kappa")), exit_code


def cmd_zariski(path):
    model, contracted, data, text = _minimal_zariski(path)
    result = {
        "contracted": contracted,
        "nef_part": _class(model, data.nef_class),
        "dsharp": _divisor(data.dsharp),
        "negative_part": _divisor(data.negative_part),
        "nef_self_intersection": format_rational(data.nef_self_intersection),
        "kappa": data.kappa.label,
    }
    exit_code = EXIT_NEGATIVE if data.kappa is Kappa.NOT_NEF_ON_TRACKED else EXIT_OK
    report = Report("zariski", {"model": path}, digest(text), result, citations=command_citations("zariski"))
    return report, exit_code


def cmd_mbound(inline=None, model_path=None, m=None, threshold=False):
    if (inline is None) == (model_path is None):
        raise LogSurfInputError("give either inline fibration data or a model, not both")
    if m is not None and m < 1:
        raise LogSurfInputError(f"m must be a positive integer, got {m}")
    if inline is not None:
        data = parse_fibration_data(inline)
        inputs, source = {"data": inline}, inline
    else:
        model, source = load_checked_model(model_path)
        data = extract_fibration_data(model)
        inputs = {"model": model_path}

    result = {"data": data.format(), "epsilon": format_rational(data.epsilon)}
    exit_code = EXIT_OK
    if m is not None:
        holds = fibration_criterion(data, m)
        result["m"] = m
        result["degree"] = delta_m_degree(data, m)
        result["required"] = 2 * data.g + 1
        result["criterion"] = "holds" if holds else "fails"
        if not holds:
            exit_code = EXIT_NEGATIVE
    if threshold or m is None:
        value, top = threshold_with_horizon(data)
        result["threshold"] = value
        result["horizon"] = top
    return Report("mbound", inputs, digest(source), result, citations=command_citations("mbound")), exit_code


def cmd_verify_theorem(m, jobs=consts.DEFAULT_JOBS, csv_path=None):
    report = verify_global_bound(m, processes=jobs)
    frame = report.to_frame()
    if csv_path:
        frame.to_csv(csv_path, index=False)
        logger.info("Wrote verdict table to %s", csv_path)
    case_citations = load_citations()["cases"]
    cases = []
    for v in report.verdicts:
        entry = {"case": v.case_id, "status": v.status,
                 "claimed_threshold": "-" if v.claimed_threshold is None else v.claimed_threshold,
                 "exact_threshold": "-" if v.exact_threshold is None else v.exact_threshold,
                 "citation": case_citations[v.case_id]}
        if v.witnesses:
            entry["witnesses"] = [w.format() for w in v.witnesses]
        if v.reason:
            entry["reason"] = v.reason
        cases.append(entry)
    result = {"m": m, "all_hold": report.all_hold, "failing": report.failing_cases, "cases": cases}
    exit_code = EXIT_OK if report.all_hold else EXIT_NEGATIVE
    return Report("verify-theorem", {"m": m}, digest(f"m={m}"), result,
                  citations=command_citations("verify-theorem")), exit_code


# Facts each bundled example is expected to reproduce.
EXAMPLE_FACTS = {
    "sharp-untwisted": {
        "dsharp": {"H1": "1", "H2": "1", "F1": "1", "D1": "2/3", "D2": "2/3", "D3": "1/3",
                   "D4": "1/2", "D5": "1/2"},
        "fiber_factor": Fraction(1, 6),
        "threshold": 8,
        "data": "g=0 t=0 horiz=2sec fibers=(2,inf),(2,3),(2,2)",
    },
    "sharp-twisted": {
        "dsharp": {"H": "1", "D1": "2/3", "D2": "2/3", "D3": "1/3", "D4": "1/2", "D5": "1/2"},
        "fiber_factor": Fraction(1, 6),
        "threshold": 8,
        "data": "g=0 t=1 horiz=sep fibers=(2,3),(2,2)",
    },
    "inseparable-elliptic": {
        "dsharp": {"H": "1", "E1": "1", "D1": "1/2", "D2": "1/2"},
        "fiber_factor": Fraction(1, 2),
        "threshold": 6,
        "data": "g=1 t=0 horiz=insep fibers=(1,inf)",
    },
}


def resolve_example_name(name):
    name = consts.EXAMPLE_ALIASES.get(name, name)
    if name not in consts.EXAMPLE_MODELS:
        known = sorted(consts.EXAMPLE_MODELS) + sorted(consts.EXAMPLE_ALIASES)
        raise LogSurfInputError(f"unknown example '{name}', expected one of: {', '.join(known)}")
    return name


def _claim_value(value):
    if isinstance(value, dict):
        return ", ".join(f"{k}={v}" for k, v in sorted(value.items()))
    return str(value)


class _Claims:
    """Ordered claim list of one example, each claim tagged with its source reference."""

    def __init__(self, citations):
        self.citations = citations
        self.items = []

    def check(self, key, statement, expected, actual):
        expected, actual = _claim_value(expected), _claim_value(actual)
        ok = expected == actual
        self.items.append({"claim": statement, "expected": expected, "actual": actual, "ok": ok,
                           "citation": self.citations[key]})
        if not ok:
            logger.warning("Claim failed: %s (expected %s, got %s)", statement, expected, actual)
        return ok

    def cited(self):
        return sorted({item["citation"] for item in self.items})


def cmd_examples(name):
    name = resolve_example_name(name)
    facts = EXAMPLE_FACTS[name]
    model, text = load_checked_model(consts.EXAMPLE_MODELS[name])
    claims = _Claims(load_citations()["examples"][name])

    _, contracted = almost_minimalize(model)
    claims.check("almost_minimal", "model is almost minimal", [], contracted)
    data_z = zariski(model)
    claims.check("dsharp", "dsharp", facts["dsharp"], _divisor(data_z.dsharp))
    claims.check("kappa", "kappa", "1", data_z.kappa.label)
    claims.check("nef_square", "(K + dsharp)^2", "0", format_rational(data_z.nef_self_intersection))
    nef, _ = is_nef_on_tracked(model, data_z.nef_class)
    claims.check("nef", "K + dsharp is nef on tracked curves", True, nef)

    fiber = fiber_class(model)
    claims.check("fiber_multiple", "K + dsharp is a multiple of the fiber class",
                 _class(model, fiber * facts["fiber_factor"]), _class(model, data_z.nef_class))
    claims.check("fiber_degree", "fiber meets the boundary in degree 2", "2",
                 format_rational(fiber_boundary_degree(model)))

    data = extract_fibration_data(model)
    claims.check("fibration_data", "fibration data", facts["data"], data.format())
    threshold, _ = threshold_with_horizon(data)
    claims.check("threshold", "threshold", facts["threshold"], threshold)

    # the integral part of m(K + dsharp) just below the threshold
    m = threshold - 1
    floor_cls = floor_multiple_class(model, data_z.dsharp, m)
    base_fiber = pushforward_to_base(model, fiber)
    claims.check("floor", f"floor of {m}(K + dsharp) on the base is deg(delta_{m}) fibers",
                 _base_class(model, base_fiber * delta_m_degree(data, m)),
                 _base_class(model, pushforward_to_base(model, floor_cls)))

    if model.witness is not None:
        claims.check("ample_witness", "ample witness", True, ample_witness_check(model, model.witness))

    result = {
        "example": name,
        "dsharp": _divisor(data_z.dsharp),
        "kappa": data_z.kappa.label,
        "nef_part": _class(model, data_z.nef_class),
        "fibration_data": data.format(),
        "threshold": threshold,
        f"floor_{m}": _class(model, floor_cls),
        "all_claims_hold": all(c["ok"] for c in claims.items),
    }
    exit_code = EXIT_OK if result["all_claims_hold"] else EXIT_NEGATIVE
    return Report("examples", {"example": name}, digest(text), result, claims.items, claims.cited()), exit_code
