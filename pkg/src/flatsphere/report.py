"""Job configuration, input parsing and deterministic report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .metric_geometry import (
    ChartPoint,
    ConformalMetric,
    SingularPoint,
    curvature_of_factor,
    grid_points,
    round_metric_factor,
)
from .obstruction import (
    Verdict,
    algebra_verdict,
    defect_flux_numeric,
    fta_verdict,
    isolating_radius,
)
from .polynomial import Poly
from .quotient_algebra import StructureAlgebra, f_oracle

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4

REPORT_KEYS = (
    "input", "normalization_constant", "f_coeffs", "functional_equation_residual",
    "factorization_check", "singularities", "gauss_bonnet", "flatness", "completeness",
    "maximum_principle", "recovered_roots", "verdict",
)
GRID_COLUMNS = ("chart", "re_w", "im_w", "lambda", "K", "harmonicity_residual", "u", "delta0_u")


class InputParseError(ValueError):
    exit_code = EXIT_PARSE


class InputValidationError(ValueError):
    exit_code = EXIT_VALIDATION


@dataclass(frozen=True)
class JobConfig:
    mode: str = "poly"
    input_path: str | None = None
    coeffs: str | None = None
    extent: float = 3.0
    resolution: int = 41
    stencil_h: float = 1e-3
    tol_root: float = 1e-10
    tol_harmonic: float = 1e-4
    tol_ledger: float = 1e-9
    output: str = "json"
    emit_grids: bool = False
    out_dir: str | None = None
    rng_seed: int = 0

    def validate(self) -> None:
        if self.mode not in ("poly", "algebra"):
            raise InputValidationError(f"unknown mode {self.mode!r}")
        if self.output not in ("json", "text"):
            raise InputValidationError(f"unknown output format {self.output!r}")
        if self.resolution < 8:
            raise InputValidationError("grid resolution must be at least 8")
        if not self.stencil_h > 0:
            raise InputValidationError("stencil_h must be positive")
        if not self.extent > 1.2:
            raise InputValidationError("grid extent must exceed 1.2 to cover the chart overlap")
        if (self.input_path is None) == (self.coeffs is None):
            raise InputValidationError("give exactly one of an input file or inline coefficients")


# ---------------------------------------------------------------------------
# parsing

def _scalar(tok: Any) -> complex:
    if isinstance(tok, (list, tuple)):
        if len(tok) != 2:
            raise InputParseError(f"complex entries are [re, im] pairs, got {tok!r}")
        return complex(float(tok[0]), float(tok[1]))
    if isinstance(tok, (int, float)) and not isinstance(tok, bool):
        return complex(tok)
    if isinstance(tok, str):
        return complex(tok.replace(" ", "").replace("i", "j"))
    raise InputParseError(f"not a number: {tok!r}")


def _scalars(items) -> list[complex]:
    try:
        return [_scalar(t) for t in items]
    except (TypeError, ValueError) as exc:
        raise InputParseError(str(exc)) from exc


def _finite(values: list[complex]) -> list[complex]:
    if not all(math.isfinite(v.real) and math.isfinite(v.imag) for v in values):
        raise InputValidationError("coefficients must be finite")
    return values


def parse_polynomial(text: str) -> Poly:
    """Whitespace/comma separated coefficients low-to-high, or JSON ``{"coeffs": [...]}``."""
    text = text.strip()
    if not text:
        raise InputParseError("empty polynomial input")
    if text.startswith("{") or text.startswith("["):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputParseError(f"malformed JSON: {exc}") from exc
        items = obj.get("coeffs") if isinstance(obj, dict) else obj
        if not isinstance(items, list):
            raise InputParseError('expected {"coeffs": [...]}')
        values = _scalars(items)
    else:
        values = _scalars(text.replace(",", " ").split())
    p = Poly(_finite(values))
    if p.is_zero():
        raise InputValidationError("the zero polynomial has no degree")
    if p.degree < 1:
        raise InputValidationError("need a polynomial of degree >= 1")
    return p


def parse_algebra(text: str) -> tuple[StructureAlgebra, np.ndarray]:
    """JSON ``{"dim": m, "structure_constants": [m^3 entries], "unit": ..., "element": [...]}``.

    ``structure_constants`` is flattened with index order (i, j, k) for
    e_i e_j = sum_k c[i][j][k] e_k; ``unit`` is an index or a vector (default 0).
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict) or not {"dim", "structure_constants", "element"} <= obj.keys():
        raise InputParseError("algebra input needs dim, structure_constants and element")
    try:
        m = int(obj["dim"])
    except (TypeError, ValueError) as exc:
        raise InputParseError("dim must be an integer") from exc
    flat = _finite(_scalars(obj["structure_constants"]))
    x = _finite(_scalars(obj["element"]))
    unit = obj.get("unit", 0)
    if m < 1 or len(flat) != m ** 3:
        raise InputValidationError(f"structure tensor must have dim^3 = {m ** 3} entries, got {len(flat)}")
    if len(x) != m:
        raise InputValidationError(f"element must have {m} coordinates")
    if isinstance(unit, list):
        unit = np.array(_finite(_scalars(unit)))
    try:
        A = StructureAlgebra(np.array(flat).reshape(m, m, m), unit)
    except ValueError as exc:
        raise InputValidationError(str(exc)) from exc
    return A, np.array(x)


def read_source(config: JobConfig) -> str:
    if config.coeffs is not None:
        return config.coeffs
    try:
        return Path(config.input_path).read_text()
    except OSError as exc:
        raise InputParseError(f"cannot read {config.input_path}: {exc}") from exc


def parse_input(config: JobConfig):
    """Poly in poly mode, (StructureAlgebra, element) in algebra mode."""
    config.validate()
    text = read_source(config)
    if config.mode == "poly":
        return parse_polynomial(text)
    return parse_algebra(text)


# ---------------------------------------------------------------------------
# report assembly

def _c(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _sphere(pt: ChartPoint):
    s = pt.sphere
    return "infinity" if s == math.inf else _c(s)


def functional_equation_residual(m: ConformalMetric, seed: int, samples: int = 50) -> dict:
    """Pointwise |w^(2n) f(1/w) - f(w)| / |f(w)| at seeded random points, and the
    coefficient palindrome mismatch."""
    rng = np.random.default_rng(seed)
    w = np.exp(rng.uniform(-1, 1, samples)) * np.exp(2j * np.pi * rng.uniform(0, 1, samples))
    f = m.f(w)
    lhs = w ** (2 * m.n) * m.f(1 / w)
    c = m.f.padded(2 * m.n + 1)
    return {
        "pointwise": float(np.max(np.abs(lhs - f) / np.abs(f))),
        "coefficients": float(np.max(np.abs(c - c[::-1])) / np.max(np.abs(c))),
    }


def factorization_check(p: Poly, m: ConformalMetric) -> dict:
    oracle = f_oracle(p)
    size = max(len(oracle.coeffs), len(m.f.coeffs))
    diff = np.max(np.abs(m.f.padded(size) - oracle.padded(size)))
    return {"oracle": "p * p_star", "max_relative_error": float(diff / np.max(np.abs(oracle.coeffs)))}


def _singular_entry(m: ConformalMetric, s: SingularPoint, attribution) -> dict:
    entry = {
        "chart": s.location.chart.value,
        "w": _c(s.location.w),
        "sphere": _sphere(s.location),
        "order": s.order,
        "cone_angle": s.cone_angle,
        "defect": s.defect,
    }
    if attribution is not None:
        entry["p_order"] = attribution.p_order
        entry["p_star_order"] = attribution.p_star_order
    else:
        entry["p_order"] = 0
        entry["p_star_order"] = s.order
    return entry


def round_control_error(extent: float, resolution: int, h: float) -> float:
    """max |K - 1| of the stencil applied to the round factor over the grid."""
    return max(abs(curvature_of_factor(round_metric_factor, w, h) - 1)
               for w in grid_points(extent, resolution))


def build_report(verdict: Verdict, config: JobConfig, input_echo: dict) -> dict:
    r = verdict.report
    out: dict[str, Any] = dict.fromkeys(REPORT_KEYS)
    out["input"] = input_echo
    checks = {}
    if r is not None:
        m = r.metric
        out["normalization_constant"] = _c(m.normalization)
        out["f_coeffs"] = [_c(a) for a in m.f.coeffs]
        fe = functional_equation_residual(m, config.rng_seed)
        out["functional_equation_residual"] = fe
        out["factorization_check"] = factorization_check(r.p, m)
        attrs = {a.location: a for a in r.recovery.attributions}
        out["singularities"] = [
            _singular_entry(m, s, attrs.get(s.location.sphere)) for s in m.singular_points
        ]
        gb = r.gauss_bonnet
        entries = []
        for s, defect in gb.entries:
            flux = defect_flux_numeric(m, s, isolating_radius(m, s.location))
            entries.append({"sphere": _sphere(s.location), "order": s.order, "defect": defect,
                            "flux": flux, "flux_defect": flux / m.n})
        out["gauss_bonnet"] = {
            "entries": entries,
            "total_defect": gb.total_defect,
            "target": gb.target,
            "error": gb.error,
            "total_over_pi": gb.total_defect / math.pi,
        }
        fl = r.flatness
        out["flatness"] = {
            "max_harmonicity_residual": fl.max_harmonicity,
            "max_abs_K": fl.max_curvature,
            "round_metric_control_max_error": round_control_error(
                config.extent, config.resolution, config.stencil_h),
            "smooth_points": fl.smooth_points,
            "excluded_points": fl.excluded_points,
        }
        cp = r.completeness
        out["completeness"] = {
            "verdict": cp.verdict,
            "incomplete": cp.incomplete,
            "witnesses": [{
                "sphere": _sphere(w.singular_point.location),
                "order": w.singular_point.order,
                "start": {"chart": w.start.chart.value, "w": _c(w.start.w)},
                "length": w.distance.length,
                "last_segment": w.distance.last_segment,
                "local_model": w.distance.last_segment_model,
                "model_ratio": w.distance.model_ratio,
            } for w in cp.witnesses],
            "cusp_ends": [{
                "sphere": _sphere(w.singular_point.location),
                "order": w.singular_point.order,
                "verdict": w.distance.verdict,
                "growth": w.distance.growth,
            } for w in cp.cusp_ends],
        }
        mp = r.maximum_principle
        out["maximum_principle"] = {
            "max_abs_delta0_u_minus_1": mp.max_deviation,
            "smooth_points": mp.smooth_points,
            "u_min": mp.u_min,
            "u_max": mp.u_max,
            "u_range": mp.u_range,
            "divergence": [{
                "sphere": _sphere(d.singular_point.location),
                "order": d.singular_point.order,
                "radii": list(d.radii),
                "u": list(d.values),
                "monotone": d.monotone,
            } for d in mp.divergence],
        }
        out["recovered_roots"] = [{
            "root": _c(x.root),
            "multiplicity": x.multiplicity,
            "residual": x.residual,
            "relative_residual": x.relative_residual,
        } for x in r.recovered_roots]
        checks = {
            "roots_within_tol_root": all(x.relative_residual <= config.tol_root
                                         for x in r.recovered_roots),
            "flat_within_tol_harmonic": max(fl.max_harmonicity, fl.max_curvature) <= config.tol_harmonic,
            "ledger_within_tol_ledger": gb.error <= config.tol_ledger,
        }
    out["verdict"] = {
        "degree": verdict.degree,
        "conclusion": verdict.conclusion.value,
        "narrative": verdict.narrative,
        "obstructions": r.obstructions_fired(config.tol_harmonic) if r is not None else {},
        "checks": checks,
        "failure": verdict.failure,
    }
    return out


# ---------------------------------------------------------------------------
# serialization

def _fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    if x == 0:
        return "0"
    return format(x, ".17g")


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, complex):
        return _encode(_c(obj), indent, level)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [json.dumps(str(k)) + ": " + _encode(v, indent, level + 1) for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [_encode(v, indent, level + 1) for v in obj]
        return "[" + pad + ("," + pad).join(items) + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(report: dict) -> str:
    """JSON text with fixed key order and floats at 17 significant digits."""
    return _encode(report, 2, 0) + "\n"


def loads_report(text: str) -> dict:
    return json.loads(text)


def grid_csv(verdict: Verdict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GRID_COLUMNS)
    rows = verdict.report.grid if verdict.report is not None else []
    for row in rows:
        values = [row.lam, row.K, row.harmonicity, row.u, row.delta0_u]
        writer.writerow([row.chart.value, _fmt_float(row.w.real), _fmt_float(row.w.imag)]
                        + ["" if v is None else _fmt_float(v) for v in values])
    return buf.getvalue()


def render_text(report: dict) -> str:
    v = report["verdict"]
    lines = [f"degree {v['degree']}: {v['conclusion']}", v["narrative"]]
    if report["f_coeffs"] is not None:
        lines.append("f coefficients (low to high): " + ", ".join(
            f"{complex(*c):.6g}" for c in report["f_coeffs"]))
        gb = report["gauss_bonnet"]
        lines.append(f"Gauss-Bonnet: total defect {gb['total_defect']:.15g} "
                     f"(4 pi = {gb['target']:.15g}) over {len(gb['entries'])} cone point(s)")
        for s in report["singularities"]:
            where = s["sphere"] if isinstance(s["sphere"], str) else f"{complex(*s['sphere']):.6g}"
            lines.append(f"  zero of f at {where}: order {s['order']}, cone angle {s['cone_angle']:.6g}")
        fl, mp = report["flatness"], report["maximum_principle"]
        lines.append(f"flatness: max |Laplacian log|f|| = {fl['max_harmonicity_residual']:.3g}, "
                     f"max |K| = {fl['max_abs_K']:.3g}")
        lines.append(f"completeness: {report['completeness']['verdict']}")
        lines.append(f"maximum principle: max |Delta0 u - 1| = {mp['max_abs_delta0_u_minus_1']:.3g}, "
                     f"u range {mp['u_range']:.4g}")
        lines.append("roots of p: " + ", ".join(
            f"{complex(*r['root']):.10g} (x{r['multiplicity']})" for r in report["recovered_roots"]))
    if v["failure"]:
        lines.append(f"FAILURE: {v['failure']}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# orchestration

def _verdict_kwargs(config: JobConfig) -> dict:
    return {"extent": config.extent, "resolution": config.resolution,
            "h": config.stencil_h, "tol_flat": config.tol_harmonic}


def run(config: JobConfig) -> tuple[int, str, dict]:
    """Parse, analyze and serialize. Returns (exit code, rendered output, report dict)."""
    parsed = parse_input(config)
    if config.mode == "poly":
        p = parsed
        echo = {"mode": "poly", "coeffs": [_c(a) for a in p.coeffs]}
        verdict = fta_verdict(p, **_verdict_kwargs(config))
    else:
        A, x = parsed
        verdict = algebra_verdict(A, x, **_verdict_kwargs(config))
        echo = {
            "mode": "algebra",
            "dim": A.dim,
            "structure_constants": [_c(a) for a in A.constants.ravel()],
            "unit": [_c(a) for a in A.unit],
            "element": [_c(a) for a in x],
            "minimal_polynomial": [_c(a) for a in verdict.minimal_polynomial.coeffs],
        }
    report = build_report(verdict, config, echo)
    text = dumps_report(report) if config.output == "json" else render_text(report)
    if config.out_dir is not None or config.emit_grids:
        out = Path(config.out_dir or ".")
        out.mkdir(parents=True, exist_ok=True)
        if config.out_dir is not None:
            (out / "report.json").write_text(dumps_report(report))
        if config.emit_grids:
            (out / "grid.csv").write_text(grid_csv(verdict))
    code = EXIT_NUMERIC if verdict.failure else EXIT_OK
    return code, text, report

