"""Command-line front end: model files in, canonical JSON reports (or SVG plots) out."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from .arith import LaurentPoly, format_frac, frac
from .errors import (
    InvariantViolation,
    NotDiagonalizableMod,
    Obstruction,
    ParseError,
    PrecisionExhausted,
    ReesDiagError,
    SchemaVersionError,
    UnsupportedDimension,
)
from .lindvr import diagonalize_dvr, diagonalize_mod, dvr_graded_table, lift_chain, verify_mod
from .skeleton import SkeletonComplex, SkeletonPoint, refine, subdivision_vertices
from .theta import (
    TropicalFunction,
    check_independence,
    cone_assemble,
    cone_basis,
    cone_extract,
    construct_basis,
    equivariant_diagonalize,
    extend_basis,
    gr_ring_check,
    tropicalize,
    vertex_filtrations,
)
from .valuation import DivisorData, SectionSpace

SCHEMA_VERSION = 1
COMMANDS = ("grdim", "diagonalize", "tropicalize", "refine", "check", "construct", "extend", "lift", "cone", "gr-ring")
EXIT_OK, EXIT_ERROR, EXIT_OBSTRUCTION = 0, 1, 2


# -- model files ---------------------------------------------------------------


@dataclass
class Model:
    variables: tuple[str, ...]
    precision: int
    divisors: tuple[DivisorData, ...]
    simplices: tuple[tuple[int, ...], ...]
    levels: tuple[tuple[LaurentPoly, ...], ...]
    weight_tags: tuple[tuple, ...] | None = None
    metadata: dict = field(default_factory=dict)

    def complex(self) -> SkeletonComplex:
        return SkeletonComplex(self.divisors, self.simplices)

    def space(self, m: int) -> SectionSpace:
        if not 0 <= m < len(self.levels):
            raise InvariantViolation(f"level {m} does not exist (model has {len(self.levels)} levels)")
        return SectionSpace(self.levels[m], self.variables)

    def with_precision(self, n: int) -> Model:
        if n > self.precision:
            raise PrecisionExhausted(f"requested precision {n} exceeds the model precision {self.precision}")
        levels = tuple(tuple(s.truncate(n) for s in lv) for lv in self.levels)
        return Model(self.variables, n, self.divisors, self.simplices, levels, self.weight_tags, self.metadata)


def _rational(value, where: str) -> Fraction:
    if isinstance(value, float):
        raise ParseError(f"{where}: floats are not accepted, write {value!r} as a string like \"p/q\"")
    try:
        return frac(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{where}: {value!r} is not an exact rational") from exc


def _require(data: dict, key: str, where: str = "model"):
    if key not in data:
        if key == "precision":
            raise SchemaVersionError(f"{where}: required field 'precision' is missing (no default is assumed)")
        raise ParseError(f"{where}: required field {key!r} is missing")
    return data[key]


def model_from_dict(data: dict) -> Model:
    if not isinstance(data, dict):
        raise ParseError("model must be a table/object at top level")
    version = data.get("spec")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema version {version!r}; expected spec = {SCHEMA_VERSION}")
    variables = _require(data, "variables")
    if not isinstance(variables, list) or not all(isinstance(v, str) for v in variables):
        raise ParseError("variables: expected a list of names")
    precision = _require(data, "precision")
    if not isinstance(precision, int) or isinstance(precision, bool) or precision < 1:
        raise InvariantViolation(f"precision: expected a positive integer, got {precision!r}")
    divisors = []
    for i, d in enumerate(_require(data, "divisors")):
        where = f"divisors[{i}]"
        label = str(_require(d, "label", where))
        weights = [_rational(w, f"{where}.weights") for w in _require(d, "weights", where)]
        if len(weights) != len(variables):
            raise InvariantViolation(f"{where} ({label}): {len(weights)} weights for {len(variables)} variables")
        b = _require(d, "b", where)
        if not isinstance(b, int) or isinstance(b, bool):
            raise InvariantViolation(f"{where} ({label}): multiplicity b must be an integer")
        divisors.append(DivisorData(label, tuple(weights), b, _rational(d.get("A", 0), f"{where}.A")))
    simplices = tuple(tuple(int(j) for j in s) for s in _require(data, "simplices"))
    levels = []
    for m, lv in enumerate(_require(data, "levels")):
        sections = []
        for k, text in enumerate(lv):
            try:
                sections.append(LaurentPoly.parse(str(text), variables, precision))
            except ParseError as exc:
                raise ParseError(f"levels[{m}][{k}]: {exc}") from exc
        levels.append(tuple(sections))
    tags = data.get("weight_tags")
    if tags is not None:
        tags = tuple(tuple(tuple(t) if isinstance(t, list) else t for t in lv) for lv in tags)
        for m, (lv, tg) in enumerate(zip(levels, tags)):
            if len(lv) != len(tg):
                raise InvariantViolation(f"weight_tags[{m}]: {len(tg)} tags for {len(lv)} sections")
    model = Model(tuple(variables), precision, tuple(divisors), simplices, tuple(levels), tags,
                  dict(data.get("metadata", {})))
    try:
        model.complex()
        for m in range(len(levels)):
            model.space(m)
    except ReesDiagError as exc:
        raise InvariantViolation(f"model fails validation: {exc}") from exc
    return model


def parse_model(path: str | Path) -> Model:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".toml":
        import tomli

        try:
            data = tomli.loads(raw.decode("utf-8"))
        except tomli.TOMLDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
    else:
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return model_from_dict(data)


def model_to_dict(model: Model) -> dict:
    out = {
        "spec": SCHEMA_VERSION,
        "variables": list(model.variables),
        "precision": model.precision,
        "divisors": [
            {"label": d.label, "weights": [format_frac(w) for w in d.weights], "b": d.b, "A": format_frac(d.A)}
            for d in model.divisors
        ],
        "simplices": [list(s) for s in model.simplices],
        "levels": [[s.to_string(model.variables) for s in lv] for lv in model.levels],
        "metadata": model.metadata,
    }
    if model.weight_tags is not None:
        out["weight_tags"] = [[list(t) if isinstance(t, tuple) else t for t in lv] for lv in model.weight_tags]
    return out


def canonical_json(data: Any) -> str:
    return json.dumps(_jsonable(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return format_frac(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


# -- report pieces ---------------------------------------------------------------


def _point(K: SkeletonComplex, p: SkeletonPoint) -> dict:
    return {
        "u": {K.vertices[j].label: u for j, u in p.coords},
        "weights": list(K.valuation_at(p).weights),
    }


def _trop(f: TropicalFunction, label: str) -> dict:
    K = f.complex
    cells = []
    for cell in f.cells:
        coeffs = K.term_coefficients(cell.simplex, cell.forms[0])
        verts = []
        for x in cell.vertices:
            u = (1 - sum(x, Fraction(0)),) + tuple(x)
            verts.append({"u": list(u), "value": sum((c * ui for c, ui in zip(coeffs, u)), Fraction(0))})
        cells.append({
            "simplex": [K.vertices[j].label for j in cell.simplex],
            "vertex_values": list(coeffs),
            "vertices": verts,
        })
    return {"section": label, "dimension": K.dimension, "cells": cells}


def _sections(sections, variables) -> list[str]:
    return [s.to_string(variables) for s in sections]


def _basis_entry(theta, K, variables) -> dict:
    return {
        "sections": _sections(theta.sections, variables),
        "orders": [
            [{"point": _point(K, p), "ord": o} for p, o in sorted(om.items(), key=lambda kv: kv[0].coords)]
            for om in theta.ord_vectors
        ],
    }


def _trops(sections, K, variables) -> list[dict]:
    return [_trop(tropicalize(s, K), s.to_string(variables)) for s in sections]


# -- commands --------------------------------------------------------------------


def run(command: str, model: Model, level: int | None = None, seed: int | None = None,
        precision: int | None = None) -> tuple[dict, int]:
    """Execute one command; returns the report and the exit code."""
    if command not in COMMANDS:
        raise ParseError(f"unknown command {command!r}")
    if precision is not None and command != "lift":
        model = model.with_precision(precision)
    m = len(model.levels) - 1 if level is None else level
    K = model.complex()
    var = model.variables
    report: dict = {"command": command, "model": model.metadata.get("name", ""), "level": m, "seed": seed}
    code = EXIT_OK

    if command in ("grdim", "diagonalize"):
        V = model.space(m)
        points, Fs = vertex_filtrations(V, K)
        report["points"] = [_point(K, p) for p in points]
        if command == "grdim":
            table = dvr_graded_table(Fs, seed)
            report["graded"] = [{"degree": list(lam), "dim": e.dim} for lam, e in table.entries.items()]
            report["total"] = table.total
            report["rank"] = V.rank
            report["verdict"] = "diagonalizable" if table.total == V.rank else "obstruction"
            code = EXIT_OK if table.total == V.rank else EXIT_OBSTRUCTION
        else:
            if model.weight_tags is not None:
                eq = equivariant_diagonalize(V, model.weight_tags[m], Fs, seed)
                report["basis"] = _sections(eq.sections, var)
                report["ord_vectors"] = [[o[i] for i in range(len(Fs))] for o in eq.ord_vectors]
                report["weight_tags"] = [_jsonable(t) for t in eq.tags]
            else:
                diag = diagonalize_dvr(Fs, seed)
                report["basis"] = _sections([V.combination(v) for v in diag.vectors], var)
                report["ord_vectors"] = [list(o) for o in diag.ord_vectors]
            report["verdict"] = "diagonalizable"

    elif command == "tropicalize":
        report["tropical"] = _trops(model.levels[m], K, var)

    elif command == "refine":
        S = refine(K, model.levels[m])
        report["cells"] = [
            {
                "simplex": [K.vertices[j].label for j in c.simplex],
                "vertices": [[*((1 - sum(x, Fraction(0)),) + tuple(x))] for x in c.vertices],
                "active_terms": [_term_string(t, var) for t in c.forms],
            }
            for c in S.cells
        ]
        report["vertices"] = [_point(K, p) for p in subdivision_vertices(S)]

    elif command == "check":
        verdict = check_independence(model.levels[m], K)
        report["independent"] = verdict.independent
        report["vertices_checked"] = len(verdict.records)
        report["tropical"] = _trops(model.levels[m], K, var)
        if verdict.independent:
            report["verdict"] = "independent"
            report["basis"] = _basis_entry(verdict.basis, K, var)
        else:
            ce = verdict.counterexample
            report["verdict"] = "not independent"
            report["counterexample"] = {
                "point": _point(K, ce.point),
                "section_orders": list(ce.orders),
                "filtration_jumps": list(ce.jumps),
            }
            code = EXIT_OBSTRUCTION

    elif command == "construct":
        theta = construct_basis(model.space(m), K, seed)
        report["verdict"] = "independent"
        report["basis"] = _basis_entry(theta, K, var)
        report["tropical"] = _trops(theta.sections, K, var)

    elif command == "extend":
        theta = construct_basis(model.space(0), K, seed)
        chain = [_sections(theta.sections, var)]
        for i in range(1, m + 1):
            theta = extend_basis(theta, model.space(i), K, seed)
            chain.append(_sections(theta.sections, var))
        report["chain"] = chain
        report["verdict"] = "nested"
        report["tropical"] = _trops(theta.sections, K, var)

    elif command == "lift":
        V = model.space(m)
        N = model.precision if precision is None else precision
        if N > model.precision:
            raise PrecisionExhausted(f"lift target {N} exceeds the model precision {model.precision}")
        _, Fs = vertex_filtrations(V, K)
        base = 0 if seed is None else seed
        lifted = lift_chain(lambda i: diagonalize_mod(Fs, i, seed=base + i), N)
        checks = [verify_mod([tuple(p[:i] for p in v) for v in lifted.vectors], Fs, i) for i in range(1, N + 1)]
        report["target"] = N
        report["basis"] = _sections([V.combination(v) for v in lifted.vectors], var)
        report["ord_vectors"] = [list(o) for o in lifted.ord_vectors]
        report["levels_verified"] = checks
        report["verdict"] = "lifted" if all(checks) else "failed"
        code = EXIT_OK if all(checks) else EXIT_ERROR

    elif command == "cone":
        levels = [model.space(i) for i in range(m + 1)]
        cone = cone_assemble(levels)
        theta = cone_basis(cone, K, seed)
        report["assembled"] = [s.to_string(var + ("z",)) for s in theta.sections]
        report["ord_0"] = [cone.ord_0(s) for s in theta.sections]
        report["ord_D"] = [cone.ord_D(s) for s in theta.sections]
        report["levels"] = [_sections(cone_extract(theta, i, cone, K).sections, var) for i in range(m + 1)]
        report["verdict"] = "graded"

    elif command == "gr-ring":
        families = {i: model.space(i) for i in range(m + 1)}
        points = subdivision_vertices(refine(K, model.levels[m]))
        vals = [K.valuation_at(p) for p in points]
        unit_spec = model.metadata.get("unit", {"level": 0, "section": "1"})
        unit = (int(unit_spec["level"]), LaurentPoly.parse(str(unit_spec["section"]), var, model.precision))
        samples = [(i, s) for i in range(m + 1) for s in model.levels[i]]
        rep = gr_ring_check(families, vals, unit, samples)
        report.update({
            "multiplicative": rep.multiplicative,
            "injective": rep.injective,
            "reduced": rep.reduced,
            "samples": rep.samples,
            "warnings": list(rep.warnings),
            "failures": list(rep.failures),
            "verdict": "passed" if rep.passed else "flagged",
        })
        code = EXIT_OK if rep.passed else EXIT_OBSTRUCTION

    return report, code


def _term_string(term, variables) -> str:
    k, beta = term
    return LaurentPoly({(k, beta): 1}, len(beta), k + 1).to_string(variables)


def _obstruction_report(command: str, exc: Obstruction) -> dict:
    return {
        "command": command,
        "verdict": "obstruction",
        "rank": exc.rank,
        "total": exc.table.total,
        "graded": [{"degree": list(lam), "dim": e.dim} for lam, e in exc.table.entries.items()],
        "message": str(exc),
    }


# -- plots -----------------------------------------------------------------------

_PALETTE = ["#1b6ca8", "#d1495b", "#2e933c", "#edae49", "#66a182", "#8d6a9f", "#00798c", "#c05746"]


def _fnum(x) -> str:
    return f"{float(x):.4f}".rstrip("0").rstrip(".")


def emit_plot(report: dict, fmt: str = "svg") -> str:
    """Render the tropical functions of a report as SVG, or as exact JSON cell data."""
    trops = report.get("tropical")
    if not trops:
        raise ParseError("report carries no tropical functions to plot")
    if fmt == "json":
        return canonical_json({"tropical": trops})
    if fmt != "svg":
        raise ParseError(f"unknown plot format {fmt!r}")
    dim = max(t["dimension"] for t in trops)
    if dim > 2:
        raise UnsupportedDimension(f"SVG output supports skeleta of dimension at most 2, got {dim}")
    return _svg_graphs(trops) if dim == 1 else _svg_cells(trops) if dim == 2 else _svg_points(trops)


def _edges(trops) -> list[tuple]:
    seen = []
    for t in trops:
        for c in t["cells"]:
            key = tuple(c["simplex"])
            if key not in seen:
                seen.append(key)
    return seen


def _svg_graphs(trops) -> str:
    edges = _edges(trops)
    vals = [frac(v["value"]) for t in trops for c in t["cells"] for v in c["vertices"]]
    lo, hi = min(vals), max(vals)
    span = (hi - lo) or 1
    pw, ph, pad = 320, 220, 40
    width = pad + len(edges) * (pw + pad)
    height = ph + 2 * pad + 20 * len(trops)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>']

    def y_of(v):
        return pad + ph - float((frac(v) - lo) / span) * ph

    for e, edge in enumerate(edges):
        x0 = pad + e * (pw + pad)
        out.append(f'<rect x="{x0}" y="{pad}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>')
        out.append(f'<text x="{x0}" y="{pad + ph + 16}" font-size="12">{edge[0]}</text>')
        out.append(f'<text x="{x0 + pw}" y="{pad + ph + 16}" font-size="12" text-anchor="end">{edge[-1]}</text>')
        for i, t in enumerate(trops):
            pts = []
            for c in t["cells"]:
                if tuple(c["simplex"]) != edge:
                    continue
                for v in c["vertices"]:
                    pos = frac(v["u"][-1]) if len(edge) > 1 else Fraction(0)
                    pts.append((pos, frac(v["value"])))
            pts = sorted(set(pts))
            path = " ".join(f"{_fnum(x0 + float(p) * pw)},{_fnum(y_of(v))}" for p, v in pts)
            color = _PALETTE[i % len(_PALETTE)]
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"/>')
            for p, v in pts:
                out.append(f'<circle cx="{_fnum(x0 + float(p) * pw)}" cy="{_fnum(y_of(v))}" r="3" fill="{color}">'
                           f'<title>u={format_frac(p)}, value={format_frac(v)}</title></circle>')
    for i, t in enumerate(trops):
        out.append(f'<text x="{pad}" y="{pad + ph + 36 + 20 * i}" font-size="12" fill="{_PALETTE[i % len(_PALETTE)]}">'
                   f'{_xml(t["section"])}</text>')
    out.append(f'<text x="{pad}" y="{pad - 12}" font-size="12">range [{format_frac(lo)}, {format_frac(hi)}]</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _svg_cells(trops) -> str:
    size, pad = 260, 30
    width = pad + len(trops) * (size + pad)
    height = size + 3 * pad
    corners = [(0.0, 1.0), (1.0, 1.0), (0.5, 1.0 - 0.866)]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>']
    for i, t in enumerate(trops):
        x0 = pad + i * (size + pad)
        cvals = []
        for c in t["cells"]:
            vs = [frac(v["value"]) for v in c["vertices"]]
            cvals.append(sum(vs, Fraction(0)) / len(vs))
        lo, hi = min(cvals), max(cvals)
        span = (hi - lo) or 1
        for c, cv in zip(t["cells"], cvals):
            pts = []
            for v in c["vertices"]:
                u = [float(frac(x)) for x in v["u"]] + [0.0] * (3 - len(v["u"]))
                px = sum(ui * cx for ui, (cx, _) in zip(u, corners))
                py = sum(ui * cy for ui, (_, cy) in zip(u, corners))
                pts.append((px, py))
            cx = sum(p[0] for p in pts) / len(pts)
            cy = sum(p[1] for p in pts) / len(pts)
            pts.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
            shade = int(230 - 170 * float((cv - lo) / span))
            path = " ".join(f"{_fnum(x0 + px * size)},{_fnum(pad + py * size)}" for px, py in pts)
            out.append(f'<polygon points="{path}" fill="rgb({shade},{shade},255)" stroke="#333" stroke-width="0.7">'
                       f'<title>{"-".join(c["simplex"])}: mean value {format_frac(cv)}</title></polygon>')
        out.append(f'<text x="{x0}" y="{size + 2 * pad}" font-size="12">{_xml(t["section"])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _svg_points(trops) -> str:
    lines = [f"{_xml(t['section'])}: {format_frac(frac(t['cells'][0]['vertices'][0]['value']))}" for t in trops]
    out = ['<svg xmlns="http://www.w3.org/2000/svg" width="400" height="%d">' % (30 + 20 * len(lines))]
    out += [f'<text x="10" y="{25 + 20 * i}" font-size="12">{ln}</text>' for i, ln in enumerate(lines)]
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _xml(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reesdiag", description="Valuatively independent bases from model files.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--model", required=True, help="model file (.json or .toml)")
    p.add_argument("--precision", type=int, help="working t-precision; for 'lift', the target level")
    p.add_argument("--level", type=int, help="section level to use (default: the last one)")
    p.add_argument("--out", help="write the output here instead of stdout")
    p.add_argument("--format", choices=("json", "svg"), default="json")
    p.add_argument("--seed", type=int, help="seed for representative choices")
    p.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        model = parse_model(args.model)
        report, code = run(args.command, model, args.level, args.seed, args.precision)
    except Obstruction as exc:
        report, code = _obstruction_report(args.command, exc), EXIT_OBSTRUCTION
        if isinstance(exc, NotDiagonalizableMod):
            report["verdict"] = "obstruction modulo t^i"
    except ReesDiagError as exc:
        report = {"command": args.command, "verdict": "error", "error": {"type": type(exc).__name__, "message": str(exc)}}
        code = EXIT_ERROR
        print(f"reesdiag: {type(exc).__name__}: {exc}", file=sys.stderr)
    report["exit_code"] = code
    if args.timing:
        report["timing_seconds"] = round(time.perf_counter() - start, 3)
    if args.format == "svg" and code != EXIT_ERROR:
        try:
            text = emit_plot(report, "svg")
        except ReesDiagError as exc:
            print(f"reesdiag: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_ERROR
    else:
        text = canonical_json(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
