"""File formats and the ``normalplanes`` command line.

Curves travel as CSV (``s,x,y,z`` with ``#`` metadata comments, 17
significant digits); verification results as JSON matching REPORT_SCHEMA.

Exit codes: 0 success, 1 input error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import curve_families as fam
from .geom_core import DEFAULT_TOLERANCES, CurveSamples, GeometryError, Tolerances
from .sphere_map import SphereAssociation, lift_from_sphere, project_to_sphere
from .verifier import VerificationReport, classify

ENV_TOLERANCES = "NPC_TOL_OVERRIDES"

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2

# flags each generated family must show when read back by `verify`
CLAIMS: dict[str, dict[str, bool]] = {
    "plane-involute": {"constant_normal_distance": True, "plane": True, "radial_law": True},
    "twisted-example": {"constant_normal_distance": True, "plane": False, "radial_law": True},
    "circle-involute": {"constant_normal_distance": True, "plane": True, "radial_law": True},
    "constant-curvature-np": {"constant_normal_distance": True, "constant_curvature": True},
    "sphere-circle": {"spherical": True},
    "rectifying-lift": {"rectifying": True},
}

_NUM_OR_NULL = {"type": ["number", "null"]}
_FLAG = {
    "type": "object",
    "required": ["value", "deviation", "tolerance"],
    "properties": {"value": {"type": "boolean"}, "deviation": _NUM_OR_NULL, "tolerance": {"type": "number"}},
}
_DIST = {
    "type": "object",
    "required": ["mean", "max_dev"],
    "properties": {"mean": _NUM_OR_NULL, "max_dev": _NUM_OR_NULL},
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "normalplanes verification report",
    "type": "object",
    "required": ["family", "params", "n_samples", "distances", "flags", "residuals", "fixed_point", "tolerances"],
    "properties": {
        "family": {"type": ["string", "null"]},
        "params": {"type": "object"},
        "n_samples": {"type": "integer", "minimum": 1},
        "distances": {
            "type": "object",
            "required": ["normal", "osculating", "rectifying"],
            "properties": {"normal": _DIST, "osculating": _DIST, "rectifying": _DIST},
        },
        "flags": {
            "type": "object",
            "required": ["constant_normal_distance", "spherical", "plane", "constant_curvature", "rectifying"],
            "additionalProperties": _FLAG,
        },
        "residuals": {
            "type": "object",
            "required": ["res311_max", "res312_max", "flatness_max"],
            "additionalProperties": _NUM_OR_NULL,
        },
        "fitted": {"type": "object", "additionalProperties": {"type": "number"}},
        "fixed_point": {
            "type": "object",
            "required": ["p", "d", "rank_deficient_dirs"],
            "properties": {
                "p": {"oneOf": [{"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                                {"type": "null"}]},
                "d": _NUM_OR_NULL,
                "rank_deficient_dirs": {
                    "type": "array",
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
                },
                "condition": _NUM_OR_NULL,
            },
        },
        "tolerances": {
            "type": "object",
            "required": ["tol_eq", "tol_curv", "tol_const", "delta_min", "max_newton_iter"],
            "additionalProperties": {"type": "number"},
        },
        "claims": {"type": "object"},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.kind, self.message, self.code = kind, message, code


# --- CSV -----------------------------------------------------------------

_RESERVED = ("family", "epsilon", "arclength")


def format_curve_csv(curve: CurveSamples, comments: Sequence[str] = ()) -> str:
    out = io.StringIO()
    out.write(f"# family: {curve.label}\n")
    out.write(f"# epsilon: {'none' if curve.epsilon is None else curve.epsilon}\n")
    out.write(f"# arclength: {'true' if curve.arclength else 'false'}\n")
    for key, value in curve.params.items():
        out.write(f"# param.{key}: {json.dumps(value, ensure_ascii=False)}\n")
    for line in comments:
        out.write(f"# note: {line}\n")
    column = "s1" if curve.params.get("parameter") == "s1" else "s"
    out.write(f"{column},x,y,z\n")
    for s, (x, y, z) in zip(curve.s_values, curve.points):
        out.write(f"{s:.17g},{x:.17g},{y:.17g},{z:.17g}\n")
    return out.getvalue()


def write_curve_csv(curve: CurveSamples, path, comments: Sequence[str] = ()) -> None:
    Path(path).write_text(format_curve_csv(curve, comments), encoding="utf-8")


def parse_curve_csv(text: str) -> tuple[CurveSamples, list[str]]:
    """Parse CSV text; returns the curve and any free-form note lines."""
    meta: dict[str, str] = {}
    params: dict = {}
    notes: list[str] = []
    rows: list[list[float]] = []
    header = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            key, value = key.strip(), value.strip()
            if not sep:
                continue
            if key == "note":
                notes.append(value)
            elif key.startswith("param."):
                try:
                    params[key[6:]] = json.loads(value)
                except json.JSONDecodeError:
                    params[key[6:]] = value
            else:
                meta[key] = value
            continue
        if header is None:
            header = [h.strip() for h in line.split(",")]
            if len(header) != 4 or header[0] not in ("s", "s1") or header[1:] != ["x", "y", "z"]:
                raise ValueError(f"line {lineno}: expected header 's,x,y,z', got {line!r}")
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field in {line!r}") from None
    if header is None or not rows:
        raise ValueError("no data rows")
    data = np.array(rows)
    eps_text = meta.get("epsilon", "none")
    epsilon = None if eps_text in ("none", "") else int(eps_text)
    if header[0] == "s1":
        params.setdefault("parameter", "s1")
    curve = CurveSamples(
        s_values=data[:, 0],
        points=data[:, 1:],
        epsilon=epsilon,
        label=meta.get("family", ""),
        arclength=meta.get("arclength", "true").lower() != "false",
        params=params,
    )
    return curve, notes


def read_curve_csv(path) -> tuple[CurveSamples, list[str]]:
    return parse_curve_csv(Path(path).read_text(encoding="utf-8"))


# --- JSON report -----------------------------------------------------------


def _num(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def report_to_json(report: VerificationReport, family: str | None = None, params=None) -> dict:
    fp = report.fixed_point
    doc = {
        "family": family or None,
        "params": dict(params or {}),
        "n_samples": report.n_samples,
        "distances": {k: {kk: _num(vv) for kk, vv in v.items()} for k, v in report.distances.items()},
        "flags": {
            name: {"value": bool(f.value), "deviation": _num(f.deviation), "tolerance": float(f.tolerance)}
            for name, f in report.flags.items()
        },
        "residuals": {k: _num(v) for k, v in report.residuals.items()},
        "fitted": {k: float(v) for k, v in report.fitted.items() if _num(v) is not None},
        "fixed_point": {
            "p": None if fp is None else [float(x) for x in fp.p],
            "d": None if fp is None else _num(fp.d),
            "rank_deficient_dirs": [] if fp is None else [[float(x) for x in v] for v in fp.deficient_dirs],
            "condition": None if fp is None else _num(fp.condition),
        },
        "tolerances": report.tolerances.as_dict(),
        "notes": list(report.notes),
    }
    if family in CLAIMS:
        expected = CLAIMS[family]
        failed = [k for k, v in expected.items() if k not in report.flags or report.flags[k].value != v]
        doc["claims"] = {"expected": expected, "failed": failed, "passed": not failed}
    return doc


# --- tolerances -------------------------------------------------------------


def resolve_tolerances(args: argparse.Namespace | None = None, environ=None) -> Tolerances:
    """Defaults, then the JSON object in $NPC_TOL_OVERRIDES, then flags."""
    environ = os.environ if environ is None else environ
    tol = DEFAULT_TOLERANCES
    raw = environ.get(ENV_TOLERANCES)
    if raw:
        try:
            tol = Tolerances.from_mapping(json.loads(raw), tol)
        except (ValueError, TypeError) as exc:
            raise CliError("tolerances", f"bad {ENV_TOLERANCES}: {exc}") from None
    if args is not None:
        flags = {k: getattr(args, k) for k in ("tol_eq", "tol_const") if getattr(args, k, None) is not None}
        if flags:
            try:
                tol = Tolerances.from_mapping(flags, tol)
            except ValueError as exc:
                raise CliError("tolerances", str(exc)) from None
    return tol


# --- commands ---------------------------------------------------------------


def _s_range(args, default_lo, default_hi):
    lo = default_lo if args.s_min is None else args.s_min
    hi = default_hi if args.s_max is None else args.s_max
    if not hi > lo:
        raise CliError("flags", f"--s-max must exceed --s-min (got {lo} and {hi})")
    return lo, hi


def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise CliError("flags", f"family {args.family} needs {flags}")


def build_curve(args, tol: Tolerances) -> CurveSamples:
    family = args.family
    n = args.samples
    if family in ("plane-involute", "twisted-example"):
        _require(args, "c")
        eps = args.epsilon
        c2 = args.c**2
        default = sorted([eps * c2 * (1 + tol.delta_min), eps * 10 * c2])
        lo, hi = _s_range(args, *default)
        es = sorted([eps * lo, eps * hi])
        grid = fam.branch_grid(args.c, eps, n, es[0], es[1], spacing=args.spacing, tolerances=tol)
        gen = fam.gen_plane_involute if family == "plane-involute" else fam.gen_twisted_example
        return gen(args.c, eps, grid, tol)
    if family == "circle-involute":
        _require(args, "radius")
        eps2 = args.epsilon
        near, far = args.c2 + eps2 * 0.05 * args.radius, args.c2 + eps2 * 3 * args.radius
        lo, hi = _s_range(args, min(near, far), max(near, far))
        return fam.gen_circle_involute(args.radius, args.c2, eps2, np.linspace(lo, hi, n), tol)
    if family == "sphere-circle":
        _require(args, "height")
        rho = math.sqrt(max(1 - args.height**2, 0.0))
        lo, hi = _s_range(args, -math.pi * rho, math.pi * rho)
        return fam.gen_sphere_circle(args.height, np.linspace(lo, hi, n))
    if family == "rectifying-lift":
        _require(args, "a")
        height = 1 / math.sqrt(2) if args.height is None else args.height
        lo, hi = _s_range(args, -1.2, 1.2)
        base = fam.gen_sphere_circle(height, np.linspace(lo, hi, n))
        return fam.lift_rectifying(base, args.a, tol)
    if family == "constant-curvature-np":
        _require(args, "r", "h")
        spec = fam.ConstantCurvatureNP(args.r, args.h, args.epsilon, args.tau_sign)
        edge = (spec.r**2 + spec.h**2) / (2 * spec.h)
        default = sorted([spec.epsilon * 1.2 * edge, spec.epsilon * 5 * edge])
        lo, hi = _s_range(args, *default)
        return fam.gen_constant_curvature_np(spec, np.linspace(lo, hi, n), step=args.step)
    raise CliError("flags", f"unknown family {family!r}")


def cmd_generate(args) -> int:
    tol = resolve_tolerances(args)
    curve = build_curve(args, tol)
    _emit_csv(curve, args.out)
    return EXIT_OK


def _emit_csv(curve: CurveSamples, out, comments: Sequence[str] = ()) -> None:
    if out is None or out == "-":
        sys.stdout.write(format_curve_csv(curve, comments))
    else:
        write_curve_csv(curve, out, comments)


def _load(path) -> CurveSamples:
    try:
        curve, _ = read_curve_csv(path)
    except (OSError, ValueError) as exc:
        raise CliError("parse", f"cannot read {path}: {exc}") from None
    return curve


def cmd_verify(args) -> int:
    tol = resolve_tolerances(args)
    curve = _load(args.input)
    report = classify(curve, tol, recenter=args.recenter)
    doc = report_to_json(report, curve.label or None, curve.params)
    text = json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    if args.out is None or args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    claims = doc.get("claims")
    if claims is not None and not claims["passed"]:
        raise CliError("verification", f"claimed invariants failed: {', '.join(claims['failed'])}", EXIT_VERIFY)
    return EXIT_OK


def _association(args, curve: CurveSamples) -> SphereAssociation:
    c = args.c if args.c is not None else curve.params.get("c")
    eps = args.epsilon if args.epsilon is not None else curve.params.get("epsilon", curve.epsilon)
    if c is None or eps is None:
        raise CliError("flags", "--c and --epsilon are required (not found in file metadata)")
    return SphereAssociation(float(c), int(eps))


def cmd_project(args) -> int:
    tol = resolve_tolerances(args)
    curve = _load(args.input)
    assoc = _association(args, curve)
    try:
        sphere = project_to_sphere(assoc, curve, tol)
    except GeometryError as exc:
        raise CliError("association", str(exc), EXIT_VERIFY) from None
    _emit_csv(sphere, args.out)
    return EXIT_OK


def cmd_lift(args) -> int:
    tol = resolve_tolerances(args)
    curve = _load(args.input)
    assoc = _association(args, curve)
    lifted = lift_from_sphere(assoc, curve, tol)
    _emit_csv(lifted, args.out)
    return EXIT_OK


# --- figures ------------------------------------------------------------------


def _svg(polylines: list[tuple[np.ndarray, bool]], title: str, size: int = 480) -> str:
    allpts = np.vstack([p for p, _ in polylines])
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.05 * span
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{lo[0] - pad:.6g} {-(hi[1] + pad):.6g} {span + 2 * pad:.6g} {span + 2 * pad:.6g}">',
        f"<title>{title}</title>",
    ]
    stroke = span / 300
    for pts, dashed in polylines:
        coords = " ".join(f"{x:.6g},{-y:.6g}" for x, y in pts)
        dash = f' stroke-dasharray="{4 * stroke:.4g},{3 * stroke:.4g}"' if dashed else ""
        parts.append(
            f'<polyline fill="none" stroke="black" stroke-width="{stroke:.4g}"{dash} points="{coords}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _axonometric(points: np.ndarray) -> np.ndarray:
    cos30, sin30 = math.cos(math.pi / 6), 0.5
    x, y, z = points.T
    return np.stack([(x - y) * cos30, z - (x + y) * sin30], axis=1)


def write_figure(figure: int, c: float, out_dir, samples: int = 512, es_max: float | None = None,
                 tolerances: Tolerances = DEFAULT_TOLERANCES) -> list[Path]:
    """Emit both branches of figure 1 (plane) or 2 (twisted) as CSV plus an SVG sketch."""
    if figure not in (1, 2):
        raise CliError("flags", "--figure must be 1 or 2")
    if not c > 0:
        raise CliError("flags", "--c must be positive")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    gen = fam.gen_plane_involute if figure == 1 else fam.gen_twisted_example
    hi = 20 * c * c if es_max is None else es_max
    note = f"normal planes at a distance 2c^2 = 2({c:g})^2 = {2 * c * c:g} from the origin"
    written, lines = [], []
    for eps, tag in ((1, "plus"), (-1, "minus")):
        grid = fam.branch_grid(c, eps, samples, es_max=hi, tolerances=tolerances)
        curve = gen(c, eps, grid, tolerances)
        path = out / f"figure{figure}_{tag}.csv"
        write_curve_csv(curve, path, comments=[note, "solid line" if eps > 0 else "dashed line"])
        written.append(path)
        flat = curve.points[:, :2] if figure == 1 else _axonometric(curve.points)
        lines.append((flat, eps < 0))
    svg = out / f"figure{figure}.svg"
    svg.write_text(_svg(lines, f"figure {figure}: {note}"), encoding="utf-8")
    written.append(svg)
    return written


def cmd_figures(args) -> int:
    tol = resolve_tolerances(args)
    for path in write_figure(args.figure, args.c, args.out_dir, args.samples, args.es_max, tol):
        print(path)
    return EXIT_OK


# --- entry point -------------------------------------------------------------


def _sign(text: str) -> int:
    value = int(float(text))
    if value not in (1, -1):
        raise argparse.ArgumentTypeError("must be +1 or -1")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("flags", message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="normalplanes", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="sample a curve family to CSV")
    g.add_argument("--family", required=True, choices=sorted(CLAIMS))
    g.add_argument("--c", type=float)
    g.add_argument("--epsilon", type=_sign, default=1)
    g.add_argument("--s-min", type=float)
    g.add_argument("--s-max", type=float)
    g.add_argument("--samples", type=int, default=fam.DEFAULT_SAMPLES)
    g.add_argument("--spacing", choices=["sqrt", "uniform"], default="sqrt")
    g.add_argument("--a", type=float)
    g.add_argument("--radius", type=float)
    g.add_argument("--c2", type=float, default=0.0)
    g.add_argument("--height", type=float)
    g.add_argument("--r", type=float)
    g.add_argument("--h", type=float)
    g.add_argument("--tau-sign", type=_sign, default=1)
    g.add_argument("--step", type=float, default=1e-3)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="classify a curve CSV and write a JSON report")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--tol-eq", type=float)
    v.add_argument("--tol-const", type=float)
    v.add_argument("--recenter", action="store_true", help="use the least-squares fixed point")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    for name, func, text in (
        ("project", cmd_project, "map a curve to its unit spherical curve"),
        ("lift", cmd_lift, "map a unit spherical curve back to space"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--c", type=float)
        p.add_argument("--epsilon", type=_sign)
        p.add_argument("--out")
        p.set_defaults(func=func)

    f = sub.add_parser("figures", help="write plot data for figure 1 or 2")
    f.add_argument("--figure", type=int, required=True, choices=[1, 2])
    f.add_argument("--c", type=float, default=1.0)
    f.add_argument("--out-dir", required=True)
    f.add_argument("--samples", type=int, default=fam.DEFAULT_SAMPLES)
    f.add_argument("--es-max", type=float, help="largest ε·s plotted (default 20c²)")
    f.set_defaults(func=cmd_figures)
    return parser


def _fail(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message.replace("\n", " ")}, ensure_ascii=False) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except CliError as exc:
        _fail(exc.kind, exc.message)
        return exc.code
    except GeometryError as exc:
        _fail("domain", str(exc))
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
