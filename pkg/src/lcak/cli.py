"""Command-line front end: ``lcak list | describe | verify | eval``.

Exit codes: 0 success, 2 a check failed (or the requested quantity does not
exist at the point), 3 the manifold or point could not be resolved.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import conformal as cf
from . import foliation as fo
from . import gray as gr
from . import hermitian as hs
from . import metric as mg
from . import expr as ex
from . import pipeline as pl
from . import zoo
from .chart import ChartManifold, load_manifold
from .errors import DefinitionError, LcakError, StencilOutOfDomain

EXIT_OK, EXIT_FAIL, EXIT_DEFINITION = 0, 2, 3


# --- JSON with fixed float formatting -----------------------------------------


def _num(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x + 0.0, ".17g")  # + 0.0 folds -0.0 into 0.0
    return s if any(c in s for c in ".en") else s + ".0"


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits; key order is preserved."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# --- manifold resolution -----------------------------------------------------


def resolve(ref: str) -> tuple[ChartManifold, float, zoo.ZooEntry | None]:
    """A definition file path or a built-in name -> (manifold, example scale, zoo entry)."""
    path = Path(ref)
    if path.is_file():
        return load_manifold(path), 0.5, None
    try:
        entry = zoo.get(ref)
    except KeyError as exc:
        raise DefinitionError(f"{ref!r} is neither a readable file nor a built-in manifold") from exc
    return entry.manifold, entry.example_scale, entry


def _parse_point(text: str, dim: int) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise DefinitionError(f"cannot parse point {text!r}") from None
    if len(vals) != dim:
        raise DefinitionError(f"point needs {dim} coordinates, got {len(vals)}")
    return np.array(vals)


# --- eval operations ---------------------------------------------------------


def _labels(M: ChartManifold, prefix: str) -> list[str]:
    return [prefix + c for c in M.coord_names]


def _vector(M: ChartManifold, v: np.ndarray) -> dict[str, float]:
    return dict(zip(_labels(M, "d/d"), map(float, v)))


def _matrix(a: np.ndarray) -> list[list[float]]:
    return np.asarray(a, dtype=float).tolist()


def _op_lee(M, p, s):
    lee = hs.extract_lee_form(M, p).scaled(s)
    return lee.omega.labelled(M.coord_names)


EvalOp = Callable[[ChartManifold, np.ndarray, float], Any]

OPS: dict[str, EvalOp] = {
    "metric": lambda M, p, s: _matrix(M.metric_at(p)),
    "J": lambda M, p, s: _matrix(M.J_at(p)),
    "fundamental-form": lambda M, p, s: hs.fundamental_form(M, p).labelled(M.coord_names),
    "d-fundamental-form": lambda M, p, s: hs.d_fundamental_form(M, p).labelled(M.coord_names),
    "lee-form": _op_lee,
    "lee-vector": lambda M, p, s: _vector(M, hs.extract_lee_form(M, p).scaled(s).B),
    "lee-norm2": lambda M, p, s: hs.extract_lee_form(M, p).scaled(s).normB2,
    "d-lee": lambda M, p, s: hs.check_lee_closed(M, p),
    "christoffel": lambda M, p, s: mg.christoffel(M, p).tolist(),
    "riemann": lambda M, p, s: mg.riemann(M, p).low.tolist(),
    "ricci": lambda M, p, s: _matrix(mg.ricci(M, p)),
    "scalar": lambda M, p, s: mg.scalar(M, p),
    "ricci-star": lambda M, p, s: _matrix(cf.ricci_star(M, p)),
    "scalar-star": lambda M, p, s: cf.scalar_star(M, p),
    "p-tensor": lambda M, p, s: _matrix(cf.p_tensor(M, p).components),
    "trace-p": lambda M, p, s: cf.p_tensor(M, p).trace,
    "div-lee": lambda M, p, s: s * hs.divergence_lee(M, p),
    "leaf-frame": lambda M, p, s: _matrix(fo.split_frame(M, p, s).leaf),
    "div-along-leaf": lambda M, p, s: fo.leaf_geometry(M, p, s).div_along_leaf,
    "mean-curvature-coefficient": lambda M, p, s: fo.leaf_geometry(M, p, s).mean_curvature_coefficient,
    "second-fundamental-form": lambda M, p, s: _matrix(fo.leaf_geometry(M, p, s).alpha),
    "autoparallel": lambda M, p, s: fo.autoparallel_residual(M, p, s),
    "bundle-like": lambda M, p, s: fo.bundle_like_residual(M, p, s).definition,
    "gray": lambda M, p, s: _gray_dict(gr.gray_residuals(M, p)),
}


def _gray_dict(rep: gr.GrayReport) -> dict[str, Any]:
    return {
        "identity1": rep.residual1,
        "identity2": rep.residual2,
        "identity3": rep.residual3,
        "in_L1": rep.in_L1,
        "in_L2": rep.in_L2,
        "in_L3": rep.in_L3,
        "yabien": rep.yabien_residual,
    }


# --- subcommands ---------------------------------------------------------------


def cmd_list(args) -> int:
    for e in zoo.zoo():
        print(f"{e.name:26s} dim {e.manifold.dim}  {e.provenance}")
    return EXIT_OK


def cmd_describe(args) -> int:
    M, scale, entry = resolve(args.manifold)
    info: dict[str, Any] = {
        "name": M.name,
        "dim": M.dim,
        "coords": list(M.coord_names),
        "domain": [c.source for c in M.constraints],
        "metric": {
            f"g_{i + 1}_{j + 1}": ex.to_source(M.metric_exprs[i][j])
            for i in range(M.dim)
            for j in range(i, M.dim)
            if M.metric_exprs[i][j] != ex.Num(0.0)
        },
        "J": {
            f"J_{i + 1}_{j + 1}": ex.to_source(M.J_exprs[i][j])
            for i in range(M.dim)
            for j in range(M.dim)
            if M.J_exprs[i][j] != ex.Num(0.0)
        },
        "f": None if M.f_expr is None else ex.to_source(M.f_expr),
        "sample_box": None if M.sample_box is None else [list(b) for b in M.sample_box],
        "example_scale": scale,
    }
    if entry is not None:
        info["expected_flags"] = dict(entry.expected.__dict__)
        info["provenance"] = entry.provenance
    if args.format == "json":
        print(dumps(info))
    else:
        for k, v in info.items():
            print(f"{k}: {v}")
    return EXIT_OK


def _parse_tols(items: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in items or ():
        key, _, val = item.partition("=")
        if key not in pl.DEFAULT_TOLERANCES or not val:
            raise DefinitionError(f"bad tolerance override {item!r}; keys: {', '.join(pl.DEFAULT_TOLERANCES)}")
        out[key] = float(val)
    return out


def _parse_suites(text: str) -> list[str]:
    if text == "all":
        return list(pl.SUITES)
    suites = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in suites if s not in pl.SUITES]
    if bad:
        raise DefinitionError(f"unknown check suite(s) {bad}; choose from {', '.join(pl.SUITES)} or all")
    return suites


def format_text(report: pl.VerificationReport) -> str:
    lines = [
        f"manifold {report.manifold}  seed {report.seed}  points {len(report.points)}  lee {report.lee_convention}",
    ]
    for suite, res in report.results.items():
        if res["status"] == "skipped":
            lines.append(f"[{suite}] skipped: {res['reason']}")
            continue
        lines.append(f"[{suite}] {res['status']}")
        for k, err in res.get("errors", {}).items():
            lines.append(f"  point {k}: {err}")
        for name, chk in res["checks"].items():
            vals = [v for v in chk["values"] if v is not None]
            if not vals:
                shown = "n/a"
            elif isinstance(vals[0], bool):
                shown = f"{sum(map(bool, vals))}/{len(vals)} true"
            elif "max" in chk:
                shown = f"max {chk['max']:.3e}"
            else:
                shown = f"range [{min(vals):.6g}, {max(vals):.6g}]"
            tol = f"  tol {chk['tol']:.0e}" if "tol" in chk and chk["asserted"] else ""
            lines.append(f"  {chk['status']:5s} {name:30s} {shown}{tol}")
    lines.append("PASS" if report.passed else "FAIL: " + ", ".join(report.failed_checks()))
    return "\n".join(lines)


def cmd_verify(args) -> int:
    M, scale, _ = resolve(args.manifold)
    suites = _parse_suites(args.checks)
    report = pl.verify(
        M,
        suites=suites,
        points=args.points,
        seed=args.seed,
        tolerances=_parse_tols(args.tol),
        lee_convention=args.lee_convention,
        example_scale=scale,
        jobs=args.jobs,
    )
    text = dumps(report.to_dict()) if args.format == "json" else format_text(report)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_eval(args) -> int:
    M, scale, _ = resolve(args.manifold)
    p = M.check_point(_parse_point(args.at, M.dim))
    s = 1.0 if args.lee_convention == "canonical" else scale
    try:
        value = OPS[args.op](M, p, s)
    except (StencilOutOfDomain, DefinitionError):
        raise
    except LcakError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out = {"manifold": M.name, "op": args.op, "point": p.tolist(), "lee_convention": args.lee_convention, "value": value}
    print(dumps(out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lcak", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list built-in manifolds").set_defaults(func=cmd_list)

    d = sub.add_parser("describe", help="show a manifold definition")
    d.add_argument("manifold", help="built-in name or definition file")
    d.add_argument("--format", choices=("text", "json"), default="text")
    d.set_defaults(func=cmd_describe)

    v = sub.add_parser("verify", help="run check suites at sampled points")
    v.add_argument("manifold", help="built-in name or definition file")
    v.add_argument("--checks", default="all", help=f"comma list of {', '.join(pl.SUITES)}, or all")
    v.add_argument("--points", type=int, default=25)
    v.add_argument("--seed", type=int, default=7)
    v.add_argument("--tol", action="append", metavar="KEY=VALUE", help="tolerance override (repeatable)")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.add_argument("--jobs", type=int, default=1, help="worker processes for point-level parallelism")
    v.add_argument("--lee-convention", choices=pl.LEE_CONVENTIONS, default="canonical")
    v.add_argument("--output", help="write the report to this file instead of stdout")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eval", help="evaluate one quantity at one point")
    e.add_argument("manifold", help="built-in name or definition file")
    e.add_argument("op", choices=sorted(OPS))
    e.add_argument("--at", required=True, help="comma-separated coordinates (use --at=-1,2,... for a leading minus)")
    e.add_argument("--lee-convention", choices=pl.LEE_CONVENTIONS, default="canonical")
    e.set_defaults(func=cmd_eval)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DefinitionError, StencilOutOfDomain, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEFINITION


if __name__ == "__main__":
    sys.exit(main())
