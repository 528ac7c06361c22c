"""Verification suites over sampled points and the report they produce.

A suite is a list of named checks.  Every check yields one value per point
(a float residual, a bool flag, or None when it does not apply there) and is
either asserted against a tolerance or only reported.  Points are independent,
so they can be evaluated in worker processes; the report is always assembled
in point order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import conformal as cf
from . import foliation as fo
from . import gray as gr
from . import hermitian as hs
from . import metric as mg
from .chart import ChartManifold, sample_points
from .errors import DegenerateLeeField, LcakError

SCHEMA = 1
SUITES = ("hermitian", "lcak", "conformal", "gray", "foliation", "curvature")
LEE_CONVENTIONS = ("canonical", "paper-example-halved")

DEFAULT_TOLERANCES = {
    "hermitian": 1e-9,
    "lee": 1e-6,
    "projection": 1e-9,
    "frame": 1e-8,
    "first": 1e-6,
    "first_loose": 1e-5,
    "bundle": 1e-5,
    "curvature": 1e-4,
    "gray": 1e-4,
}


@dataclass(frozen=True)
class CheckSpec:
    """How a check is judged: against ``tol`` (residuals) or as a flag that must be True."""

    suite: str
    name: str
    tol: str | None = None
    asserted: bool = True
    kind: str = "residual"  # residual | flag | value


def _max(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


# --- per-point suite evaluation --------------------------------------------


def _hermitian(M: ChartManifold, p: np.ndarray, tols: dict, state: dict) -> dict[str, Any]:
    r1, r2 = hs.check_almost_hermitian(M, p)
    M.metric_at(p)
    hs.fundamental_form(M, p)
    return {"J_squared": r1, "J_isometry": r2, "nondegenerate": True}


def _lcak(M: ChartManifold, p: np.ndarray, tols: dict, state: dict) -> dict[str, Any]:
    omega, _, rel = hs.solve_lee_form(M, p)
    dOmega = hs.d_fundamental_form(M, p).norm_inf()
    out = {"lee_relative_residual": rel, "dOmega_norm": dOmega, "d_lee": None, "df_minus_lee": None}
    if rel <= tols["lee"]:
        out["d_lee"] = hs.check_lee_closed(M, p)
        if M.f_expr is not None:
            out["df_minus_lee"] = cf.conformal_exponent_residual(M, p, state["ctx"]())
    B = mg.inverse_metric(M.metric_values(p)) @ omega
    out["lee_norm2"] = state["scale"] ** 2 * float(omega @ B)
    out["almost_kahler"] = dOmega <= tols["first"]
    return out


def _conformal(M: ChartManifold, p: np.ndarray, tols: dict, state: dict) -> dict[str, Any]:
    c = state["ctx"]()
    curv = cf.curvature_transform_residual(M, p, c)
    P = cf.p_tensor(M, p, c)
    s_derived = cf.scalar_transform_residuals(M, p, "derived", c)
    s_alternate = cf.scalar_transform_residuals(M, p, "alternate", c)
    return {
        "connection": cf.connection_transform_residual(M, p, c),
        "curvature_vector": curv["vector"].max,
        "curvature_lowered": curv["lowered"].max,
        "ricci": cf.ricci_transform_residual(M, p, c),
        "ricci_star": cf.ricci_star_transform_residual(M, p, c),
        "scalar": s_derived[0],
        "scalar_star": s_derived[1],
        "scalar_alternate": s_alternate[0],
        "scalar_star_alternate": s_alternate[1],
        "p_symmetry": P.symmetry_residual,
        "trace_p_two_route": abs(P.trace - P.trace_closed_form),
        "trace_p_alternate_two_route": abs(P.trace - P.trace_alternate_form),
        "lie_derivative": cf.lie_derivative_residual(M, p, c),
        "trace_p": P.trace,
    }


def _gray(M: ChartManifold, p: np.ndarray, tols: dict, state: dict) -> dict[str, Any]:
    c = state["ctx"]()
    rep = gr.gray_residuals(M, p, tols["gray"], c)
    return {
        "identity1": rep.residual1,
        "identity2": rep.residual2,
        "identity3": rep.residual3,
        "in_L1": rep.in_L1,
        "in_L2": rep.in_L2,
        "in_L3": rep.in_L3,
        "chain": rep.chain_ok,
        "yabien": rep.yabien_residual,
        "tau_t_equals_tau_t_star": cf.star_equals_plain_residual(M, p, c) if rep.in_L1 else None,
    }


def _foliation(M: ChartManifold, p: np.ndarray, tols: dict, state: dict) -> dict[str, Any]:
    try:
        lp = fo.LeePoint(M, p, state["scale"])
    except DegenerateLeeField:
        if hs.d_fundamental_form(M, p).norm_inf() <= tols["first"]:
            return {"__skip__": "ω = 0"}
        raise
    sf = lp.split
    E, g = sf.leaf, lp.g
    bl = fo.bundle_like_residual(M, p, lp=lp)
    ap = fo.autoparallel_residual(M, p, lp=lp)
    geo = fo.leaf_geometry(M, p, lp=lp)
    flags = fo.minimality_and_killing(M, p, tols["first"], lp=lp)
    Q, Qp = lp.Q, lp.Q_perp
    eye = np.eye(M.dim)
    return {
        "frame_orthonormal": _max(E @ g @ E.T - np.eye(M.dim - 1)),
        "frame_in_kernel": _max(E @ lp.omega),
        "projector_algebra": max(_max(Q @ Q - Q), _max(Qp @ Qp - Qp), _max(Q @ Qp), _max(Q + Qp - eye), _max(lp.omega @ Q)),
        "bundle_like": bl.definition,
        "bundle_like_two_route": bl.two_route,
        "autoparallel": ap,
        "riemannian_iff_autoparallel": (bl.definition <= tols["bundle"]) == (ap <= tols["bundle"]),
        "alpha_symmetry": geo.symmetry_residual,
        "weingarten": geo.weingarten_residual,
        "div_along_leaf": geo.div_along_leaf,
        "mean_curvature_coefficient": geo.mean_curvature_coefficient,
        "minimal": flags.minimal,
        "totally_geodesic": flags.totally_geodesic,
        "killing_on_leaf": flags.killing_on_leaf,
        "geodesic_iff_killing": flags.equivalences_hold,
    }


def _curvature(M: ChartManifold, p: np.ndarray, tols: dict, state: dict) -> dict[str, Any]:
    R = mg.riemann(M, p)
    R2 = mg.riemann_operator(M, p)
    sym = mg.symmetry_residuals(R)
    frame = mg.orthonormal_frame(M, p)
    ginv = mg.inverse_metric(M.metric_values(p))
    J = M.J_at(p)
    dd = hs.exterior_derivative(lambda q: hs.d_fundamental_form(M, q), p).norm_inf()
    return {
        "riemann_two_route": _max(R.up - R2.up),
        "antisymmetry": max(sym["antisym_first_pair"], sym["antisym_last_pair"]),
        "pair_symmetry": sym["pair_symmetry"],
        "bianchi": sym["bianchi"],
        "ricci_two_route": _max(mg.ricci_from(R.low, frame) - mg.ricci_contracted(M, p, R)),
        "ricci_star_two_route": _max(cf.ricci_star_from(R.low, frame, J) - cf.ricci_star_contracted(R.low, ginv, J)),
        "d_squared": dd,
    }


_RUNNERS: dict[str, Callable] = {
    "hermitian": _hermitian,
    "lcak": _lcak,
    "conformal": _conformal,
    "gray": _gray,
    "foliation": _foliation,
    "curvature": _curvature,
}

CHECKS: tuple[CheckSpec, ...] = (
    CheckSpec("hermitian", "J_squared", "hermitian"),
    CheckSpec("hermitian", "J_isometry", "hermitian"),
    CheckSpec("hermitian", "nondegenerate", kind="flag"),
    CheckSpec("lcak", "lee_relative_residual", "lee"),
    CheckSpec("lcak", "d_lee", "first_loose"),
    CheckSpec("lcak", "df_minus_lee", "first"),
    CheckSpec("lcak", "dOmega_norm", asserted=False, kind="value"),
    CheckSpec("lcak", "lee_norm2", asserted=False, kind="value"),
    CheckSpec("lcak", "almost_kahler", asserted=False, kind="flag"),
    CheckSpec("conformal", "connection", "first"),
    CheckSpec("conformal", "curvature_vector", "curvature"),
    CheckSpec("conformal", "curvature_lowered", "curvature"),
    CheckSpec("conformal", "ricci", "curvature"),
    CheckSpec("conformal", "ricci_star", "curvature"),
    CheckSpec("conformal", "scalar", "curvature"),
    CheckSpec("conformal", "scalar_star", "curvature"),
    CheckSpec("conformal", "scalar_alternate", "curvature", asserted=False),
    CheckSpec("conformal", "scalar_star_alternate", "curvature", asserted=False),
    CheckSpec("conformal", "p_symmetry", "first"),
    CheckSpec("conformal", "trace_p_two_route", "first"),
    CheckSpec("conformal", "trace_p_alternate_two_route", "first", asserted=False),
    CheckSpec("conformal", "lie_derivative", "first_loose"),
    CheckSpec("conformal", "trace_p", asserted=False, kind="value"),
    CheckSpec("gray", "identity1", "gray", asserted=False),
    CheckSpec("gray", "identity2", "gray", asserted=False),
    CheckSpec("gray", "identity3", "gray", asserted=False),
    CheckSpec("gray", "in_L1", asserted=False, kind="flag"),
    CheckSpec("gray", "in_L2", asserted=False, kind="flag"),
    CheckSpec("gray", "in_L3", asserted=False, kind="flag"),
    CheckSpec("gray", "chain", kind="flag"),
    CheckSpec("gray", "yabien", "gray"),
    CheckSpec("gray", "tau_t_equals_tau_t_star", "gray"),
    CheckSpec("foliation", "frame_orthonormal", "frame"),
    CheckSpec("foliation", "frame_in_kernel", "frame"),
    CheckSpec("foliation", "projector_algebra", "projection"),
    CheckSpec("foliation", "bundle_like", "bundle", asserted=False),
    CheckSpec("foliation", "autoparallel", "bundle", asserted=False),
    CheckSpec("foliation", "bundle_like_two_route", "first"),
    CheckSpec("foliation", "riemannian_iff_autoparallel", kind="flag"),
    CheckSpec("foliation", "alpha_symmetry", "first"),
    CheckSpec("foliation", "weingarten", "first_loose"),
    CheckSpec("foliation", "div_along_leaf", asserted=False, kind="value"),
    CheckSpec("foliation", "mean_curvature_coefficient", asserted=False, kind="value"),
    CheckSpec("foliation", "minimal", asserted=False, kind="flag"),
    CheckSpec("foliation", "totally_geodesic", asserted=False, kind="flag"),
    CheckSpec("foliation", "killing_on_leaf", asserted=False, kind="flag"),
    CheckSpec("foliation", "geodesic_iff_killing", kind="flag"),
    CheckSpec("curvature", "riemann_two_route", "first_loose"),
    CheckSpec("curvature", "antisymmetry", "first_loose"),
    CheckSpec("curvature", "pair_symmetry", "first_loose"),
    CheckSpec("curvature", "bianchi", "first_loose"),
    CheckSpec("curvature", "ricci_two_route", "first_loose"),
    CheckSpec("curvature", "ricci_star_two_route", "first_loose"),
    CheckSpec("curvature", "d_squared", "first_loose"),
)


def _error_text(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}"


def evaluate_point(M: ChartManifold, p: Sequence[float], suites: Sequence[str], tols: dict, scale: float) -> dict:
    """Run the selected suites at one point.

    Returns ``{suite: {"values": {...}} | {"error": str} | {"skip": str}}``.
    """
    p = np.asarray(p, dtype=float)
    ctx_box: list[cf.ConformalPoint] = []

    def ctx() -> cf.ConformalPoint:
        if not ctx_box:
            ctx_box.append(cf.ConformalPoint(M, p))
        return ctx_box[0]

    state = {"ctx": ctx, "scale": scale}
    out = {}
    for suite in suites:
        try:
            values = _RUNNERS[suite](M, p, tols, state)
        except (LcakError, ArithmeticError, np.linalg.LinAlgError) as exc:
            out[suite] = {"error": _error_text(exc)}
            continue
        if "__skip__" in values:
            out[suite] = {"skip": values["__skip__"]}
        else:
            out[suite] = {"values": values}
    return out


def _evaluate_star(args) -> dict:
    return evaluate_point(*args)


# --- report assembly ---------------------------------------------------------


@dataclass
class VerificationReport:
    manifold: str
    seed: int
    points: list[list[float]]
    suites: list[str]
    tolerances: dict[str, float]
    lee_convention: str
    lee_scale: float
    results: dict[str, Any] = field(default_factory=dict)
    passed: bool = True

    def to_dict(self) -> dict:
        from . import __version__

        return {
            "schema": SCHEMA,
            "version": __version__,
            "manifold": self.manifold,
            "seed": self.seed,
            "points": self.points,
            "suites": self.suites,
            "tolerances": dict(sorted(self.tolerances.items())),
            "conventions": {
                "lee": self.lee_convention,
                "lee_scale": self.lee_scale,
                "curvature": "R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z",
                "ricci": "rho(X,Y) = sum_a R(E_a, X, Y, E_a)",
                "forms": "increasing multi-index components",
                "conformal": "g_t = exp(-f) g with df = omega (canonical)",
            },
            "results": self.results,
            "summary": {"passed": self.passed, "failed": self.failed_checks()},
        }

    def failed_checks(self) -> list[str]:
        out = []
        for suite, res in self.results.items():
            if res["status"] == "error":
                out.append(suite)
            for name, chk in res.get("checks", {}).items():
                if chk["status"] == "fail":
                    out.append(f"{suite}.{name}")
        return out


def _judge(spec: CheckSpec, values: list, tols: dict) -> str:
    present = [v for v in values if v is not None]
    if not spec.asserted:
        return "info"
    if not present:
        return "n/a"
    if spec.kind == "flag":
        return "pass" if all(bool(v) for v in present) else "fail"
    tol = tols[spec.tol]
    return "pass" if all(math.isfinite(v) and abs(v) <= tol for v in present) else "fail"


def assemble(per_point: list[dict], suites: Sequence[str], tols: dict) -> tuple[dict, bool]:
    results: dict[str, Any] = {}
    ok = True
    for suite in suites:
        entries = [pp[suite] for pp in per_point]
        errors = {str(k): e["error"] for k, e in enumerate(entries) if "error" in e}
        skips = [e["skip"] for e in entries if "skip" in e]
        if len(skips) == len(entries):
            results[suite] = {"status": "skipped", "reason": skips[0]}
            continue
        checks = {}
        for spec in CHECKS:
            if spec.suite != suite:
                continue
            vals = [e.get("values", {}).get(spec.name) for e in entries]
            status = _judge(spec, vals, tols)
            entry = {"status": status, "asserted": spec.asserted, "values": vals}
            if spec.tol is not None:
                entry["tol"] = tols[spec.tol]
            present = [v for v in vals if isinstance(v, float)]
            if spec.kind == "residual" and present:
                entry["max"] = max(abs(v) for v in present)
            checks[spec.name] = entry
            ok &= status != "fail"
        status = "error" if errors else ("fail" if any(c["status"] == "fail" for c in checks.values()) else "pass")
        ok &= not errors
        res: dict[str, Any] = {"status": status, "checks": checks}
        if errors:
            res["errors"] = errors
        if skips:
            res["skipped_points"] = len(skips)
        results[suite] = res
    return results, ok


def verify(
    M: ChartManifold,
    suites: Sequence[str] = SUITES,
    points: int = 25,
    seed: int = 7,
    tolerances: dict[str, float] | None = None,
    lee_convention: str = "canonical",
    example_scale: float = 0.5,
    jobs: int = 1,
    name: str | None = None,
) -> VerificationReport:
    """Sample ``points`` admissible points with ``seed`` and run ``suites`` at each."""
    tols = dict(DEFAULT_TOLERANCES)
    tols.update(tolerances or {})
    if lee_convention not in LEE_CONVENTIONS:
        raise ValueError(f"unknown Lee convention {lee_convention!r}")
    scale = 1.0 if lee_convention == "canonical" else example_scale
    suites = [s for s in SUITES if s in suites]
    pts = sample_points(M, points, seed)
    args = [(M, p, suites, tols, scale) for p in pts]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_point = list(pool.map(_evaluate_star, args))
    else:
        per_point = [_evaluate_star(a) for a in args]
    results, ok = assemble(per_point, suites, tols)
    return VerificationReport(
        manifold=name or M.name,
        seed=seed,
        points=[list(map(float, p)) for p in pts],
        suites=list(suites),
        tolerances=tols,
        lee_convention=lee_convention,
        lee_scale=scale,
        results=results,
        passed=ok,
    )


# --- structural flags ---------------------------------------------------------


@dataclass(frozen=True)
class ObservedFlags:
    is_almost_hermitian: bool
    is_lcak: bool
    is_almost_kahler: bool
    lee_autoparallel: bool | None
    leaves_minimal: bool | None


def observed_flags(M: ChartManifold, points: np.ndarray, tols: dict | None = None) -> ObservedFlags:
    """Structural flags measured at ``points`` (a flag holds only if it holds at every point)."""
    t = dict(DEFAULT_TOLERANCES)
    t.update(tols or {})
    herm = lcak = ak = True
    auto: list[bool] = []
    minimal: list[bool] = []
    for p in points:
        r1, r2 = hs.check_almost_hermitian(M, p)
        herm &= r1 <= t["hermitian"] and r2 <= t["hermitian"]
        _, _, rel = hs.solve_lee_form(M, p)
        is_lcak = rel <= t["lee"] and hs.check_lee_closed(M, p) <= t["first_loose"]
        lcak &= is_lcak
        ak &= hs.d_fundamental_form(M, p).norm_inf() <= t["first"]
        if is_lcak:
            try:
                lp = fo.LeePoint(M, p)
            except DegenerateLeeField:
                continue
            auto.append(fo.autoparallel_residual(M, p, lp=lp) <= t["bundle"])
            minimal.append(abs(fo.leaf_geometry(M, p, lp=lp).div_along_leaf) <= t["first"])
    return ObservedFlags(
        is_almost_hermitian=herm,
        is_lcak=lcak,
        is_almost_kahler=ak,
        lee_autoparallel=None if ak or not lcak else all(auto),
        leaves_minimal=None if ak or not lcak else all(minimal),
    )
