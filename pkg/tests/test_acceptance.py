"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL ...`` line before
asserting, so ``pytest -s tests/test_acceptance.py`` (or running this file
directly) gives a one-line-per-criterion summary.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from lcak import cli
from lcak import conformal as cf
from lcak import foliation as fo
from lcak import gray as gr
from lcak import hermitian as hs
from lcak import metric as mg
from lcak import zoo
from lcak.chart import partial, sample_points

TRANSFORM_FIXTURES = ["paper-example", "global-conformal"]
OMEGA_ZERO = ["flat-kahler", "sphere-product"]
CONFORMAL_FIXTURES = [e.name for e in zoo.zoo() if e.manifold.f_expr is not None]


def report(n: int, title: str, checks: dict[str, tuple[float, float, bool]]) -> bool:
    """Print one line for criterion ``n``; ``checks`` maps a label to (measured, tolerance, ok)."""
    ok = all(c[2] for c in checks.values())
    failed = [f"{k}={v:.3g} (tol {t:.0e})" for k, (v, t, good) in checks.items() if not good]
    tail = "" if ok else "  failed: " + "; ".join(failed)
    print(f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'} {title}{tail}")
    return ok


def within(value: float, tol: float) -> tuple[float, float, bool]:
    return value, tol, value <= tol


def above(value: float, bound: float) -> tuple[float, float, bool]:
    return value, bound, value > bound


def M_of(name: str):
    return zoo.get(name).manifold


def criterion_1() -> bool:
    M = M_of("paper-example")
    t0 = time.perf_counter()
    om_err = d_err = closed = par_err = half_err = 0.0
    for p in sample_points(M, 25, 7):
        x2 = p[1]
        Om = hs.fundamental_form(M, p).labelled(M.coord_names)
        om_err = max(om_err, abs(Om["dx1^dy1"] + 1 / x2**2), abs(Om["dx2^dy2"] - 1 / x2**2))
        dOm = hs.d_fundamental_form(M, p).labelled(M.coord_names)
        d_err = max(d_err, abs(dOm["dx1^dx2^dy1"] - 2 / x2**3))
        closed = max(closed, hs.check_lee_closed(M, p))
        lee = hs.extract_lee_form(M, p)
        target = np.array([0.0, -x2, 0.0, 0.0])
        # parallel: the component of B orthogonal to the target direction
        par_err = max(par_err, np.linalg.norm(lee.B - (lee.B @ target) / (target @ target) * target))
        half_err = max(half_err, np.max(np.abs(lee.scaled(zoo.get("paper-example").example_scale).B - target)))
    elapsed = time.perf_counter() - t0
    return report(1, "worked example reproduction", {
        "Omega components": within(om_err, 1e-6),
        "dOmega component": within(d_err, 1e-6),
        "d lee": within(closed, 1e-6),
        "B parallel": within(par_err, 1e-6),
        "B (own normalization)": within(half_err, 1e-6),
        "runtime s": within(elapsed, 5.0),
    })


def criterion_2() -> bool:
    checks = {}
    for name in TRANSFORM_FIXTURES:
        M = M_of(name)
        ctxs = [cf.ConformalPoint(M, p) for p in sample_points(M, 10, 7)]
        res = max(cf.curvature_transform_residual(M, c.p, c)["vector"].max for c in ctxs)
        checks[f"{name} two-route"] = within(res, 1e-4)
        for group in cf.TERM_GROUPS:
            worst = max(cf.curvature_transform_residual(M, c.p, c, flip=(group,))["vector"].max for c in ctxs)
            checks[f"{name} mutation {group}"] = above(worst, 1e-2)
    return report(2, "conformal curvature transform and mutation detection", checks)


def criterion_3() -> bool:
    checks = {}
    for name in TRANSFORM_FIXTURES + OMEGA_ZERO:
        M = M_of(name)
        tol = 1e-10 if name in OMEGA_ZERO else 1e-4
        worst = {"ricci": 0.0, "ricci_star": 0.0, "scalar": 0.0, "scalar_star": 0.0}
        for p in sample_points(M, 10, 7):
            c = cf.ConformalPoint(M, p)
            s, s_star = cf.scalar_transform_residuals(M, p, "alternate", c)
            for k, v in zip(worst, (cf.ricci_transform_residual(M, p, c), cf.ricci_star_transform_residual(M, p, c), s, s_star)):
                worst[k] = max(worst[k], v)
        for k, v in worst.items():
            checks[f"{name} {k}"] = within(v, tol)
    return report(3, "Ricci, Ricci*, scalar and scalar* transforms", checks)


def criterion_4() -> bool:
    checks = {}
    for name in TRANSFORM_FIXTURES:
        M = M_of(name)
        sym = tr = lie = 0.0
        for p in sample_points(M, 10, 7):
            c = cf.ConformalPoint(M, p)
            P = cf.p_tensor(M, p, c)
            sym = max(sym, P.symmetry_residual)
            tr = max(tr, abs(P.trace - P.trace_alternate_form))
            lie = max(lie, cf.lie_derivative_residual(M, p, c))
        checks[f"{name} symmetry"] = within(sym, 1e-6)
        checks[f"{name} trace two-route"] = within(tr, 1e-6)
        checks[f"{name} L_B g = 2 nabla omega"] = within(lie, 1e-5)
    return report(4, "P tensor", checks)


def criterion_5() -> bool:
    M = M_of("paper-example")
    scale = zoo.get("paper-example").example_scale
    auto = bundle = half_err = canon_err = 0.0
    non_minimal = True
    for p in sample_points(M, 10, 7):
        lp = fo.LeePoint(M, p)
        auto = max(auto, fo.autoparallel_residual(M, p, lp=lp))
        bundle = max(bundle, fo.bundle_like_residual(M, p, lp=lp).definition)
        canon_err = max(canon_err, abs(fo.leaf_geometry(M, p, lp=lp).div_along_leaf + 10.0))
        half = fo.LeePoint(M, p, scale)
        half_err = max(half_err, abs(fo.leaf_geometry(M, p, lp=half).div_along_leaf + 5.0))
        non_minimal &= not fo.minimality_and_killing(M, p, lp=half).minimal
    S = M_of("control-sheared")
    s_auto = s_bundle = np.inf
    for p in sample_points(S, 10, 7):
        lp = fo.LeePoint(S, p)
        s_auto = min(s_auto, fo.autoparallel_residual(S, p, lp=lp))
        s_bundle = min(s_bundle, fo.bundle_like_residual(S, p, lp=lp).definition)
    return report(5, "foliation", {
        "autoparallel": within(auto, 1e-5),
        "bundle-like": within(bundle, 1e-5),
        "div along leaf + 5 (halved)": within(half_err, 1e-4),
        "div along leaf + 10 (canonical)": within(canon_err, 1e-4),
        "non-minimal flagged": (float(non_minimal), 1.0, non_minimal),
        "sheared autoparallel": above(s_auto, 1e-2),
        "sheared bundle-like": above(s_bundle, 1e-2),
    })


def criterion_6() -> bool:
    violations = 0
    yab = 0.0
    gated = 0
    for name in CONFORMAL_FIXTURES:
        M = M_of(name)
        for p in sample_points(M, 100, 7):
            rep = gr.gray_residuals(M, p)
            violations += not rep.chain_ok
            if rep.in_L1:
                gated += 1
                yab = max(yab, rep.yabien_residual)
    return report(6, f"Gray classes ({gated} points in L1)", {
        "chain violations": within(float(violations), 0.0),
        "scalar identity in L1": within(yab, 1e-4),
    })


def criterion_7() -> bool:
    x0 = np.array([0.3])
    errs = [abs(partial(lambda q: np.exp(q[0]), x0, 0, step=h) - np.exp(0.3)) for h in (0.2, 0.1)]
    ratio = errs[0] / errs[1]
    dd = sym = 0.0
    for e in zoo.zoo():
        M = e.manifold
        for p in sample_points(M, 3, 7):
            dd = max(dd, hs.exterior_derivative(lambda q: hs.d_fundamental_form(M, q), p).norm_inf())
            sym = max(sym, max(mg.symmetry_residuals(mg.riemann(M, p)).values()))
    return report(7, "numerical hygiene", {
        "1/(error reduction)": within(1 / ratio, 1 / 8),
        "d o d": within(dd, 1e-5),
        "curvature symmetries and Bianchi": within(sym, 1e-5),
    })


def criterion_8(tmp_dir) -> bool:
    outs = []
    for jobs in ("1", "8"):
        target = tmp_dir / f"report-{jobs}.json"
        code = cli.main(["verify", "paper-example", "--seed", "7", "--jobs", jobs, "--format", "json", "--output", str(target)])
        outs.append((code, target.read_bytes()))
    same = outs[0][1] == outs[1][1]
    return report(8, "determinism across worker counts", {
        "byte-identical": (float(same), 1.0, same),
        "exit codes": (float(outs[0][0] + outs[1][0]), 0.0, outs[0][0] == outs[1][0] == 0),
    })


def test_criterion_1_worked_example():
    assert criterion_1()


def test_criterion_2_curvature_transform():
    assert criterion_2()


def test_criterion_3_ricci_and_scalar_transforms():
    assert criterion_3()


def test_criterion_4_p_tensor():
    assert criterion_4()


def test_criterion_5_foliation():
    assert criterion_5()


def test_criterion_6_gray():
    assert criterion_6()


def test_criterion_7_numerical_hygiene():
    assert criterion_7()


def test_criterion_8_determinism(tmp_path):
    assert criterion_8(tmp_path)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        results = [f() for f in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7)]
        results.append(criterion_8(Path(d)))
    sys.exit(0 if all(results) else 1)
