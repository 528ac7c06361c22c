"""Levi-Civita connection, curvature, traces and orthonormal frames of a chart metric.

Curvature follows ``R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z`` and
``R(X,Y,Z,W) = g(R(X,Y)Z, W)``.  Arrays use the same slot order:
``up[i,j,k,l]`` is the d/dx_l component of R(∂_i,∂_j)∂_k and
``low[i,j,k,l] = R(∂_i,∂_j,∂_k,∂_l)``.  With these conventions the round
sphere has positive sectional curvature ``R(X,Y,Y,X)`` and positive Ricci
curvature ``ρ(X,Y) = Σ R(E_i,X,Y,E_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .chart import ChartManifold, gradient, hessian
from .errors import SingularMetric

VectorField = Callable[[np.ndarray], np.ndarray]

PIVOT_TOL = 1e-12


@dataclass(frozen=True)
class CurvatureValue:
    up: np.ndarray
    low: np.ndarray


def inverse_metric(g: np.ndarray) -> np.ndarray:
    if abs(np.linalg.det(g)) < 1e-300 or np.linalg.cond(g) > 1e14:
        raise SingularMetric("metric is singular")
    return np.linalg.inv(g)


def _first_kind(dg: np.ndarray) -> np.ndarray:
    # G[l,i,j] = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij), with dg[a,i,j] = ∂_a g_ij
    return 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)


def christoffel(M: ChartManifold, p: Sequence[float]) -> np.ndarray:
    """Γ[k,i,j] = Γ^k_ij of the Levi-Civita connection at ``p``."""
    g = M.metric_values(p)
    ginv = inverse_metric(g)
    dg = gradient(M.metric_values, p)
    return np.einsum("kl,lij->kij", ginv, _first_kind(dg))


def covariant_jacobian(M: ChartManifold, p: Sequence[float], Y: VectorField) -> np.ndarray:
    """``out[i,k,...] = (∇_{∂_i} Y)^k`` for a (batch of) vector field(s).

    ``Y(q)`` returns an array whose first axis is the vector component; trailing
    axes are carried through, which lets one call differentiate many fields.
    """
    p = np.asarray(p, dtype=float)
    gam = christoffel(M, p)
    y = np.asarray(Y(p), dtype=float)
    dY = gradient(Y, p)
    return dY + np.einsum("kij,j...->ik...", gam, y)


def covariant_derivative_vector(
    M: ChartManifold, p: Sequence[float], X: VectorField | Sequence[float], Y: VectorField | Sequence[float]
) -> np.ndarray:
    """(∇_X Y)^k = X^i ∂_i Y^k + X^i Y^j Γ^k_ij; constant arrays are accepted for X and Y."""
    p = np.asarray(p, dtype=float)
    x = np.asarray(X(p) if callable(X) else X, dtype=float)
    Yf = Y if callable(Y) else (lambda q, _y=np.asarray(Y, dtype=float): _y)
    return x @ covariant_jacobian(M, p, Yf)


def riemann(M: ChartManifold, p: Sequence[float]) -> CurvatureValue:
    """Riemann tensor from the index formula with ∂Γ assembled from the metric Hessian."""
    p = np.asarray(p, dtype=float)
    g = M.metric_values(p)
    ginv = inverse_metric(g)
    dg = gradient(M.metric_values, p)
    ddg = hessian(M.metric_values, p)  # ddg[a,b,i,j] = ∂_a ∂_b g_ij
    first = _first_kind(dg)
    gam = np.einsum("kl,lij->kij", ginv, first)
    # ∂_a of first-kind symbols, then of g^{kl}
    dfirst = 0.5 * (
        np.einsum("aijl->alij", ddg) + np.einsum("ajil->alij", ddg) - np.einsum("alij->alij", ddg)
    )
    dginv = -np.einsum("kp,apq,ql->akl", ginv, dg, ginv)
    dgam = np.einsum("akl,lij->akij", dginv, first) + np.einsum("kl,alij->akij", ginv, dfirst)
    # up[i,j,k,l] = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    up = (
        np.einsum("iljk->ijkl", dgam)
        - np.einsum("jlik->ijkl", dgam)
        + np.einsum("lim,mjk->ijkl", gam, gam)
        - np.einsum("ljm,mik->ijkl", gam, gam)
    )
    return CurvatureValue(up=up, low=np.einsum("ijkm,ml->ijkl", up, g))


def riemann_operator(M: ChartManifold, p: Sequence[float]) -> CurvatureValue:
    """Independent route: apply R(∂_i,∂_j)∂_k = ∇_i(∇_j ∂_k) − ∇_j(∇_i ∂_k) literally.

    The field ∇_j ∂_k = Γ^l_jk ∂_l is covariantly differentiated by finite
    differences of the Christoffel symbols themselves.
    """
    p = np.asarray(p, dtype=float)
    cj = covariant_jacobian(M, p, lambda q: christoffel(M, q))  # cj[i,l,j,k] = (∇_i ∇_j ∂_k)^l
    up = np.einsum("iljk->ijkl", cj) - np.einsum("jlik->ijkl", cj)
    return CurvatureValue(up=up, low=np.einsum("ijkm,ml->ijkl", up, M.metric_values(p)))


def orthonormal_frame(M: ChartManifold, p: Sequence[float], g: np.ndarray | None = None) -> np.ndarray:
    """g-orthonormal frame by modified Gram–Schmidt over ∂_1, ∂_2, … in that order.

    Returns an array whose rows are the frame vectors.
    """
    g = M.metric_values(p) if g is None else g
    return gram_schmidt(np.eye(g.shape[0]), g)


def gram_schmidt(vectors: np.ndarray, g: np.ndarray, skip_tol: float | None = None) -> np.ndarray:
    """Orthonormalize the rows of ``vectors`` in order with respect to ``g``.

    With ``skip_tol`` set, vectors whose residual norm falls below it are dropped
    instead of raising; otherwise a pivot below PIVOT_TOL raises SingularMetric.
    """
    out: list[np.ndarray] = []
    for v in np.asarray(vectors, dtype=float):
        w = v.copy()
        for e in out:
            w = w - (e @ g @ w) * e
        norm2 = w @ g @ w
        if norm2 <= (skip_tol if skip_tol is not None else PIVOT_TOL) ** 2:
            if skip_tol is not None:
                continue
            raise SingularMetric(f"degenerate Gram–Schmidt pivot (norm^2 = {norm2:.3e})")
        out.append(w / np.sqrt(norm2))
    return np.array(out)


def ricci_from(low: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """ρ(X,Y) = Σ_a R(E_a, X, Y, E_a) as a coordinate matrix."""
    return np.einsum("ai,al,ixyl->xy", frame, frame, low)


def scalar_from(ric: np.ndarray, frame: np.ndarray) -> float:
    return float(np.einsum("ax,ay,xy->", frame, frame, ric))


def ricci(M: ChartManifold, p: Sequence[float], curvature: CurvatureValue | None = None) -> np.ndarray:
    """Ricci tensor ρ_xy, traced over the Gram–Schmidt orthonormal frame."""
    curvature = curvature or riemann(M, p)
    return ricci_from(curvature.low, orthonormal_frame(M, p))


def scalar(M: ChartManifold, p: Sequence[float], curvature: CurvatureValue | None = None) -> float:
    """Scalar curvature τ = Σ_a ρ(E_a, E_a)."""
    frame = orthonormal_frame(M, p)
    curvature = curvature or riemann(M, p)
    return scalar_from(ricci_from(curvature.low, frame), frame)


def ricci_contracted(M: ChartManifold, p: Sequence[float], curvature: CurvatureValue | None = None) -> np.ndarray:
    """Self-test route: ρ_xy = g^{il} R_{ixyl} by raw index contraction."""
    curvature = curvature or riemann(M, p)
    return np.einsum("il,ixyl->xy", inverse_metric(M.metric_values(p)), curvature.low)


def sectional_curvature(M: ChartManifold, p: Sequence[float], X, Y, curvature: CurvatureValue | None = None) -> float:
    curvature = curvature or riemann(M, p)
    g = M.metric_values(p)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    num = np.einsum("i,j,k,l,ijkl->", X, Y, Y, X, curvature.low)
    den = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
    return float(num / den)


def symmetry_residuals(curvature: CurvatureValue) -> dict[str, float]:
    """Max-norm residuals of the algebraic curvature symmetries and first Bianchi."""
    R = curvature.low
    return {
        "antisym_first_pair": float(np.max(np.abs(R + np.swapaxes(R, 0, 1)))),
        "antisym_last_pair": float(np.max(np.abs(R + np.swapaxes(R, 2, 3)))),
        "pair_symmetry": float(np.max(np.abs(R - np.transpose(R, (2, 3, 0, 1))))),
        "bianchi": float(
            np.max(np.abs(curvature.up + np.transpose(curvature.up, (1, 2, 0, 3)) + np.transpose(curvature.up, (2, 0, 1, 3))))
        ),
    }
