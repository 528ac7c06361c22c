"""Conformal change g_t = exp(-f) g with df = ω: transformed connection and curvatures.

Each transform identity is checked two ways: the right-hand side is assembled
from (R, ω, ∇ω, B, ∇B) of g, and the left-hand side is computed directly from
the rescaled chart whose metric entries are the expressions exp(-f)·g_ij.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import hermitian as hs
from . import metric as mg
from .chart import ChartManifold, gradient
from .errors import MissingConformalExponent

TERM_GROUPS = ("R", "Y-term", "X-term", "gYZ-term", "gXZ-term", "normB2-term")


def _max(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


class ConformalPoint:
    """Lazily computed ingredients of the transform identities at one point.

    Everything is cached so the several residuals at a point share the same
    Christoffel symbols, curvature tensors and Lee data.
    """

    def __init__(self, M: ChartManifold, p: Sequence[float]):
        if M.f_expr is None:
            raise MissingConformalExponent(f"{M.name!r} has no conformal exponent")
        self.M = M
        self.p = np.asarray(p, dtype=float)
        self.n = M.n

    @cached_property
    def g(self) -> np.ndarray:
        return self.M.metric_at(self.p)

    @cached_property
    def ginv(self) -> np.ndarray:
        return mg.inverse_metric(self.g)

    @cached_property
    def J(self) -> np.ndarray:
        return self.M.J_at(self.p)

    @cached_property
    def lee(self) -> hs.LeeData:
        return hs.extract_lee_form(self.M, self.p)

    @property
    def omega(self) -> np.ndarray:
        return self.lee.omega.components

    @property
    def B(self) -> np.ndarray:
        return self.lee.B

    @property
    def normB2(self) -> float:
        return self.lee.normB2

    @cached_property
    def nabla_omega(self) -> np.ndarray:
        """[i,j] = (∇_{∂_i} ω)(∂_j)."""
        return hs.covariant_lee(self.M, self.p)

    @cached_property
    def nabla_B(self) -> np.ndarray:
        """[i,k] = (∇_{∂_i} B)^k."""
        return hs.covariant_lee_vector(self.M, self.p)

    @cached_property
    def div_B(self) -> float:
        return float(np.trace(self.nabla_B))

    @cached_property
    def frame(self) -> np.ndarray:
        return mg.orthonormal_frame(self.M, self.p, self.g)

    @cached_property
    def curvature(self) -> mg.CurvatureValue:
        return mg.riemann(self.M, self.p)

    @cached_property
    def rescaled(self) -> ChartManifold:
        return self.M.conformal_rescaling()

    @cached_property
    def g_t(self) -> np.ndarray:
        return self.rescaled.metric_at(self.p)

    @cached_property
    def frame_t(self) -> np.ndarray:
        return mg.orthonormal_frame(self.rescaled, self.p, self.g_t)

    @cached_property
    def curvature_t(self) -> mg.CurvatureValue:
        return mg.riemann(self.rescaled, self.p)

    @cached_property
    def f(self) -> float:
        return self.M.f_at(self.p)

    @cached_property
    def P(self) -> np.ndarray:
        return (
            self.nabla_omega
            + 0.5 * np.outer(self.omega, self.omega)
            - 0.25 * self.normB2 * self.g
        )

    @cached_property
    def pack(self) -> "CurvaturePack":
        return curvature_pack(self.M, self.p, self)

    @cached_property
    def trace_P(self) -> float:
        """Σ_a P(E_a, E_a) over the g-orthonormal frame."""
        return float(np.einsum("ax,ay,xy->", self.frame, self.frame, self.P))


@dataclass(frozen=True)
class PTensor:
    """P(X,Y) = (∇_X ω)Y + ½ω(X)ω(Y) − ¼‖B‖² g(X,Y) on the coordinate basis.

    ``trace`` is the frame sum Σ P(E_a, E_a).  ``div_B`` and ``normB2`` allow the
    closed forms of the trace to be compared against it.
    """

    components: np.ndarray
    trace: float
    div_B: float
    normB2: float
    n: int

    @property
    def symmetry_residual(self) -> float:
        return _max(self.components - self.components.T)

    @property
    def trace_closed_form(self) -> float:
        """div B + ½(1 − n)‖B‖², what the definition of P traces to."""
        return self.div_B + 0.5 * (1 - self.n) * self.normB2

    @property
    def trace_alternate_form(self) -> float:
        """div B − ½(1 − n)‖B‖², the closed form with the opposite sign on the norm term."""
        return self.div_B - 0.5 * (1 - self.n) * self.normB2


def p_tensor(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> PTensor:
    c = ctx or ConformalPoint(M, p)
    return PTensor(c.P, c.trace_P, c.div_B, c.normB2, c.n)


def transformed_connection(M: ChartManifold, p: Sequence[float], X, Y, ctx: ConformalPoint | None = None) -> np.ndarray:
    """∇^t_X Y = ∇_X Y − ½{ω(X)Y + ω(Y)X − g(X,Y)B}; X constant, Y constant or a field."""
    c = ctx or ConformalPoint(M, p)
    x = np.asarray(X, dtype=float)
    y = np.asarray(Y(c.p) if callable(Y) else Y, dtype=float)
    base = mg.covariant_derivative_vector(M, c.p, x, Y)
    w = c.omega
    return base - 0.5 * ((w @ x) * y + (w @ y) * x - (x @ c.g @ y) * c.B)


def transformed_christoffel(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> np.ndarray:
    """Γ^t[k,i,j] assembled from the transform formula on coordinate fields."""
    c = ctx or ConformalPoint(M, p)
    gam = mg.christoffel(M, c.p)
    eye = np.eye(M.dim)
    w = c.omega
    corr = np.einsum("i,kj->kij", w, eye) + np.einsum("j,ki->kij", w, eye) - np.einsum("ij,k->kij", c.g, c.B)
    return gam - 0.5 * corr


def connection_transform_residual(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> float:
    c = ctx or ConformalPoint(M, p)
    return _max(transformed_christoffel(M, c.p, c) - mg.christoffel(c.rescaled, c.p))


def curvature_formula(ctx: ConformalPoint, flip: Sequence[str] = ()) -> np.ndarray:
    """Right-hand side of the R^t(X,Y)Z transform on all coordinate triples.

    Output slot order matches :class:`~lcak.metric.CurvatureValue.up`.  Each name
    in ``flip`` (from :data:`TERM_GROUPS`) has its sign reversed, which is used to
    check that every group is actually exercised.
    """
    c = ctx
    d = c.M.dim
    eye = np.eye(d)
    w, B, g = c.omega, c.B, c.g
    s = {name: (-1.0 if name in flip else 1.0) for name in TERM_GROUPS}
    a = c.nabla_omega + 0.5 * np.outer(w, w)  # a[i,k] = (∇_i ω)_k + ½ ω_i ω_k
    b = c.nabla_B + 0.5 * np.outer(w, B)  # b[i,l] = (∇_i B)^l + ½ ω_i B^l
    terms = {
        "R": c.curvature.up,
        "Y-term": 0.5 * np.einsum("jk,il->ijkl", a, eye),
        "X-term": -0.5 * np.einsum("ik,jl->ijkl", a, eye),
        "gYZ-term": 0.5 * np.einsum("jk,il->ijkl", g, b),
        "gXZ-term": -0.5 * np.einsum("ik,jl->ijkl", g, b),
        "normB2-term": -0.25 * c.normB2 * (np.einsum("jk,il->ijkl", g, eye) - np.einsum("ik,jl->ijkl", g, eye)),
    }
    return sum(s[name] * terms[name] for name in TERM_GROUPS)


def lowered_curvature_formula(ctx: ConformalPoint) -> np.ndarray:
    """R(X,Y,Z,W) + ½{g(X,W)P(Y,Z) − g(Y,W)P(X,Z)} + ½{g(Y,Z)P(X,W) − g(X,Z)P(Y,W)}."""
    g, P = ctx.g, ctx.P
    return ctx.curvature.low + 0.5 * (
        np.einsum("il,jk->ijkl", g, P)
        - np.einsum("jl,ik->ijkl", g, P)
        + np.einsum("jk,il->ijkl", g, P)
        - np.einsum("ik,jl->ijkl", g, P)
    )


@dataclass(frozen=True)
class TransformResidual:
    max: float
    frobenius: float

    @classmethod
    def of(cls, diff: np.ndarray) -> "TransformResidual":
        return cls(_max(diff), float(np.linalg.norm(np.ravel(diff))))


def curvature_transform_residual(
    M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None, flip: Sequence[str] = ()
) -> dict[str, TransformResidual]:
    """Direct R^t versus the transform formula, for (1,3) and lowered forms.

    Keys: ``"vector"`` (R^t(X,Y)Z), ``"lowered"`` (exp(f)R^t(X,Y,Z,W)) and
    ``"antisymmetry"`` (formula under X ↔ Y).
    """
    c = ctx or ConformalPoint(M, p)
    rhs = curvature_formula(c, flip)
    lowered = np.exp(c.f) * c.curvature_t.low
    return {
        "vector": TransformResidual.of(c.curvature_t.up - rhs),
        "lowered": TransformResidual.of(lowered - lowered_curvature_formula(c)),
        "antisymmetry": TransformResidual.of(rhs + np.swapaxes(rhs, 0, 1)),
    }


# --- Ricci and scalar curvatures, plain and star ---------------------------


def ricci_star_from(low: np.ndarray, frame: np.ndarray, J: np.ndarray) -> np.ndarray:
    """ρ*(X,Y) = Σ_a R(E_a, X, JY, JE_a)."""
    JE = frame @ J.T  # rows: J E_a
    return np.einsum("ai,al,ixml,my->xy", frame, JE, low, J)


def ricci_star_contracted(low: np.ndarray, ginv: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Same trace by contraction with g^{-1}: ρ*_xy = g^{iq} R_{ixml} J^m_y J^l_q."""
    return np.einsum("iq,ixml,my,lq->xy", ginv, low, J, J)


def ricci_star(M: ChartManifold, p: Sequence[float], curvature: mg.CurvatureValue | None = None) -> np.ndarray:
    curvature = curvature or mg.riemann(M, p)
    return ricci_star_from(curvature.low, mg.orthonormal_frame(M, p), M.J_at(p))


def scalar_star(M: ChartManifold, p: Sequence[float], curvature: mg.CurvatureValue | None = None) -> float:
    frame = mg.orthonormal_frame(M, p)
    curvature = curvature or mg.riemann(M, p)
    return mg.scalar_from(ricci_star_from(curvature.low, frame, M.J_at(p)), frame)


@dataclass(frozen=True)
class CurvaturePack:
    """Curvatures of g and (computed directly) of g_t at one point."""

    R: mg.CurvatureValue
    rho: np.ndarray
    tau: float
    rho_star: np.ndarray
    tau_star: float
    R_t: mg.CurvatureValue
    rho_t: np.ndarray
    tau_t: float
    rho_t_star: np.ndarray
    tau_t_star: float


def curvature_pack(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> CurvaturePack:
    c = ctx or ConformalPoint(M, p)
    rho = mg.ricci_from(c.curvature.low, c.frame)
    rho_s = ricci_star_from(c.curvature.low, c.frame, c.J)
    rho_t = mg.ricci_from(c.curvature_t.low, c.frame_t)
    rho_ts = ricci_star_from(c.curvature_t.low, c.frame_t, c.J)
    return CurvaturePack(
        R=c.curvature,
        rho=rho,
        tau=mg.scalar_from(rho, c.frame),
        rho_star=rho_s,
        tau_star=mg.scalar_from(rho_s, c.frame),
        R_t=c.curvature_t,
        rho_t=rho_t,
        tau_t=mg.scalar_from(rho_t, c.frame_t),
        rho_t_star=rho_ts,
        tau_t_star=mg.scalar_from(rho_ts, c.frame_t),
    )


def ricci_transform_residual(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> float:
    """ρ^t versus ρ + (n−1)P + ½ g trace P, max over coordinate pairs."""
    c = ctx or ConformalPoint(M, p)
    k = c.pack
    rhs = k.rho + (c.n - 1) * c.P + 0.5 * c.g * c.trace_P
    return _max(k.rho_t - rhs)


def ricci_star_transform_residual(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> float:
    """ρ^{t*} versus ρ* + ½{P(X,Y) + P(JX,JY)}."""
    c = ctx or ConformalPoint(M, p)
    k = c.pack
    rhs = k.rho_star + 0.5 * (c.P + c.J.T @ c.P @ c.J)
    return _max(k.rho_t_star - rhs)


SCALAR_VARIANTS = ("alternate", "derived", "trace", "flipped-div")


def scalar_transform_residuals(
    M: ChartManifold, p: Sequence[float], variant: str = "derived", ctx: ConformalPoint | None = None
) -> tuple[float, float]:
    """Residuals of the scalar and scalar-star transforms.

    ``exp(-f) τ^t`` is compared with τ + (2n−1)·T and ``exp(-f) τ^{t*}`` with
    τ* + S, where, by ``variant``:

    * ``"alternate"``: T = div B − ½(1−n)‖B‖², S = div B + (n−1)‖B‖²
      (the sign-flipped norm terms; reported, not expected to hold);
    * ``"derived"``: T = div B + ½(1−n)‖B‖², S = div B + ½(1−n)‖B‖²
      (the closed forms that the trace of P actually reduces to);
    * ``"trace"``: T = S = Σ P(E_a, E_a) from the frame;
    * ``"flipped-div"``: the derived forms with the sign of div B reversed
      (a deliberately corrupted formula).
    """
    c = ctx or ConformalPoint(M, p)
    k = c.pack
    n, div, b2 = c.n, c.div_B, c.normB2
    if variant == "alternate":
        T, S = div - 0.5 * (1 - n) * b2, div + (n - 1) * b2
    elif variant == "derived":
        T = S = div + 0.5 * (1 - n) * b2
    elif variant == "trace":
        T = S = c.trace_P
    elif variant == "flipped-div":
        T = S = -div + 0.5 * (1 - n) * b2
    else:
        raise ValueError(f"unknown variant {variant!r}; choose from {SCALAR_VARIANTS}")
    scale = np.exp(-c.f)
    return (
        abs(scale * k.tau_t - (k.tau + (2 * n - 1) * T)),
        abs(scale * k.tau_t_star - (k.tau_star + S)),
    )


def lie_derivative_metric(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> np.ndarray:
    """(L_B g)_ij = B^k ∂_k g_ij + g_kj ∂_i B^k + g_ik ∂_j B^k (bracket formula on coordinate fields)."""
    c = ctx or ConformalPoint(M, p)
    dg = gradient(M.metric_values, c.p)
    dB = gradient(lambda q: hs.lee_vector_values(M, q), c.p)  # dB[i,k] = ∂_i B^k
    return np.einsum("k,kij->ij", c.B, dg) + np.einsum("kj,ik->ij", c.g, dB) + np.einsum("ik,jk->ij", c.g, dB)


def lie_derivative_residual(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> float:
    """‖L_B g − 2∇ω‖∞."""
    c = ctx or ConformalPoint(M, p)
    return _max(lie_derivative_metric(M, c.p, c) - 2.0 * c.nabla_omega)


def conformal_exponent_residual(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> float:
    """‖df − ω‖∞: the stored f must integrate the canonical Lee form."""
    c = ctx or ConformalPoint(M, p)
    df = gradient(lambda q: M.f_at(q), c.p)
    return _max(df - c.omega)


def rescaled_frame_residual(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> float:
    """exp(f)^{1/2} E_a is g_t-orthonormal: ‖E^t G_t E^tᵀ − I‖∞."""
    c = ctx or ConformalPoint(M, p)
    Et = np.exp(c.f) ** 0.5 * c.frame
    return _max(Et @ c.g_t @ Et.T - np.eye(M.dim))


def star_equals_plain_residual(M: ChartManifold, p: Sequence[float], ctx: ConformalPoint | None = None) -> float:
    """|τ^t − τ^{t*}| for the rescaled metric."""
    c = ctx or ConformalPoint(M, p)
    k = c.pack
    return abs(k.tau_t - k.tau_t_star)
