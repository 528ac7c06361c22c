"""The codimension-one foliation D = ker ω: projections, leaf frames and leaf geometry.

All leaf quantities are pointwise, through a g-orthonormal frame of D at the
point.  Q X = X − ω(X) B/‖B‖² projects onto D and Q⊥ = I − Q onto span{B}.

The Lee pair can be rescaled (``scale``): every quantity is then computed for
the fields s·ω and s·B, which is how the worked example's own normalization
is reproduced.  ``omega_field`` replaces the extracted Lee form by any closed
1-form field, e.g. a constant one on a flat chart.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import hermitian as hs
from . import metric as mg
from .chart import ChartManifold, gradient
from .errors import DegenerateLeeField

TOL_DEGENERATE = 1e-8
TOL_PROJECTION = 1e-9
TOL_FIRST = 1e-6
TOL_BUNDLE = 1e-5

OneFormField = Callable[[np.ndarray], np.ndarray]


class LeePoint:
    """Cached Lee data and its derivatives at one point, for a possibly rescaled or imposed ω."""

    def __init__(
        self,
        M: ChartManifold,
        p: Sequence[float],
        scale: float = 1.0,
        omega_field: OneFormField | None = None,
        tol_degenerate: float = TOL_DEGENERATE,
    ):
        """Raises:
            NotLCaK: if ω is extracted and dΩ = ω∧Ω fails at ``p``.
            DegenerateLeeField: if ‖B‖² < ``tol_degenerate``.
        """
        self.M = M
        self.p = np.asarray(p, dtype=float)
        self.scale = float(scale)
        self._omega_field = omega_field
        if omega_field is None:
            hs.extract_lee_form(M, self.p)  # raises NotLCaK off the LCaK locus
        if self.normB2 < tol_degenerate:
            raise DegenerateLeeField(self.normB2)

    def omega_at(self, q: np.ndarray) -> np.ndarray:
        if self._omega_field is not None:
            return self.scale * np.asarray(self._omega_field(q), dtype=float)
        return self.scale * hs.lee_form_values(self.M, q)

    def B_at(self, q: np.ndarray) -> np.ndarray:
        return mg.inverse_metric(self.M.metric_values(q)) @ self.omega_at(q)

    def Q_at(self, q: np.ndarray) -> np.ndarray:
        """Matrix of Q at ``q`` (Q[k, x] = (Q ∂_x)^k)."""
        w = self.omega_at(q)
        B = mg.inverse_metric(self.M.metric_values(q)) @ w
        return np.eye(self.M.dim) - np.outer(B, w) / (w @ B)

    @cached_property
    def g(self) -> np.ndarray:
        return self.M.metric_at(self.p)

    @cached_property
    def omega(self) -> np.ndarray:
        return self.omega_at(self.p)

    @cached_property
    def B(self) -> np.ndarray:
        return mg.inverse_metric(self.g) @ self.omega

    @cached_property
    def normB2(self) -> float:
        return float(self.omega @ self.B)

    @cached_property
    def Q(self) -> np.ndarray:
        return np.eye(self.M.dim) - np.outer(self.B, self.omega) / self.normB2

    @cached_property
    def Q_perp(self) -> np.ndarray:
        return np.outer(self.B, self.omega) / self.normB2

    @cached_property
    def nabla_B(self) -> np.ndarray:
        """[i,k] = (∇_{∂_i} B)^k."""
        return mg.covariant_jacobian(self.M, self.p, self.B_at)

    @cached_property
    def nabla_omega(self) -> np.ndarray:
        """[i,j] = (∇_{∂_i} ω)(∂_j), from ω directly."""
        dw = gradient(self.omega_at, self.p)
        return dw - np.einsum("kij,k->ij", mg.christoffel(self.M, self.p), self.omega)

    @cached_property
    def d_normB2(self) -> np.ndarray:
        """∂_i ‖B‖² = ∂_i ω(B)."""
        return gradient(lambda q: float(self.omega_at(q) @ self.B_at(q)), self.p)

    @cached_property
    def nabla_Q(self) -> np.ndarray:
        """[i,k,x] = (∇_{∂_i} Q∂_x)^k, the field Q∂_x differentiated covariantly."""
        return mg.covariant_jacobian(self.M, self.p, self.Q_at)

    @cached_property
    def split(self) -> "SplitFrame":
        return _split_frame(self)


@dataclass(frozen=True)
class SplitFrame:
    """g-orthonormal frame of D = ker ω (rows of ``leaf``) and the unit normal B/‖B‖."""

    leaf: np.ndarray
    normal: np.ndarray
    Q: np.ndarray
    Q_perp: np.ndarray

    @property
    def full(self) -> np.ndarray:
        """Leaf frame followed by the unit normal."""
        return np.vstack([self.leaf, self.normal])


def _split_frame(lp: LeePoint) -> SplitFrame:
    g = lp.g
    dim = lp.M.dim
    leaf: list[np.ndarray] = []
    for a in range(dim):
        v = lp.Q[:, a]
        w = v.copy()
        for e in leaf:
            w = w - (e @ g @ w) * e
        ref = np.sqrt(g[a, a])  # g-length of ∂_a
        norm = np.sqrt(max(w @ g @ w, 0.0))
        if norm <= 1e-8 * ref:
            continue
        leaf.append(w / norm)
    if len(leaf) != dim - 1:
        raise DegenerateLeeField(lp.normB2)
    return SplitFrame(np.array(leaf), lp.B / np.sqrt(lp.normB2), lp.Q, lp.Q_perp)


def split_frame(
    M: ChartManifold, p: Sequence[float], scale: float = 1.0, omega_field: OneFormField | None = None
) -> SplitFrame:
    """Leaf frame by Gram–Schmidt of Q∂_1, Q∂_2, … in order, skipping (near-)dependent vectors.

    Raises:
        DegenerateLeeField: if ‖B‖² is below the degeneracy tolerance.
    """
    return LeePoint(M, p, scale, omega_field).split


@dataclass(frozen=True)
class BundleLikeResidual:
    """Both routes of the bundle-like expression on all frame triples, and their difference."""

    definition: float
    formula: float
    two_route: float


def bundle_like_terms(lp: LeePoint) -> tuple[np.ndarray, np.ndarray]:
    """Arrays [x,y,z] over the frame {leaf, N} of

    g(∇_{Q⊥Y} QX, Q⊥Z) + g(∇_{Q⊥Z} QX, Q⊥Y)

    by covariant differentiation of the field QX, and of its closed form
    −(2/‖B‖⁴) ω(Y) ω(Z) (∇_B ω)(QX).  X, Y, Z are extended as fields with
    constant coordinate components.
    """
    F = lp.split.full
    g = lp.g
    V = F @ lp.Q_perp.T  # rows: Q⊥ of each frame vector
    # D[v, x, k] = (∇_{V_v} Q F_x)^k
    D = np.einsum("vi,ikx,Xx->vXk", V, lp.nabla_Q, F)
    t = np.einsum("yXk,kl,zl->Xyz", D, g, V)
    definition = t + np.swapaxes(t, 1, 2)
    wF = F @ lp.omega
    dB_omega = lp.B @ lp.nabla_omega  # (∇_B ω)_j
    formula = -(2.0 / lp.normB2**2) * np.einsum("y,z,x->xyz", wF, wF, (F @ lp.Q.T) @ dB_omega)
    return definition, formula


def bundle_like_residual(
    M: ChartManifold,
    p: Sequence[float],
    scale: float = 1.0,
    omega_field: OneFormField | None = None,
    lp: LeePoint | None = None,
) -> BundleLikeResidual:
    lp = lp or LeePoint(M, p, scale, omega_field)
    d, f = bundle_like_terms(lp)
    return BundleLikeResidual(float(np.max(np.abs(d))), float(np.max(np.abs(f))), float(np.max(np.abs(d - f))))


def autoparallel_residual(
    M: ChartManifold,
    p: Sequence[float],
    scale: float = 1.0,
    omega_field: OneFormField | None = None,
    lp: LeePoint | None = None,
) -> float:
    """‖∇_B B − B(ln‖B‖) B‖_g."""
    lp = lp or LeePoint(M, p, scale, omega_field)
    nBB = lp.B @ lp.nabla_B
    b_ln = 0.5 * (lp.B @ lp.d_normB2) / lp.normB2
    v = nBB - b_ln * lp.B
    return float(np.sqrt(max(v @ lp.g @ v, 0.0)))


@dataclass(frozen=True)
class LeafGeometry:
    """Extrinsic geometry of the leaf through a point, on the leaf frame e_1, …, e_{2n−1}.

    ``alpha[a, b]`` is the coefficient g(∇_{e_a}B, e_b) of the second fundamental
    form against the non-unit normal B; ``alpha_hat = alpha/‖B‖²`` is the same
    form against the unit normal.  ``shape_operator[a, b] = g(A_B e_a, e_b)``
    with ∇_X B = −A_B X + (normal part).  ``weingarten_residual`` is
    max_a |g(∇_{e_a}B, B) − ½ e_a(ω(B))|.
    """

    frame: np.ndarray
    alpha: np.ndarray
    alpha_hat: np.ndarray
    shape_operator: np.ndarray
    div_along_leaf: float
    mean_curvature_coefficient: float
    mean_curvature_vector: np.ndarray
    weingarten_residual: float
    normB2: float

    @property
    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.alpha - self.alpha.T)))


def leaf_geometry(
    M: ChartManifold,
    p: Sequence[float],
    scale: float = 1.0,
    omega_field: OneFormField | None = None,
    lp: LeePoint | None = None,
) -> LeafGeometry:
    lp = lp or LeePoint(M, p, scale, omega_field)
    E = lp.split.leaf
    g = lp.g
    DB = E @ lp.nabla_B  # rows: ∇_{e_a} B
    alpha = DB @ g @ E.T
    div = float(np.trace(alpha))
    h = div / (M.dim - 1)
    normal_part = DB @ g @ lp.B
    weing = float(np.max(np.abs(normal_part - 0.5 * (E @ lp.d_normB2))))
    return LeafGeometry(
        frame=E,
        alpha=alpha,
        alpha_hat=alpha / lp.normB2,
        shape_operator=-alpha,
        div_along_leaf=div,
        mean_curvature_coefficient=h,
        mean_curvature_vector=h * lp.B,
        weingarten_residual=weing,
        normB2=lp.normB2,
    )


def lie_derivative_on_leaf(lp: LeePoint) -> np.ndarray:
    """(L_B g)(e_a, e_b) on the leaf frame, from the bracket formula in coordinates."""
    dg = gradient(lp.M.metric_values, lp.p)
    dB = gradient(lp.B_at, lp.p)  # dB[i,k] = ∂_i B^k
    L = np.einsum("k,kij->ij", lp.B, dg) + np.einsum("kj,ik->ij", lp.g, dB) + np.einsum("ik,jk->ij", lp.g, dB)
    E = lp.split.leaf
    return E @ L @ E.T


@dataclass(frozen=True)
class LeafFlags:
    minimal: bool
    totally_geodesic: bool
    killing_on_leaf: bool
    div_along_leaf: float
    alpha_norm: float
    killing_residual: float

    @property
    def equivalences_hold(self) -> bool:
        """Totally geodesic ⇔ B is Killing on the leaf."""
        return self.totally_geodesic == self.killing_on_leaf


def minimality_and_killing(
    M: ChartManifold,
    p: Sequence[float],
    tol: float = TOL_FIRST,
    scale: float = 1.0,
    omega_field: OneFormField | None = None,
    lp: LeePoint | None = None,
) -> LeafFlags:
    """Minimal ⇔ |div along the leaf| ≤ tol; totally geodesic ⇔ ‖α‖∞ ≤ tol; Killing ⇔ ‖L_B g|_D‖∞ ≤ tol."""
    lp = lp or LeePoint(M, p, scale, omega_field)
    geo = leaf_geometry(M, p, lp=lp)
    a = float(np.max(np.abs(geo.alpha)))
    k = float(np.max(np.abs(lie_derivative_on_leaf(lp))))
    return LeafFlags(
        minimal=abs(geo.div_along_leaf) <= tol,
        totally_geodesic=a <= tol,
        killing_on_leaf=k <= tol,
        div_along_leaf=geo.div_along_leaf,
        alpha_norm=a,
        killing_residual=k,
    )
