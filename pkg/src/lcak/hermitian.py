"""Almost Hermitian structure, the fundamental 2-form, exterior calculus and the Lee form.

Forms are stored by strictly increasing multi-index.  A k-form α has
components α_I for I = (i_1 < … < i_k), meaning α = Σ_I α_I dx^{i_1}∧…∧dx^{i_k},
so that α_I = α(∂_{i_1}, …, ∂_{i_k}).  Wedge and d use the usual alternating
signs: (dα)_{i_0…i_k} = Σ_j (-1)^j ∂_{i_j} α_{i_0…î_j…i_k}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .chart import ChartManifold, gradient
from .errors import DegenerateForm, NotLCaK
from .metric import christoffel, covariant_jacobian, inverse_metric

# ω ↦ ω∧Ω solve: NotLCaK above this relative residual
LEE_REL_TOL = 1e-6


@lru_cache(maxsize=None)
def _multi_indices(dim: int, degree: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations(range(dim), degree))


def _perm_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
            elif seq[i] == seq[j]:
                return 0
    return sign


@dataclass(frozen=True)
class FormValue:
    """A k-form at a point, components over increasing multi-indices."""

    dim: int
    degree: int
    components: np.ndarray

    def __post_init__(self):
        n = len(_multi_indices(self.dim, self.degree))
        if self.components.shape != (n,):
            raise ValueError(f"a {self.degree}-form in dimension {self.dim} has {n} components")

    @property
    def indices(self) -> tuple[tuple[int, ...], ...]:
        return _multi_indices(self.dim, self.degree)

    def __getitem__(self, idx: Sequence[int]) -> float:
        """Component at any index tuple, with the permutation sign applied."""
        s = _perm_sign(idx)
        if s == 0:
            return 0.0
        return s * float(self.components[self.indices.index(tuple(sorted(idx)))])

    @classmethod
    def from_dense(cls, arr: np.ndarray) -> "FormValue":
        arr = np.asarray(arr, dtype=float)
        dim, degree = arr.shape[0] if arr.ndim else 0, arr.ndim
        return cls(dim, degree, np.array([arr[I] for I in _multi_indices(dim, degree)], dtype=float))

    @classmethod
    def zeros(cls, dim: int, degree: int) -> "FormValue":
        return cls(dim, degree, np.zeros(len(_multi_indices(dim, degree))))

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim,) * self.degree)
        for I, c in zip(self.indices, self.components):
            for perm in itertools.permutations(range(self.degree)):
                out[tuple(I[k] for k in perm)] = _perm_sign(perm) * c
        return out

    def wedge(self, other: "FormValue") -> "FormValue":
        return wedge(self, other)

    def __add__(self, other: "FormValue") -> "FormValue":
        return FormValue(self.dim, self.degree, self.components + other.components)

    def __sub__(self, other: "FormValue") -> "FormValue":
        return FormValue(self.dim, self.degree, self.components - other.components)

    def __mul__(self, s: float) -> "FormValue":
        return FormValue(self.dim, self.degree, self.components * s)

    __rmul__ = __mul__

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.components))) if self.components.size else 0.0

    def labelled(self, coord_names: Sequence[str]) -> dict[str, float]:
        """Components keyed like ``"dx1^dy1"`` in canonical order."""
        return {"^".join("d" + coord_names[i] for i in I): float(c) for I, c in zip(self.indices, self.components)}


def wedge(a: FormValue, b: FormValue) -> FormValue:
    """(a∧b)_I = Σ over shuffles A ⊔ B = I of sign(A,B) a_A b_B."""
    k, l = a.degree, b.degree
    out = np.zeros(len(_multi_indices(a.dim, k + l)))
    a_pos = {I: n for n, I in enumerate(a.indices)}
    b_pos = {I: n for n, I in enumerate(b.indices)}
    for n, I in enumerate(_multi_indices(a.dim, k + l)):
        total = 0.0
        for slots in itertools.combinations(range(k + l), k):
            rest = tuple(s for s in range(k + l) if s not in slots)
            A = tuple(I[s] for s in slots)
            B = tuple(I[s] for s in rest)
            total += _perm_sign(slots + rest) * a.components[a_pos[A]] * b.components[b_pos[B]]
        out[n] = total
    return FormValue(a.dim, k + l, out)


def exterior_derivative(field: Callable[[np.ndarray], FormValue], p: Sequence[float]) -> FormValue:
    """d of a form-valued field at ``p``; derivatives via the chart oracle."""
    p = np.asarray(p, dtype=float)
    base = field(p)
    dim, k = base.dim, base.degree
    dcomp = gradient(lambda q: field(q).components, p)  # dcomp[a, n] = ∂_a α_{I_n}
    pos = {I: n for n, I in enumerate(base.indices)}
    out = np.zeros(len(_multi_indices(dim, k + 1)))
    for n, I in enumerate(_multi_indices(dim, k + 1)):
        out[n] = sum((-1) ** j * dcomp[I[j], pos[I[:j] + I[j + 1 :]]] for j in range(k + 1))
    return FormValue(dim, k + 1, out)


def one_form(arr: Sequence[float]) -> FormValue:
    arr = np.asarray(arr, dtype=float)
    return FormValue(arr.size, 1, arr.copy())


# --- almost Hermitian structure ---------------------------------------------


def check_almost_hermitian(M: ChartManifold, p: Sequence[float]) -> tuple[float, float]:
    """Max-norm residuals of J² + I and of g_ij − J^k_i J^l_j g_kl."""
    J = M.J_at(p)
    g = M.metric_values(p)
    r1 = float(np.max(np.abs(J @ J + np.eye(M.dim))))
    r2 = float(np.max(np.abs(g - J.T @ g @ J)))
    return r1, r2


def fundamental_matrix(M: ChartManifold, p: Sequence[float]) -> np.ndarray:
    """Ω_ij = g(∂_i, J∂_j) = g_ik J^k_j, antisymmetrized."""
    Om = M.metric_values(p) @ M.J_at(p)
    return 0.5 * (Om - Om.T)


def fundamental_form(M: ChartManifold, p: Sequence[float]) -> FormValue:
    """Fundamental 2-form Ω(X,Y) = g(X, JY).

    Raises:
        DegenerateForm: if Ω is (numerically) degenerate at ``p``.
    """
    Om = fundamental_matrix(M, p)
    scale = max(float(np.max(np.abs(Om))), 1e-300)
    if abs(np.linalg.det(Om / scale)) < 1e-12:
        raise DegenerateForm(f"fundamental form degenerate at {list(p)}")
    return FormValue.from_dense(Om)


def d_fundamental_form(M: ChartManifold, p: Sequence[float]) -> FormValue:
    return exterior_derivative(lambda q: FormValue.from_dense(fundamental_matrix(M, q)), p)


@lru_cache(maxsize=None)
def _wedge_operator_shape(dim: int) -> tuple[tuple[int, int, int, int], ...]:
    # (row, column, omega_position, sign) entries of the map ω ↦ ω∧Ω acting on Ω's 2-index positions
    entries = []
    two = {I: n for n, I in enumerate(_multi_indices(dim, 2))}
    for row, I in enumerate(_multi_indices(dim, 3)):
        for s in range(3):
            rest = I[:s] + I[s + 1 :]
            entries.append((row, I[s], two[rest], (-1) ** s))
    return tuple(entries)


def wedge_with_matrix(Omega: FormValue) -> np.ndarray:
    """Matrix A with (ω∧Ω) = A @ ω, built column by column from basis 1-forms."""
    dim = Omega.dim
    A = np.zeros((len(_multi_indices(dim, 3)), dim))
    for row, col, pos, sign in _wedge_operator_shape(dim):
        A[row, col] += sign * Omega.components[pos]
    return A


@dataclass(frozen=True)
class LeeData:
    """Canonical Lee form ω (dΩ = ω∧Ω) with its g-dual B.

    ``residual`` is ‖dΩ − ω∧Ω‖∞ and ``relative_residual`` divides it by
    max(‖dΩ‖∞, ‖Ω‖∞).
    """

    omega: FormValue
    B: np.ndarray
    normB2: float
    residual: float
    relative_residual: float

    def scaled(self, factor: float) -> "LeeData":
        """Lee data under another normalization (e.g. the worked example's)."""
        return LeeData(self.omega * factor, self.B * factor, self.normB2 * factor**2, self.residual, self.relative_residual)


def solve_lee_form(M: ChartManifold, p: Sequence[float]) -> tuple[np.ndarray, float, float]:
    """Least-squares ω with ω∧Ω = dΩ; returns (ω components, abs residual, rel residual)."""
    Omega = fundamental_form(M, p)
    dOmega = d_fundamental_form(M, p)
    A = wedge_with_matrix(Omega)
    Q, R = np.linalg.qr(A)
    omega = np.linalg.solve(R, Q.T @ dOmega.components)
    resid = float(np.max(np.abs(A @ omega - dOmega.components)))
    scale = max(dOmega.norm_inf(), Omega.norm_inf())
    return omega, resid, resid / scale


def lee_form_values(M: ChartManifold, p: Sequence[float]) -> np.ndarray:
    """ω components as a plain array (no NotLCaK check); used as a field inside stencils."""
    return solve_lee_form(M, p)[0]


def lee_vector_values(M: ChartManifold, p: Sequence[float]) -> np.ndarray:
    return inverse_metric(M.metric_values(p)) @ lee_form_values(M, p)


def extract_lee_form(M: ChartManifold, p: Sequence[float], rel_tol: float = LEE_REL_TOL) -> LeeData:
    """Solve dΩ = ω∧Ω for ω and dualize it.

    Raises:
        NotLCaK: if the relative residual exceeds ``rel_tol``.
        DegenerateForm: if Ω is degenerate.
    """
    omega, resid, rel = solve_lee_form(M, p)
    if rel > rel_tol:
        raise NotLCaK(rel)
    B = inverse_metric(M.metric_values(p)) @ omega
    return LeeData(one_form(omega), B, float(omega @ B), resid, rel)


def check_lee_closed(M: ChartManifold, p: Sequence[float], omega_field: Callable | None = None) -> float:
    """‖dω‖∞ for the extracted Lee field, or for ``omega_field`` (q ↦ components) if given."""
    fld = omega_field or (lambda q: lee_form_values(M, q))
    return exterior_derivative(lambda q: one_form(fld(q)), p).norm_inf()


def covariant_lee(M: ChartManifold, p: Sequence[float]) -> np.ndarray:
    """(∇_i ω)_j = ∂_i ω_j − Γ^k_ij ω_k, from the extracted Lee field."""
    p = np.asarray(p, dtype=float)
    domega = gradient(lambda q: lee_form_values(M, q), p)
    return domega - np.einsum("kij,k->ij", christoffel(M, p), lee_form_values(M, p))


def covariant_lee_vector(M: ChartManifold, p: Sequence[float]) -> np.ndarray:
    """out[i,k] = (∇_{∂_i} B)^k."""
    return covariant_jacobian(M, p, lambda q: lee_vector_values(M, q))


def divergence_lee(M: ChartManifold, p: Sequence[float]) -> float:
    return float(np.trace(covariant_lee_vector(M, p)))
