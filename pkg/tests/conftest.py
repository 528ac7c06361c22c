"""Shared fixtures and a symbolic oracle built with sympy.

The oracle re-reads each manifold's component expressions as sympy objects
and differentiates them exactly, so it shares no code with the finite
difference engine beyond the expression printer.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
import pytest
import sympy as sp

from lcak import expr as ex
from lcak import zoo
from lcak.chart import ChartManifold

ZOO_NAMES = zoo.names()
LCAK_NAMES = [n for n in ZOO_NAMES if zoo.get(n).expected.is_lcak]
FOUR_D = [n for n in ZOO_NAMES if zoo.get(n).manifold.dim == 4]


def M_of(name: str) -> ChartManifold:
    return zoo.get(name).manifold


@pytest.fixture
def paper():
    return M_of("paper-example")


class SymbolicChart:
    """Exact metric, J and f of a chart, with derived quantities evaluated at points."""

    def __init__(self, M: ChartManifold):
        self.M = M
        self.X = sp.symbols(list(M.coord_names), real=True)
        loc = {name: s for name, s in zip(M.coord_names, self.X)}
        loc["ln"] = sp.log

        def conv(e):
            return sp.sympify(ex.to_source(e).replace("^", "**"), locals=loc)

        d = M.dim
        self.g = sp.Matrix(d, d, lambda i, j: conv(M.metric_exprs[i][j]))
        self.J = sp.Matrix(d, d, lambda i, j: conv(M.J_exprs[i][j]))
        self.f = None if M.f_expr is None else conv(M.f_expr)
        self.ginv = self.g.inv()

    @property
    def dim(self) -> int:
        return self.M.dim

    def at(self, expr, p) -> float:
        return float(expr.subs(dict(zip(self.X, p))).evalf(30))

    def array_at(self, exprs, p) -> np.ndarray:
        sub = dict(zip(self.X, p))
        arr = np.array(exprs, dtype=object)
        return np.vectorize(lambda e: float(sp.sympify(e).subs(sub).evalf(30)), otypes=[float])(arr)

    @lru_cache(maxsize=None)
    def christoffel(self):
        d, g, gi, X = self.dim, self.g, self.ginv, self.X
        return [
            [
                [
                    sp.simplify(
                        sum(gi[k, l] * (sp.diff(g[j, l], X[i]) + sp.diff(g[i, l], X[j]) - sp.diff(g[i, j], X[l])) for l in range(d))
                        / 2
                    )
                    for j in range(d)
                ]
                for i in range(d)
            ]
            for k in range(d)
        ]

    @lru_cache(maxsize=None)
    def riemann_up(self):
        """up[i][j][k][l]: d/dx_l component of R(∂_i, ∂_j)∂_k."""
        d, X, G = self.dim, self.X, self.christoffel()
        out = [[[[0] * d for _ in range(d)] for _ in range(d)] for _ in range(d)]
        for i, j, k, l in itertools.product(range(d), repeat=4):
            out[i][j][k][l] = (
                sp.diff(G[l][j][k], X[i])
                - sp.diff(G[l][i][k], X[j])
                + sum(G[l][i][m] * G[m][j][k] - G[l][j][m] * G[m][i][k] for m in range(d))
            )
        return out

    def riemann_low_at(self, p) -> np.ndarray:
        up = self.array_at(self.riemann_up(), p)
        return np.einsum("ijkm,ml->ijkl", up, self.array_at(self.g, p))

    def omega_matrix(self):
        return self.g * self.J

    def d_omega_at(self, p) -> dict[tuple[int, int, int], float]:
        """(dΩ)_{ijk} for i < j < k, exact."""
        Om, X = self.omega_matrix(), self.X
        out = {}
        for i, j, k in itertools.combinations(range(self.dim), 3):
            e = sp.diff(Om[j, k], X[i]) - sp.diff(Om[i, k], X[j]) + sp.diff(Om[i, j], X[k])
            out[(i, j, k)] = self.at(e, p)
        return out


@lru_cache(maxsize=None)
def symbolic(name: str) -> SymbolicChart:
    return SymbolicChart(M_of(name))


def dense_wedge_1_2(w: np.ndarray, Om: np.ndarray) -> dict[tuple[int, int, int], float]:
    """(ω∧Ω)_{ijk} = ω_i Ω_jk − ω_j Ω_ik + ω_k Ω_ij for i < j < k."""
    d = len(w)
    return {
        (i, j, k): w[i] * Om[j, k] - w[j] * Om[i, k] + w[k] * Om[i, j]
        for i, j, k in itertools.combinations(range(d), 3)
    }


def oracle_lee(name: str, p) -> np.ndarray:
    """Least-squares ω from the exact dΩ and a dense wedge written out by hand."""
    S = symbolic(name)
    Om = S.array_at(S.omega_matrix(), p)
    dOm = S.d_omega_at(p)
    keys = sorted(dOm)
    d = S.dim
    A = np.zeros((len(keys), d))
    for c in range(d):
        e = np.zeros(d)
        e[c] = 1.0
        col = dense_wedge_1_2(e, Om)
        A[:, c] = [col[k] for k in keys]
    w, *_ = np.linalg.lstsq(A, np.array([dOm[k] for k in keys]), rcond=None)
    return w
