"""Gray's curvature identities for the rescaled curvature R^t.

The identities are tested on the direct-route R^t (curvature of the rescaled
chart, lowered with g_t) over all coordinate 4-tuples::

    (1)  R(X,Y,Z,W) = R(X,Y,JZ,JW)
    (2)  R(X,Y,Z,W) - R(JX,JY,Z,W) = R(JX,Y,JZ,W) + R(JX,Y,Z,JW)
    (3)  R(X,Y,Z,W) = R(JX,JY,JZ,JW)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chart import ChartManifold
from .conformal import ConformalPoint
from .errors import NotInL1

TOL_GRAY = 1e-4


def _apply_J(R: np.ndarray, J: np.ndarray, slots: Sequence[int]) -> np.ndarray:
    """Components of R with J inserted in the given slots: R(.., J∂_a, ..) = J^m_a R(.., ∂_m, ..)."""
    out = R
    for s in slots:
        out = np.moveaxis(np.tensordot(out, J, axes=([s], [0])), -1, s)
    return out


def identity_defects(R: np.ndarray, J: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """LHS − RHS arrays of identities (1), (2), (3) for a lowered curvature array."""
    d1 = R - _apply_J(R, J, (2, 3))
    d2 = R - _apply_J(R, J, (0, 1)) - _apply_J(R, J, (0, 2)) - _apply_J(R, J, (0, 3))
    d3 = R - _apply_J(R, J, (0, 1, 2, 3))
    return d1, d2, d3


@dataclass(frozen=True)
class GrayReport:
    """Residuals of the three identities and the resulting class memberships.

    ``yabien_residual`` is None when the point fails the L1 gate.
    """

    residual1: float
    residual2: float
    residual3: float
    tol: float
    yabien_residual: float | None = None

    @property
    def in_L1(self) -> bool:
        return self.residual1 <= self.tol

    @property
    def in_L2(self) -> bool:
        return self.residual2 <= self.tol

    @property
    def in_L3(self) -> bool:
        return self.residual3 <= self.tol

    @property
    def chain_ok(self) -> bool:
        """L1 ⇒ L2 ⇒ L3 at the common tolerance."""
        return (not self.in_L1 or self.in_L2) and (not self.in_L2 or self.in_L3)


def gray_residuals(
    M: ChartManifold, p: Sequence[float], tol: float = TOL_GRAY, ctx: ConformalPoint | None = None
) -> GrayReport:
    """Max-abs defects of Gray's identities for R^t at ``p``, plus the L1 consequence when it applies."""
    c = ctx or ConformalPoint(M, p)
    d1, d2, d3 = identity_defects(c.curvature_t.low, c.J)
    r1, r2, r3 = (float(np.max(np.abs(d))) for d in (d1, d2, d3))
    yab = _yabien(c) if r1 <= tol else None
    return GrayReport(r1, r2, r3, tol, yab)


def _yabien(c: ConformalPoint) -> float:
    k = c.pack
    return abs((k.tau_star - k.tau) - 2 * (c.n - 1) * c.trace_P)


def yabien_residual(
    M: ChartManifold, p: Sequence[float], tol: float = TOL_GRAY, ctx: ConformalPoint | None = None
) -> float:
    """|(τ* − τ) − 2(n−1) trace P| for the curvature of g.

    Raises:
        NotInL1: if identity (1) fails for R^t at ``p``; the check does not apply there.
    """
    rep = gray_residuals(M, p, tol, ctx)
    if rep.yabien_residual is None:
        raise NotInL1(rep.residual1)
    return rep.yabien_residual
