"""Coordinate charts, the manifold definition file format, and the derivative oracle.

Every derivative in the package goes through :func:`partial`, :func:`gradient`,
:func:`second_partial` or :func:`hessian`.  Fields are callables mapping a point
(1-d float array) to a float or an ndarray; derivatives keep the field's shape.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .errors import (
    DefinitionError,
    DomainError,
    ExprSyntaxError,
    MissingConformalExponent,
    NotPositiveDefinite,
    StencilOutOfDomain,
    UnknownIdentifier,
)

Field = Callable[[np.ndarray], "np.ndarray | float"]

# Base steps, scaled by max(1, |p_axis|).  The first-derivative rule is a
# 5-point central difference plus one Richardson step (order 6); 2**-8 balances
# its h**6 truncation against eps/h roundoff (measured optimum 2**-10..2**-7) and keeps nested derivatives
# (derivatives of FD-derived fields) accurate to ~1e-9.
FIRST_STEP = 2.0**-8
SECOND_STEP = 2.0**-8
# Sample points must keep every constraint on a box of this many steps.
MARGIN_STEPS = 4


def _step(base: float, x: float) -> float:
    return base * max(1.0, abs(x))


def _five_point(field: Field, p: np.ndarray, axis: int, h: float) -> np.ndarray:
    def at(offset: float) -> np.ndarray:
        q = p.copy()
        q[axis] += offset
        return np.asarray(field(q), dtype=float)

    return (at(-2 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2 * h)) / (12.0 * h)


def partial(field: Field, p: Sequence[float], axis: int, step: float | None = None) -> np.ndarray | float:
    """First partial derivative of ``field`` along coordinate ``axis`` at ``p``.

    Fourth-order central difference at steps ``h`` and ``h/2`` combined by one
    Richardson extrapolation, so the truncation error is O(h**6).

    Raises:
        StencilOutOfDomain: if the field cannot be evaluated on the stencil.
    """
    p = np.asarray(p, dtype=float)
    h = _step(FIRST_STEP, p[axis]) if step is None else step
    try:
        coarse = _five_point(field, p, axis, h)
        fine = _five_point(field, p, axis, h / 2)
    except DomainError as exc:
        raise StencilOutOfDomain(f"stencil of radius {2 * h:.3g} on axis {axis} leaves the domain: {exc}") from exc
    out = (16.0 * fine - coarse) / 15.0
    return float(out) if out.ndim == 0 else out


def gradient(field: Field, p: Sequence[float], step: float | None = None) -> np.ndarray:
    """All first partials; the derivative index is prepended to the field's shape."""
    p = np.asarray(p, dtype=float)
    return np.stack([np.asarray(partial(field, p, a, step)) for a in range(p.size)])


def _nested(field: Field, p: np.ndarray, outer: int, inner: int) -> np.ndarray:
    inner_field = lambda q: partial(field, q, inner)  # noqa: E731
    return np.asarray(partial(inner_field, p, outer, _step(SECOND_STEP, p[outer])))


def second_partial(field: Field, p: Sequence[float], i: int, j: int) -> np.ndarray | float:
    """Mixed second partial, averaged over both nesting orders (hence exactly symmetric)."""
    p = np.asarray(p, dtype=float)
    if i == j:
        out = _nested(field, p, i, i)
    else:
        out = 0.5 * (_nested(field, p, i, j) + _nested(field, p, j, i))
    return float(out) if out.ndim == 0 else out


def hessian(field: Field, p: Sequence[float]) -> np.ndarray:
    """All second partials, shape ``(d, d, *field_shape)``, symmetric in the first two slots."""
    p = np.asarray(p, dtype=float)
    grad_field = lambda q: gradient(field, q)  # noqa: E731
    jac = np.stack([np.asarray(partial(grad_field, p, a, _step(SECOND_STEP, p[a]))) for a in range(p.size)])
    return 0.5 * (jac + np.swapaxes(jac, 0, 1))


def stencil_radius(p: Sequence[float]) -> np.ndarray:
    """Per-axis radius of the closed box every sample point must keep inside the domain."""
    p = np.asarray(p, dtype=float)
    base = max(FIRST_STEP, SECOND_STEP)
    return np.array([MARGIN_STEPS * _step(base, x) for x in p])


_CONSTRAINT_RE = re.compile(r"^(.*?)(>=|<=|!=|>|<)(.*)$")


@dataclass(frozen=True)
class Constraint:
    """Open condition ``lhs op rhs``; ``op`` is one of ``> < >= <= !=``."""

    lhs: ex.Expr
    op: str
    rhs: ex.Expr
    source: str

    @classmethod
    def parse(cls, source: str, coords: Sequence[str]) -> "Constraint":
        m = _CONSTRAINT_RE.match(source.strip())
        if m is None:
            raise ExprSyntaxError("constraint needs one of > < >= <= !=", 0, (">", "<", ">=", "<=", "!="))
        lhs, op, rhs = m.groups()
        return cls(ex.parse(lhs, coords), op, ex.parse(rhs, coords), source.strip())

    def holds(self, q: Sequence[float]) -> bool:
        try:
            a = ex.evaluate(self.lhs, q)
            b = ex.evaluate(self.rhs, q)
        except DomainError:
            return False
        return {
            ">": a > b,
            "<": a < b,
            ">=": a >= b,
            "<=": a <= b,
            "!=": a != b,
        }[self.op]


@dataclass(frozen=True)
class ChartManifold:
    """A 2n-dimensional almost Hermitian manifold given on a single chart.

    ``metric_exprs[i][j]`` is g_ij and ``J_exprs[i][j]`` is the component J^i_j,
    i.e. J(d/dx_j) = sum_i J^i_j d/dx_i.  ``f_expr`` is the local conformal
    exponent, stored so that df equals the canonical Lee form.
    """

    name: str
    coord_names: tuple[str, ...]
    metric_exprs: tuple[tuple[ex.Expr, ...], ...]
    J_exprs: tuple[tuple[ex.Expr, ...], ...]
    constraints: tuple[Constraint, ...] = ()
    f_expr: ex.Expr | None = None
    sample_box: tuple[tuple[float, float], ...] | None = None
    _compiled: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        d = len(self.coord_names)
        if d < 4 or d % 2:
            raise DefinitionError(f"dimension must be even and >= 4, got {d}")
        for rows in (self.metric_exprs, self.J_exprs):
            if len(rows) != d or any(len(r) != d for r in rows):
                raise DefinitionError(f"component arrays must be {d}x{d}")
        for i, j in itertools.combinations(range(d), 2):
            if self.metric_exprs[i][j] != self.metric_exprs[j][i]:
                raise DefinitionError(f"metric not symmetric at ({i + 1},{j + 1})")
        if self.sample_box is not None and len(self.sample_box) != d:
            raise DefinitionError("sample box needs one interval per coordinate")

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_compiled"] = {}
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    @property
    def n(self) -> int:
        return self.dim // 2

    def _fn(self, key: str) -> Callable:
        fn = self._compiled.get(key)
        if fn is None:
            if key == "metric":
                fn = ex.compile_many([e for row in self.metric_exprs for e in row])
            elif key == "J":
                fn = ex.compile_many([e for row in self.J_exprs for e in row])
            else:
                fn = ex.compile_many([self.f_expr])
            self._compiled[key] = fn
        return fn

    def _matrix(self, key: str, p: Sequence[float]) -> np.ndarray:
        try:
            vals = np.array(self._fn(key)(p), dtype=float)
        except (OverflowError, ZeroDivisionError, ValueError) as exc:
            raise DomainError(str(exc)) from exc
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"non-finite {key} component")
        return vals.reshape(self.dim, self.dim)

    def metric_values(self, p: Sequence[float]) -> np.ndarray:
        """Metric matrix without the positivity check (used inside stencils)."""
        return self._matrix("metric", p)

    def metric_at(self, p: Sequence[float]) -> np.ndarray:
        """Metric g_ij at ``p``; raises NotPositiveDefinite if Cholesky fails."""
        g = self._matrix("metric", p)
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite(f"metric of {self.name!r} not positive definite at {list(p)}") from None
        return g

    def J_at(self, p: Sequence[float]) -> np.ndarray:
        return self._matrix("J", p)

    def f_at(self, p: Sequence[float]) -> float:
        if self.f_expr is None:
            raise MissingConformalExponent(f"{self.name!r} has no conformal exponent")
        return float(self._fn("f")(p)[0])

    def in_domain(self, q: Sequence[float]) -> bool:
        return all(c.holds(q) for c in self.constraints)

    def check_point(self, p: Sequence[float]) -> np.ndarray:
        """Validate ``p`` including the stencil margin; returns it as a float array.

        The probed set is the point, its axis neighbours at the margin radius, and
        the four corners in every coordinate plane, which covers every stencil
        node used by first and (nested) second derivatives.
        """
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"point must have {self.dim} coordinates")
        r = stencil_radius(p)
        probes = [p]
        for a in range(self.dim):
            for s in (-1.0, 1.0):
                q = p.copy()
                q[a] += s * r[a]
                probes.append(q)
        for a, b in itertools.combinations(range(self.dim), 2):
            for sa, sb in itertools.product((-1.0, 1.0), repeat=2):
                q = p.copy()
                q[a] += sa * r[a]
                q[b] += sb * r[b]
                probes.append(q)
        for q in probes:
            if not self.in_domain(q):
                raise StencilOutOfDomain(f"point {p.tolist()} is within the stencil margin of the domain boundary")
        return p

    def with_metric(self, metric_exprs, name: str | None = None, f_expr: ex.Expr | None = None) -> "ChartManifold":
        return ChartManifold(
            name=name or self.name,
            coord_names=self.coord_names,
            metric_exprs=tuple(tuple(r) for r in metric_exprs),
            J_exprs=self.J_exprs,
            constraints=self.constraints,
            f_expr=f_expr,
            sample_box=self.sample_box,
        )

    def with_J(self, J_exprs, name: str | None = None) -> "ChartManifold":
        return ChartManifold(
            name=name or self.name,
            coord_names=self.coord_names,
            metric_exprs=self.metric_exprs,
            J_exprs=tuple(tuple(r) for r in J_exprs),
            constraints=self.constraints,
            f_expr=self.f_expr,
            sample_box=self.sample_box,
        )

    def relabeled(self, perm: Sequence[int]) -> "ChartManifold":
        """The same geometry with coordinates reordered: new coordinate k is old ``perm[k]``."""
        perm = [int(k) for k in perm]
        if sorted(perm) != list(range(self.dim)):
            raise ValueError("perm must be a permutation of the coordinate indices")
        coords = tuple(self.coord_names[k] for k in perm)

        def re(e: ex.Expr) -> ex.Expr:
            return ex.parse(ex.to_source(e), coords)

        return ChartManifold(
            name=self.name,
            coord_names=coords,
            metric_exprs=tuple(tuple(re(self.metric_exprs[a][b]) for b in perm) for a in perm),
            J_exprs=tuple(tuple(re(self.J_exprs[a][b]) for b in perm) for a in perm),
            constraints=tuple(Constraint.parse(c.source, coords) for c in self.constraints),
            f_expr=None if self.f_expr is None else re(self.f_expr),
            sample_box=None if self.sample_box is None else tuple(self.sample_box[k] for k in perm),
        )

    def conformal_rescaling(self) -> "ChartManifold":
        """The chart carrying g_t = exp(-f) g as composite expressions."""
        if self.f_expr is None:
            raise MissingConformalExponent(f"{self.name!r} has no conformal exponent")
        factor = ex.Call("exp", ex.Neg(self.f_expr))
        metric = [[ex.Mul(factor, e) for e in row] for row in self.metric_exprs]
        return self.with_metric(metric, name=f"{self.name}/rescaled")


def sample_points(
    M: ChartManifold,
    count: int,
    seed: int,
    box: Sequence[tuple[float, float]] | None = None,
    max_tries: int = 100_000,
) -> np.ndarray:
    """Uniform points in ``box`` (default: the manifold's sample box, else [-1, 1]^d)
    that pass :meth:`ChartManifold.check_point`.

    Uses numpy's PCG64 generator seeded with ``seed``; the same arguments always
    give the same points.
    """
    box = box or M.sample_box or tuple((-1.0, 1.0) for _ in range(M.dim))
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for _ in range(max_tries):
        if len(out) == count:
            break
        q = lo + (hi - lo) * rng.random(M.dim)
        try:
            M.check_point(q)
        except StencilOutOfDomain:
            continue
        out.append(q)
    if len(out) < count:
        raise StencilOutOfDomain(f"could only sample {len(out)} of {count} admissible points for {M.name!r}")
    return np.array(out).reshape(count, M.dim)


# --- manifold definition files ------------------------------------------------

_SECTIONS = ("manifold", "domain", "metric", "J", "conformal", "sample")
_COMPONENT_RE = re.compile(r"^(g|J)_(\d+)_(\d+)$")


def parse_manifold(text: str) -> ChartManifold:
    """Parse a manifold definition document.

    Sections: ``[manifold]`` (name, dim, optional coords), ``[domain]`` (one
    constraint per line), ``[metric]`` (``g_i_j = expr``, 1-based, unspecified
    entries 0, a missing mirror entry copies its transpose), ``[J]``
    (``J_i_j = expr`` for J^i_j), ``[conformal]`` (optional ``f = expr``) and
    ``[sample]`` (optional ``coord = lo, hi``).  ``#`` starts a comment.

    Raises:
        DefinitionError: with the 1-based line number of the problem.
    """
    section = None
    header: dict[str, tuple[str, int]] = {}
    domain: list[tuple[str, int]] = []
    entries: dict[str, dict[str, tuple[str, int]]] = {s: {} for s in ("metric", "J", "conformal", "sample")}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise DefinitionError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            raise DefinitionError("content before the first section", lineno)
        if section == "domain":
            domain.append((line, lineno))
            continue
        if "=" not in line:
            raise DefinitionError(f"expected 'key = value' in [{section}]", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        target = header if section == "manifold" else entries[section]
        if key in target:
            raise DefinitionError(f"duplicate key {key!r}", lineno)
        target[key] = (value, lineno)

    for required in ("name", "dim"):
        if required not in header:
            raise DefinitionError(f"[manifold] is missing {required!r}")
    name = header["name"][0]
    try:
        dim = int(header["dim"][0])
    except ValueError:
        raise DefinitionError("dim must be an integer", header["dim"][1]) from None
    if dim < 4 or dim % 2:
        raise DefinitionError(f"dim must be even and >= 4, got {dim}", header["dim"][1])
    if "coords" in header:
        coords = tuple(c.strip() for c in header["coords"][0].split(","))
        if len(coords) != dim or len(set(coords)) != dim:
            raise DefinitionError(f"coords must list {dim} distinct names", header["coords"][1])
    else:
        coords = tuple(f"x{k + 1}" for k in range(dim))

    def parse_expr(source: str, lineno: int) -> ex.Expr:
        try:
            return ex.parse(source, coords)
        except ExprSyntaxError as exc:
            raise DefinitionError(f"{exc} in {source!r}", lineno) from exc
        except UnknownIdentifier as exc:
            raise DefinitionError(f"{exc} in {source!r}", lineno) from exc

    def component_array(kind: str) -> list[list[ex.Expr | None]]:
        arr: list[list[ex.Expr | None]] = [[None] * dim for _ in range(dim)]
        for key, (value, lineno) in entries[kind].items():
            m = _COMPONENT_RE.match(key)
            if m is None or m.group(1) != {"metric": "g", "J": "J"}[kind]:
                raise DefinitionError(f"bad component key {key!r} in [{kind}]", lineno)
            i, j = int(m.group(2)) - 1, int(m.group(3)) - 1
            if not (0 <= i < dim and 0 <= j < dim):
                raise DefinitionError(f"index out of range in {key!r}", lineno)
            arr[i][j] = parse_expr(value, lineno)
        return arr

    g = component_array("metric")
    for i, j in itertools.combinations(range(dim), 2):
        if g[i][j] is None:
            g[i][j] = g[j][i]
        elif g[j][i] is None:
            g[j][i] = g[i][j]
        elif g[i][j] != g[j][i]:
            raise DefinitionError(f"g_{i + 1}_{j + 1} and g_{j + 1}_{i + 1} differ")
    zero = ex.Num(0.0)
    g = [[e if e is not None else zero for e in row] for row in g]
    J = [[e if e is not None else zero for e in row] for row in component_array("J")]

    constraints = []
    for source, lineno in domain:
        try:
            constraints.append(Constraint.parse(source, coords))
        except (ExprSyntaxError, UnknownIdentifier) as exc:
            raise DefinitionError(f"{exc} in constraint {source!r}", lineno) from exc

    f_expr = None
    for key, (value, lineno) in entries["conformal"].items():
        if key != "f":
            raise DefinitionError(f"unknown key {key!r} in [conformal]", lineno)
        f_expr = parse_expr(value, lineno)

    box = None
    if entries["sample"]:
        box_map = {}
        for key, (value, lineno) in entries["sample"].items():
            if key not in coords:
                raise DefinitionError(f"unknown coordinate {key!r} in [sample]", lineno)
            try:
                lo, hi = (float(v) for v in value.split(","))
            except ValueError:
                raise DefinitionError("sample interval must be 'lo, hi'", lineno) from None
            if not lo < hi:
                raise DefinitionError("sample interval must have lo < hi", lineno)
            box_map[key] = (lo, hi)
        box = tuple(box_map.get(c, (-1.0, 1.0)) for c in coords)

    return ChartManifold(
        name=name,
        coord_names=coords,
        metric_exprs=tuple(tuple(r) for r in g),
        J_exprs=tuple(tuple(r) for r in J),
        constraints=tuple(constraints),
        f_expr=f_expr,
        sample_box=box,
    )


def load_manifold(path: str | Path) -> ChartManifold:
    return parse_manifold(Path(path).read_text())


def dump_manifold(M: ChartManifold) -> str:
    """Serialize ``M`` in the definition-file format (upper triangle of g, nonzero entries only)."""
    lines = ["[manifold]", f"name = {M.name}", f"dim = {M.dim}", f"coords = {', '.join(M.coord_names)}", ""]
    lines.append("[domain]")
    lines += [c.source for c in M.constraints]
    lines += ["", "[metric]"]
    for i in range(M.dim):
        for j in range(i, M.dim):
            e = M.metric_exprs[i][j]
            if e != ex.Num(0.0):
                lines.append(f"g_{i + 1}_{j + 1} = {ex.to_source(e)}")
    lines += ["", "[J]"]
    for i in range(M.dim):
        for j in range(M.dim):
            e = M.J_exprs[i][j]
            if e != ex.Num(0.0):
                lines.append(f"J_{i + 1}_{j + 1} = {ex.to_source(e)}")
    if M.f_expr is not None:
        lines += ["", "[conformal]", f"f = {ex.to_source(M.f_expr)}"]
    if M.sample_box is not None:
        lines += ["", "[sample]"]
        lines += [f"{c} = {_fmt(lo)}, {_fmt(hi)}" for c, (lo, hi) in zip(M.coord_names, M.sample_box)]
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


__all__ = [
    "ChartManifold",
    "Constraint",
    "FIRST_STEP",
    "SECOND_STEP",
    "dump_manifold",
    "gradient",
    "hessian",
    "load_manifold",
    "parse_manifold",
    "partial",
    "sample_points",
    "second_partial",
    "stencil_radius",
]
