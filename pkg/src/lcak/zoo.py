"""Built-in fixture manifolds, each stored as a definition file under ``lcak/data``."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib.resources import files

from .chart import ChartManifold, parse_manifold


@dataclass(frozen=True)
class ExpectedFlags:
    """Structural flags a fixture must reproduce; None where the notion does not apply (ω = 0)."""

    is_almost_hermitian: bool
    is_lcak: bool
    is_almost_kahler: bool
    lee_autoparallel: bool | None
    leaves_minimal: bool | None


@dataclass(frozen=True)
class ZooEntry:
    """A fixture manifold with its expected flags.

    ``example_scale`` converts the canonical Lee pair (df = ω) into the
    normalization used when the fixture is quoted elsewhere; it is applied only
    under the ``paper-example-halved`` Lee convention.
    """

    name: str
    manifold: ChartManifold
    expected: ExpectedFlags
    provenance: str
    example_scale: float = 0.5

    @property
    def source(self) -> str:
        return files("lcak").joinpath("data", f"{self.name}.manifold").read_text()


_SPECS = (
    (
        "paper-example",
        ExpectedFlags(True, True, False, True, False),
        "Worked example on {x1 != 0, x2 > 0}: g = x2^-2 (dx1^2 + dx2^2) + x2^6 (dy1^2 + dy2^2) with J defined on "
        "the orthonormal frame. Canonical Lee pair w = (2/x2) dx2, B = 2 x2 d/dx2; the example's own pair is -1/2 of it.",
        -0.5,
    ),
    (
        "flat-kahler",
        ExpectedFlags(True, True, True, None, None),
        "Euclidean R^4 with the standard complex structure; Kaehler, w = 0.",
        0.5,
    ),
    (
        "global-conformal",
        ExpectedFlags(True, True, False, True, False),
        "exp(x1) times flat-kahler; w = dx1, B = exp(-x1) d/dx1.",
        0.5,
    ),
    (
        "control-broken",
        ExpectedFlags(True, False, False, None, None),
        "Negative control in dimension 6: the first complex line of the flat structure is rescaled by exp(x2), "
        "so dOmega is not of the form w^Omega.",
        0.5,
    ),
    (
        "control-sheared",
        ExpectedFlags(True, True, False, False, False),
        "Negative control for the foliation suite: exp(x1 + x2^2/2) times a constant sheared Kaehler metric; "
        "the Lee field is not auto-parallel.",
        0.5,
    ),
    (
        "sphere-product",
        ExpectedFlags(True, True, True, None, None),
        "Product of two unit round 2-spheres with the product complex structure; Kaehler with nonzero curvature.",
        0.5,
    ),
    (
        "conformal-sphere-product",
        ExpectedFlags(True, True, False, True, False),
        "exp(t1) times sphere-product: curved LCaK fixture in Gray's class L1 for the rescaled metric.",
        0.5,
    ),
)


@lru_cache(maxsize=None)
def zoo() -> tuple[ZooEntry, ...]:
    out = []
    for name, flags, note, scale in _SPECS:
        text = files("lcak").joinpath("data", f"{name}.manifold").read_text()
        out.append(ZooEntry(name, parse_manifold(text), flags, note, scale))
    return tuple(out)


def names() -> list[str]:
    return [e.name for e in zoo()]


def get(name: str) -> ZooEntry:
    for e in zoo():
        if e.name == name:
            return e
    raise KeyError(f"no built-in manifold named {name!r}; available: {', '.join(names())}")
