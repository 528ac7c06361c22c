from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcak import expr as ex
from lcak import hermitian as hs
from lcak.chart import sample_points
from lcak.errors import DegenerateForm, NotLCaK

from conftest import LCAK_NAMES, ZOO_NAMES, M_of, oracle_lee, symbolic

DIM = 4


def _alt_dense(T: np.ndarray) -> np.ndarray:
    """Alt(T) = (1/k!) Σ_σ sign(σ) T∘σ."""
    k = T.ndim
    out = np.zeros_like(T)
    for perm in itertools.permutations(range(k)):
        sign = np.linalg.det(np.eye(k)[list(perm)])
        out += sign * np.transpose(T, perm)
    return out / math.factorial(k)


def dense_wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    k, l = a.ndim, b.ndim
    return math.factorial(k + l) / (math.factorial(k) * math.factorial(l)) * _alt_dense(np.multiply.outer(a, b))


def forms(degree: int):
    n = math.comb(DIM, degree)
    return st.lists(st.floats(-3, 3, allow_nan=False), min_size=n, max_size=n).map(
        lambda c: hs.FormValue(DIM, degree, np.array(c))
    )


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2).flatmap(lambda k: st.tuples(forms(k), forms(1), forms(1))))
def test_wedge_matches_dense_alternation_and_associativity(abc):
    a, b, c = abc
    np.testing.assert_allclose(hs.wedge(a, b).to_dense(), dense_wedge(a.to_dense(), b.to_dense()), atol=1e-10)
    np.testing.assert_allclose(hs.wedge(hs.wedge(a, b), c).components, hs.wedge(a, hs.wedge(b, c)).components, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 2).flatmap(lambda k: st.tuples(forms(k), forms(2))))
def test_graded_commutativity(ab):
    a, b = ab
    sign = (-1) ** (a.degree * b.degree)
    np.testing.assert_allclose(hs.wedge(a, b).components, sign * hs.wedge(b, a).components, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(forms(1))
def test_one_form_wedge_itself_vanishes(a):
    assert hs.wedge(a, a).norm_inf() <= 1e-12


def test_component_access_and_dense_round_trip():
    w = hs.FormValue(4, 2, np.arange(1.0, 7.0))
    assert w[(0, 1)] == 1.0 and w[(1, 0)] == -1.0 and w[(2, 2)] == 0.0
    np.testing.assert_array_equal(hs.FormValue.from_dense(w.to_dense()).components, w.components)
    assert w.labelled(["a", "b", "c", "d"])["da^db"] == 1.0


def test_exterior_derivative_known_value():
    # d(x1 x2 dx3) = x2 dx1∧dx3 + x1 dx2∧dx3
    field = lambda q: hs.one_form([0.0, 0.0, q[0] * q[1], 0.0])  # noqa: E731
    d = hs.exterior_derivative(field, [0.7, -1.3, 0.2, 0.4])
    assert d[(0, 2)] == pytest.approx(-1.3, abs=1e-12)
    assert d[(1, 2)] == pytest.approx(0.7, abs=1e-12)
    assert d[(0, 1)] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("degree", [0, 1, 2])
def test_d_squared_vanishes(degree):
    coef = np.random.default_rng(degree).normal(size=(math.comb(DIM, degree), 4))

    def field(q):
        q = np.asarray(q)
        return hs.FormValue(DIM, degree, np.sin(coef @ q) + (coef @ q) ** 3)

    dd = hs.exterior_derivative(lambda q: hs.exterior_derivative(field, q), [0.1, 0.2, -0.3, 0.5])
    assert dd.norm_inf() <= 1e-5


@pytest.mark.parametrize("name", ZOO_NAMES)
def test_zoo_is_almost_hermitian(name):
    M = M_of(name)
    for p in sample_points(M, 3, 1):
        r1, r2 = hs.check_almost_hermitian(M, p)
        assert r1 <= 1e-12 and r2 <= 1e-12 * np.max(np.abs(M.metric_at(p)))


def test_paper_fundamental_form_against_definition(paper):
    S = symbolic("paper-example")
    for p in sample_points(paper, 5, 2):
        x2 = p[1]
        Om = hs.fundamental_form(paper, p)
        np.testing.assert_allclose(Om.to_dense(), S.array_at(S.omega_matrix(), p), atol=1e-12)
        lab = Om.labelled(paper.coord_names)
        assert lab["dx1^dy1"] == pytest.approx(-(x2**2), rel=1e-14)
        assert lab["dx2^dy2"] == pytest.approx(x2**2, rel=1e-14)
        assert sum(abs(v) for k, v in lab.items() if k not in ("dx1^dy1", "dx2^dy2")) == 0.0


def test_paper_d_fundamental_form(paper):
    S = symbolic("paper-example")
    for p in sample_points(paper, 5, 3):
        d = hs.d_fundamental_form(paper, p)
        exact = S.d_omega_at(p)
        for k, v in exact.items():
            assert d[k] == pytest.approx(v, abs=1e-9)
        assert d.labelled(paper.coord_names)["dx1^dx2^dy1"] == pytest.approx(2 * p[1], rel=1e-10)


@pytest.mark.parametrize("name", LCAK_NAMES)
def test_lee_form_against_oracle(name):
    M = M_of(name)
    for p in sample_points(M, 3, 4):
        lee = hs.extract_lee_form(M, p)
        np.testing.assert_allclose(lee.omega.components, oracle_lee(name, p), atol=1e-8)
        np.testing.assert_allclose(M.metric_at(p) @ lee.B, lee.omega.components, atol=1e-12)
        assert lee.normB2 == pytest.approx(lee.omega.components @ lee.B)


def test_paper_lee_pair(paper):
    for p in sample_points(paper, 25, 5):
        lee = hs.extract_lee_form(paper, p)
        np.testing.assert_allclose(lee.omega.components, [0, 2 / p[1], 0, 0], atol=1e-9)
        np.testing.assert_allclose(lee.B, [0, 2 * p[1], 0, 0], atol=1e-9)
        assert lee.normB2 == pytest.approx(4.0, abs=1e-9)
        half = lee.scaled(-0.5)
        np.testing.assert_allclose(half.B, [0, -p[1], 0, 0], atol=1e-9)


def test_global_conformal_lee_form():
    M = M_of("global-conformal")
    for p in sample_points(M, 5, 6):
        np.testing.assert_allclose(hs.extract_lee_form(M, p).omega.components, [1, 0, 0, 0], atol=1e-6)


@pytest.mark.parametrize("name", ["flat-kahler", "sphere-product"])
def test_kahler_fixtures_have_closed_fundamental_form(name):
    M = M_of(name)
    for p in sample_points(M, 3, 7):
        assert hs.d_fundamental_form(M, p).norm_inf() <= 1e-9
        assert np.max(np.abs(hs.extract_lee_form(M, p).omega.components)) <= 1e-9


def test_broken_control_is_not_lcak():
    M = M_of("control-broken")
    for p in sample_points(M, 3, 8):
        with pytest.raises(NotLCaK) as info:
            hs.extract_lee_form(M, p)
        assert info.value.residual > 1e-2


@pytest.mark.parametrize("name", LCAK_NAMES)
def test_lee_form_is_closed(name):
    M = M_of(name)
    for p in sample_points(M, 3, 9):
        assert hs.check_lee_closed(M, p) <= 1e-5


def test_paper_divergence_of_lee_field(paper):
    # √det g = x2^4 and B = 2 x2 ∂x2, so div B = x2^-4 ∂x2(2 x2^5) = 10
    for p in sample_points(paper, 5, 10):
        assert hs.divergence_lee(paper, p) == pytest.approx(10.0, abs=1e-8)


def test_degenerate_fundamental_form(paper):
    M = paper.with_J([[ex.Num(0.0)] * 4 for _ in range(4)])
    with pytest.raises(DegenerateForm):
        hs.fundamental_form(M, [1.0, 2.0, 0.0, 0.0])
