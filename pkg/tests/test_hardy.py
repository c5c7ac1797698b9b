import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracekdv.exceptions import ConvergenceError
from tracekdv.grids import KGrid
from tracekdv.hardy import (
    SpectralField,
    as_field,
    cauchy_eval,
    fourier_pair,
    minus_projector,
    pv_integral,
    pv_lemma_check,
    regularized_project,
    riesz_project,
)


def bumps(kgrid, seed, n=5):
    """Random sum of narrow Gaussian bumps; negligible at the grid edge."""
    r = np.random.default_rng(seed)
    c = r.uniform(-2, 2, n)
    w = r.uniform(0.3, 1.0, n)
    a = r.normal(size=n) + 1j * r.normal(size=n)
    k = kgrid.nodes
    return as_field(sum(a[i] * np.exp(-(((k - c[i]) / w[i]) ** 2)) for i in range(n)), kgrid)


def test_fourier_pair_zero(kgrid):
    d = fourier_pair(as_field(np.zeros(kgrid.N), kgrid))
    assert np.all(d.values == 0)


def test_fourier_pair_resolvent(kgrid):
    # residue calculus: 1/(k+i) transforms to -i e^{-s} on s > 0
    k = kgrid.nodes
    d = fourier_pair(as_field(1 / (k + 1j), kgrid))
    s = d.s
    expected = np.where(s > 0, -1j * np.exp(-s), 0.0)
    expected[s == 0] = -0.5j
    assert np.max(np.abs(d.values - expected)) <= 1e-4
    np.testing.assert_allclose(d.inverse().values, 1 / (k + 1j), atol=1e-13)


def test_fourier_pair_gaussian(kgrid):
    k = kgrid.nodes
    d = fourier_pair(as_field(np.exp(-k**2), kgrid))
    expected = np.exp(-d.s**2 / 4) / (2 * np.sqrt(np.pi))
    np.testing.assert_allclose(d.values, expected, atol=1e-12)
    np.testing.assert_allclose(d.values.real[1:], d.values.real[1:][::-1], atol=1e-12)


def test_riesz_hardy_member(kgrid):
    k = kgrid.nodes
    f = as_field(1 / (k + 1j), kgrid)
    assert riesz_project(f, "-").norm() <= 1e-6
    assert (riesz_project(f, "+") - f).norm() <= 1e-6


def test_riesz_partial_fractions(kgrid):
    k = kgrid.nodes
    f = as_field(1 / (k**2 + 1), kgrid)
    minus = riesz_project(f, "-")
    assert np.max(np.abs(minus.values - 1 / (2j * (k - 1j)))) <= 1e-6
    assert minus.member == "-"


def test_riesz_real_even_conjugate(kgrid):
    k = kgrid.nodes
    f = as_field(np.exp(-k**2) / (1 + k**2), kgrid)
    np.testing.assert_allclose(
        riesz_project(f, "-").values, np.conj(riesz_project(f, "+").values), atol=1e-14
    )


@pytest.mark.parametrize("seed", range(4))
def test_riesz_decomposition_exact(kgrid, seed):
    f = bumps(kgrid, seed)
    total = riesz_project(f, "+").values + riesz_project(f, "-").values
    np.testing.assert_allclose(total, f.values, rtol=0, atol=1e-15)


@pytest.mark.parametrize("sign", ["+", "-"])
def test_riesz_idempotent(kgrid, sign):
    f = bumps(kgrid, 7)
    once = riesz_project(f, sign)
    assert (riesz_project(once, sign) - once).norm() <= 1e-8


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_riesz_self_adjoint(seed):
    kgrid = KGrid(16.0, 1024)
    f, g = bumps(kgrid, seed), bumps(kgrid, seed + 1)
    lhs = riesz_project(f, "-").inner(g)
    rhs = f.inner(riesz_project(g, "-"))
    assert abs(lhs - rhs) <= 1e-10


def test_minus_projector_matrix_matches(kgrid):
    f = bumps(kgrid, 3)
    P = minus_projector(kgrid.K, kgrid.N)
    np.testing.assert_allclose(P @ f.values, riesz_project(f, "-").values, atol=1e-12)


def test_regularized_constant(kgrid):
    out = regularized_project(as_field(np.full(kgrid.N, 2.5 + 0j), kgrid))
    assert np.max(np.abs(out.values)) <= 1e-10


def test_regularized_unimodular(kgrid):
    k = kgrid.nodes
    out = regularized_project(as_field(np.exp(2j * k), kgrid))
    assert np.all(np.isfinite(out.values))


def test_regularized_differs_by_constant(kgrid):
    # (k+i) P_-[phi/(k+i)] - P_- phi is constant when phi is in L2
    k = kgrid.nodes
    phi = as_field(np.exp(-k**2) * np.exp(1j * k), kgrid)
    diff = regularized_project(phi).values - riesz_project(phi, "-").values
    inner = np.abs(k) < 4
    assert np.ptp(diff[inner].real) + np.ptp(diff[inner].imag) <= 1e-8


def test_pv_odd_vanishes(kgrid):
    k = kgrid.nodes
    assert pv_integral(k / (1 + k**4), kgrid).value == 0


@pytest.mark.parametrize(
    "func,value,tol",
    [
        (lambda k: 1 / (k - 1j), 1j * np.pi, 1e-6),
        (lambda k: 1 / (k**2 + 1), np.pi, 1e-8),
        (lambda k: np.exp(-k**2), np.sqrt(np.pi), 1e-10),
    ],
)
def test_pv_values(kgrid, func, value, tol):
    res = pv_integral(func, kgrid)
    assert abs(res.value - value) <= tol
    assert res.residual <= 1e-6


def test_pv_truncated_values_match_closed_form(kgrid):
    # int_{-a}^{a} dk/(k-i) = i pi (1 - (2/pi) arctan(1/a)) up to midpoint error
    res = pv_integral(lambda k: 1 / (k - 1j), kgrid)
    a = res.truncations
    exact = 1j * np.pi * (1 - 2 / np.pi * np.arctan(1 / a))
    assert np.max(np.abs(res.partial_sums - exact)[a > 4]) <= 1e-5


def test_pv_nonconvergence_raises():
    g = KGrid(8.0, 256)
    with pytest.raises(ConvergenceError):
        pv_integral(lambda k: np.cos(k**2), g, tol=1e-8)


@pytest.mark.parametrize(
    "func,tol",
    [
        (lambda k: 1 / (k**2 + 1), 1e-6),
        (lambda k: np.zeros_like(k), 0.0),
        (lambda k: np.exp(-k**2), 1e-6),
    ],
)
def test_pv_lemma(kgrid, func, tol):
    assert pv_lemma_check(func, kgrid) <= tol


def test_pv_lemma_halves(kgrid):
    k = kgrid.nodes
    f = as_field(1 / (k**2 + 1), kgrid)
    assert pv_integral(riesz_project(f, "-")).value == pytest.approx(np.pi / 2, abs=1e-6)


@given(st.floats(0.3, 1.2), st.floats(-1.5, 1.5))
@settings(max_examples=20, deadline=None)
def test_pv_lemma_property(width, shift):
    kgrid = KGrid(16.0, 1024)
    assert pv_lemma_check(lambda k: np.exp(-(((k - shift) / width) ** 2)) * (1 + 0.5j * k), kgrid) <= 1e-6


def test_hardy_integral_vanishes(kgrid):
    # int f = 0 for f in H^1_+, up to truncation
    k = kgrid.nodes
    assert abs(pv_integral(1 / (k + 1j) ** 2, kgrid).value) <= 1e-8


def test_cauchy_eval_continues(kgrid):
    k = kgrid.nodes
    f = as_field(1 / (k + 1j), kgrid)
    z = np.array([0.5j, 1 + 2j, -3 + 0.1j])
    np.testing.assert_allclose(cauchy_eval(f, z), 1 / (z + 1j), atol=1e-8)
    g = as_field(1 / (k - 2j), kgrid)
    np.testing.assert_allclose(cauchy_eval(g, z), 0, atol=1e-6)
    with pytest.raises(ValueError):
        cauchy_eval(f, [1.0])


def test_field_algebra(kgrid):
    f = bumps(kgrid, 0)
    assert ((f + f) - 2 * f).norm() == 0
    assert f.reflect().reflect().values.tolist() == f.values.tolist()
    with pytest.raises(ValueError):
        SpectralField(kgrid, np.zeros(3))
