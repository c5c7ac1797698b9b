import numpy as np
import pytest

from tracekdv.exceptions import ParameterError, PositivityError
from tracekdv.forward import ScatteringData, compute_jost, compute_TR
from tracekdv.grids import KGrid, PotentialSpec, XGrid, sample_potential
from tracekdv.hankel import (
    HalfLineQuadrature,
    ReflectionKernel,
    assemble_operator,
    build_symbol,
    hankel_apply,
    marchenko_solve,
    solve_field,
)
from tracekdv.hardy import SpectralField, regularized_project, riesz_project

KG = KGrid(16.0, 1024)
XG = XGrid(-20.0, 20.0, 2001)


def soliton_data(kg=KG, bound_states=((1.0, 2.0),)):
    return ScatteringData("+", kg, np.zeros(kg.N), np.ones(kg.N), bound_states)


@pytest.fixture(scope="module")
def gauss():
    p = sample_potential(PotentialSpec.gaussian(-0.3), XG)
    sd, _ = compute_TR(p, KG)
    return p, sd


@pytest.fixture(scope="module")
def repulsive():
    p = sample_potential(PotentialSpec.gaussian(0.5), XG)
    sd, _ = compute_TR(p, KG)
    return p, sd


_JOST = {}


def jost_plus(p):
    if id(p) not in _JOST:
        _JOST[id(p)] = compute_jost(p, "+", KG)
    return _JOST[id(p)]


def packet(k, s0, w=1.0, phase=0.0):
    """Smooth H^2_+ element whose dual is a Gaussian bump at s0 > 0."""
    return np.exp(1j * (k * s0 + phase) - (w * k) ** 2 / 2)


# ---------------------------------------------------------------- symbol


def test_symbol_zero():
    phi = build_symbol(soliton_data(bound_states=()), 0.3)
    assert np.max(np.abs(phi.values)) == 0


def test_symbol_soliton():
    k = KG.nodes
    phi = build_symbol(soliton_data(), 0.0)
    np.testing.assert_allclose(phi.values, -2j / (k - 1j), atol=1e-14)


@pytest.mark.parametrize("x,t", [(0.0, 0.0), (-3.0, 0.5), (2.0, 1.0)])
def test_symbol_symmetry(gauss, x, t):
    assert build_symbol(gauss[1], x, t).symmetry_residual() <= 1e-12


def test_symbol_unevolved_and_negative_time():
    sd = soliton_data()
    assert build_symbol(sd, 0.0, 2.0, evolved=False).t == 0.0
    with pytest.raises(ParameterError):
        build_symbol(sd, 0.0, -1.0)


def test_symbol_amplitude_growth():
    phi = build_symbol(soliton_data(), 0.5, 0.25)
    assert phi.amplitudes[0] == pytest.approx(2 * np.exp(8 * 0.25 - 1.0), rel=1e-14)


# --------------------------------------------------------- hankel_apply


def test_apply_constant_symbol():
    k = KG.nodes
    phi = SpectralField(KG, np.full(KG.N, 0.7 - 0.2j))
    f = SpectralField(KG, packet(k, 10.0))
    assert np.max(np.abs(hankel_apply(phi, f).values)) <= 1e-10


def test_apply_soliton_partial_fraction():
    # -2i/((k-i)(k+i)) = 1/(k+i) - 1/(k-i); the H^2_- piece is -1/(k-i), reflected to 1/(k+i)
    k = KG.nodes
    out = hankel_apply(build_symbol(soliton_data(), 0.0), 1 / (k + 1j))
    assert np.max(np.abs(out.values - 1 / (k + 1j))) <= 1e-6


def test_apply_matches_field_form(gauss):
    k = KG.nodes
    phi = build_symbol(gauss[1], 0.4)
    f = packet(k, 10.0)
    a = hankel_apply(phi, f).values
    b = hankel_apply(phi.field(), f).values
    assert np.max(np.abs(a - b)) <= 1e-8


@pytest.mark.parametrize("seed", range(4))
def test_apply_self_adjoint(repulsive, seed):
    rng = np.random.default_rng(seed)
    k = KG.nodes
    phi = build_symbol(repulsive[1], rng.uniform(-1, 1))
    f = SpectralField(KG, packet(k, rng.uniform(9, 12), rng.uniform(0.8, 1.2), rng.uniform(0, 6)))
    g = SpectralField(KG, packet(k, rng.uniform(9, 12), rng.uniform(0.8, 1.2), rng.uniform(0, 6)))
    lhs = hankel_apply(phi, f).inner(g)
    rhs = f.inner(hankel_apply(phi, g))
    assert abs(lhs - rhs) <= 1e-10


def test_regularized_symbol_same_operator(repulsive):
    k = KG.nodes
    phi = build_symbol(repulsive[1], 0.2).field()
    f = packet(k, 10.0)
    a = hankel_apply(phi, f).values
    b = hankel_apply(regularized_project(phi), f).values
    assert np.sqrt(KG.spacing * np.sum(np.abs(a - b) ** 2)) <= 1e-8


# -------------------------------------------------------------- operator


@pytest.mark.parametrize("rep", ["spectral", "kernel"])
def test_zero_operator(rep):
    op = assemble_operator(build_symbol(soliton_data(bound_states=()), 0.0), rep)
    assert not np.any(op.matrix)


def test_unknown_rep():
    with pytest.raises(ParameterError):
        assemble_operator(build_symbol(soliton_data(), 0.0), "dense")


def test_spectral_cap():
    big = soliton_data(KGrid(16.0, 8192))
    with pytest.raises(ParameterError):
        assemble_operator(build_symbol(big, 0.0), "spectral")


@pytest.mark.parametrize("x", [-2.0, 0.0, 1.5])
def test_kernel_soliton_operator(x):
    op = assemble_operator(build_symbol(soliton_data(), x), "kernel")
    assert op.symmetry_residual() <= 1e-10
    assert op.lambda_min > 0
    ev = np.linalg.eigvalsh(op.matrix)
    # ||H|| <= ||phi||_inf = a / kappa
    assert ev[-1] <= op.symbol.amplitudes[0] * (1 + 1e-8)


@pytest.mark.parametrize("x", [-4.0, 0.0, 2.0])
def test_kernel_gaussian_operator(gauss, x):
    phi = build_symbol(gauss[1], x)
    op = assemble_operator(phi, "kernel")
    assert op.symmetry_residual() <= 1e-10
    assert op.lambda_min > 0
    assert np.max(np.abs(np.linalg.eigvalsh(op.matrix))) <= np.max(np.abs(phi.values)) + 1e-6


def _dual_power(n):
    from math import factorial

    f = lambda k: (k + 1j) ** (-n)  # noqa: E731
    fh = lambda s: -1j * (-1j * s) ** (n - 1) * np.exp(-s) / factorial(n - 1)  # noqa: E731
    return f, fh


@pytest.mark.parametrize("x", [-1.0, 0.5, 2.0])
@pytest.mark.parametrize("n", [6, 8])
def test_quadratic_form_cross_rep(gauss, x, n):
    f, fh = _dual_power(n)
    phi = build_symbol(gauss[1], x)
    a = assemble_operator(phi, "spectral").quadratic_form(f)
    b = assemble_operator(phi, "kernel").quadratic_form(fh)
    assert abs(a - b) <= 1e-5


def test_quadrature_rule():
    q = HalfLineQuadrature(5.0, 0.5)
    assert q.nodes.size == 100
    assert np.sum(q.weights) == pytest.approx(5.0, rel=1e-14)
    assert np.sum(q.weights * np.exp(-q.nodes)) == pytest.approx(1 - np.exp(-5.0), rel=1e-13)
    k = np.array([0.0, 3.0, 17.0])
    exact = (np.exp((1j * k - 1) * 5.0) - 1) / (1j * k - 1)
    np.testing.assert_allclose(q.fourier(k, np.exp(-q.nodes)), exact, atol=1e-12)


def test_kernel_soliton_closed_form():
    # F_R vanishes; only the bound-state exponential remains
    kern = ReflectionKernel(soliton_data(), 0.0)
    assert kern.zero
    assert np.all(kern(np.linspace(-3, 3, 7)) == 0)


# ---------------------------------------------------------------- solves


@pytest.mark.parametrize("rep", ["spectral", "kernel"])
def test_solve_zero(rep):
    sol = marchenko_solve(assemble_operator(build_symbol(soliton_data(bound_states=()), 0.0), rep))
    assert not np.any(sol.y) and not np.any(sol.dy)


@pytest.mark.parametrize("x", [-5.0, -1.0, 0.0, 2.0, 6.0])
@pytest.mark.parametrize("rep", ["spectral", "kernel"])
def test_solve_soliton(x, rep):
    k = KG.nodes
    sol = marchenko_solve(assemble_operator(build_symbol(soliton_data(), x), rep))
    assert np.max(np.abs(sol.y - 1j * (np.tanh(x) - 1) / (k + 1j))) <= 1e-5
    assert np.max(np.abs(sol.dy - 1j / np.cosh(x) ** 2 / (k + 1j))) <= 1e-4
    if rep == "kernel":
        assert sol.q == pytest.approx(-2 / np.cosh(x) ** 2, abs=1e-10)


@pytest.mark.parametrize("x", [-4.0, 0.0, 1.0, 3.0])
@pytest.mark.parametrize("rep", ["spectral", "kernel"])
def test_solve_gaussian_vs_jost(gauss, x, rep):
    p, sd = gauss
    jp = jost_plus(p)
    i = np.argmin(np.abs(XG.nodes - x))
    sol = marchenko_solve(assemble_operator(build_symbol(sd, XG.nodes[i]), rep))
    err = np.sqrt(KG.spacing * np.sum(np.abs(sol.y - jp.y[i]) ** 2))
    assert err <= 1e-4
    assert sol.residual <= 1e-8
    if rep == "kernel":
        assert sol.q == pytest.approx(p.values[i], abs=1e-6)


def test_solution_in_upper_hardy_space(gauss):
    sol = marchenko_solve(assemble_operator(build_symbol(gauss[1], 0.0), "spectral"))
    y = SpectralField(KG, sol.y)
    assert riesz_project(y, "-").norm() <= 1e-6 * y.norm()


def test_kernel_off_grid_evaluation(gauss):
    sol = marchenko_solve(assemble_operator(build_symbol(gauss[1], 0.0), "kernel"))
    np.testing.assert_allclose(sol.y_at(KG.nodes[::37]), sol.y[::37], atol=1e-13)


@pytest.mark.parametrize("rep", ["spectral", "kernel"])
def test_derivative_finite_difference(gauss, rep):
    sd = gauss[1]
    x, h = 0.3, 1e-3
    sols = [marchenko_solve(assemble_operator(build_symbol(sd, x + d), rep)) for d in (-h, 0.0, h)]
    fd = (sols[2].y - sols[0].y) / (2 * h)
    assert np.max(np.abs(fd - sols[1].dy)) <= 1e-5


def test_positivity_guard():
    # a negative norming constant breaks positivity of I + H
    sd = soliton_data(bound_states=((1.0, -2.0),))
    with pytest.raises(PositivityError):
        marchenko_solve(assemble_operator(build_symbol(sd, -1.0), "kernel"))


def test_solve_field_matches_pointwise(gauss):
    p, sd = gauss
    x = np.array([-2.0, 0.0, 2.0])
    fld = solve_field(sd, x, check_positivity=True)
    assert np.all(fld.lambda_min > 0)
    np.testing.assert_allclose(fld.q, p(x), atol=1e-6)
    y, dy = fld.at(np.array([0.5]))
    assert y.shape == (3, 1) and dy.shape == (3, 1)


def test_solve_field_without_bound_states(gauss):
    fld = solve_field(gauss[1], [0.0], drop_bound_states=True)
    assert np.isfinite(fld.q).all()
