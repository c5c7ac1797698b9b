import numpy as np
import pytest

from tracekdv.exceptions import ParameterError
from tracekdv.forward import (
    ScatteringData,
    compute_jost,
    compute_TR,
    find_bound_states,
    reflection_via_integral,
)
from tracekdv.grids import KGrid, PotentialSpec, XGrid, catalog, sample_potential

KG = KGrid(12.0, 512)
XG = XGrid(-20.0, 20.0, 2001)


@pytest.fixture(scope="module")
def data():
    """Right/left scattering data for every catalog potential."""
    out = {}
    for name, spec in catalog().items():
        p = sample_potential(spec, XG)
        out[name] = (p, *compute_TR(p, KG))
    return out


@pytest.mark.parametrize("side", ["+", "-"])
def test_jost_free(side):
    p = sample_potential(PotentialSpec.zero(), XG)
    f = compute_jost(p, side, KG)
    assert np.max(np.abs(f.y)) == 0


def test_jost_sech2_closed_form():
    p = sample_potential(PotentialSpec.sech2(1.0), XG)
    f = compute_jost(p, "+", KG)
    k, x = KG.nodes, XG.nodes
    expected = 1j * (np.tanh(x)[:, None] - 1) / (k[None, :] + 1j)
    assert np.max(np.abs(f.y - expected)) <= 1e-6


def test_jost_sech2_imaginary_momentum():
    # psi_+(x, i) = sech(x) / 2
    p = sample_potential(PotentialSpec.sech2(1.0), XG)
    f = compute_jost(p, "+", [1j])
    np.testing.assert_allclose(f.psi()[:, 0][900:], 0.5 / np.cosh(XG.nodes[900:]), atol=1e-9)


@pytest.mark.parametrize("name", ["sech2", "gaussian", "gaussian_repulsive"])
@pytest.mark.parametrize("side", ["+", "-"])
def test_jost_large_k(name, side):
    p = sample_potential(catalog()[name], XG)
    K = np.array([8.0, 16.0, 32.0])
    f = compute_jost(p, side, K)
    C = f.asymptotic_residual() * K**2
    # bounded by a fitted constant that does not grow with K
    assert C[-1] <= 1.5 * C[0] + 1e-6


def test_jost_symmetry(data):
    p = data["gaussian"][0]
    f = compute_jost(p, "-", KG)
    np.testing.assert_allclose(f.y[:, ::-1], np.conj(f.y), atol=1e-9)


def test_jost_rejects_lower_half_plane():
    p = sample_potential(PotentialSpec.zero(), XG)
    with pytest.raises(ParameterError):
        compute_jost(p, "+", [-1j])
    with pytest.raises(ParameterError):
        compute_jost(p, "left", KG)


def test_free_scattering(data):
    _, right, left = data["zero"]
    np.testing.assert_allclose(right.T, 1, rtol=0, atol=1e-15)
    assert np.all(right.R == 0) and np.all(left.R == 0)
    assert right.bound_states == ()


def test_sech2_reflectionless(data):
    _, right, left = data["sech2"]
    k = KG.nodes
    assert np.max(np.abs(right.R)) <= 1e-6
    assert np.max(np.abs(left.R)) <= 1e-6
    np.testing.assert_allclose(right.T, (k + 1j) / (k - 1j), atol=1e-8)


@pytest.mark.parametrize("name", list(catalog()))
def test_unitarity_and_symmetry(data, name):
    _, right, left = data[name]
    assert right.unitarity_residual() <= 1e-6
    assert left.unitarity_residual() <= 1e-6
    assert right.symmetry_residual() <= 1e-8


@pytest.mark.parametrize("name", list(catalog()))
def test_reflection_routes_agree(data, name):
    p, right, _ = data[name]
    jm = compute_jost(p, "-", KG)
    R = reflection_via_integral(p, right.T, jm)
    assert np.sqrt(KG.spacing * np.sum(np.abs(R - right.R) ** 2)) <= 1e-5


def test_left_right_reflection_relation(data):
    # R_- (k) T(-k) + R_+(-k) T(k) = 0
    _, right, left = data["gaussian"]
    lhs = left.R * right.T[::-1] + right.R[::-1] * right.T
    assert np.max(np.abs(lhs)) <= 1e-8


def test_gaussian_born_limit():
    # weak potential: R_+ ~ (1/2ik) int exp(-2ikx) q dx, second order ~ (eps/k)^2
    eps = 1e-4
    p = sample_potential(PotentialSpec.gaussian(eps, 1.0), XG)
    right, _ = compute_TR(p, KG, with_bound_states=False)
    k = KG.nodes
    born = eps * np.sqrt(np.pi) * np.exp(-(k**2)) / (2j * k)
    away = np.abs(k) >= 1
    assert np.max(np.abs(right.R - born)[away]) <= 1e-7


def test_sech2_bound_state():
    p = sample_potential(PotentialSpec.sech2(1.0), XG)
    ((kappa, c2),) = find_bound_states(p)
    assert kappa == pytest.approx(1.0, abs=1e-8)
    assert c2 == pytest.approx(2.0, abs=1e-6)


def test_two_soliton_bound_states():
    p = sample_potential(PotentialSpec.sech2(1.0, order=2), XG)
    bs = find_bound_states(p)
    np.testing.assert_allclose([b[0] for b in bs], [2.0, 1.0], atol=1e-8)
    np.testing.assert_allclose([b[1] for b in bs], [12.0, 6.0], rtol=1e-6)


def test_no_bound_states():
    assert find_bound_states(sample_potential(PotentialSpec.zero(), XG)) == []
    assert find_bound_states(sample_potential(PotentialSpec.gaussian(0.5), XG)) == []


@pytest.mark.parametrize("a", [-2.0, 1.5])
def test_translation_covariance(data, a):
    _, right, _ = data["gaussian"]
    p = sample_potential(catalog()["gaussian"].shifted(a), XG)
    moved, _ = compute_TR(p, KG)
    expected = right.translated(a)
    np.testing.assert_allclose(moved.R, expected.R, atol=1e-8)
    np.testing.assert_allclose(moved.c2, expected.c2, rtol=1e-6)


def test_thread_count_does_not_change_result():
    p = sample_potential(catalog()["gaussian"], XG)
    a = compute_jost(p, "+", KGrid(12.0, 1024), threads=1)
    b = compute_jost(p, "+", KGrid(12.0, 1024), threads=4)
    np.testing.assert_array_equal(a.y, b.y)


def test_scattering_data_roundtrip(data):
    _, right, _ = data["gaussian"]
    back = ScatteringData.from_dict(right.to_dict())
    np.testing.assert_array_equal(back.R, right.R)
    assert back.bound_states == right.bound_states


def test_reflectionless_constructor():
    sd = ScatteringData.reflectionless(KG, [(1.0, 2.0)])
    k = KG.nodes
    np.testing.assert_allclose(sd.T, (k + 1j) / (k - 1j))
    assert sd.unitarity_residual() <= 1e-14
