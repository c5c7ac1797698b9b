import numpy as np
import pytest

from tracekdv.exceptions import DegenerateSpectrumError, ParameterError
from tracekdv.forward import ScatteringData, compute_TR
from tracekdv.grids import KGrid, PotentialSpec, XGrid, sample_potential
from tracekdv.hankel import solve_field
from tracekdv.reconstruction import (
    METHODS,
    cross_table,
    darboux_dress,
    dt_trace,
    q0_representations,
    reconstruct,
    reconstruct_trace1,
    reconstruct_trace2,
    reconstruct_trace3,
    reconstruct_trace4,
    trace1_sweep,
)

KG = KGrid(16.0, 1024)
XG = XGrid(-20.0, 20.0, 2001)
X = np.linspace(-6.0, 6.0, 25)


def reflectionless(bound_states):
    return ScatteringData("+", KG, np.zeros(KG.N), np.ones(KG.N), tuple(bound_states))


ONE = reflectionless([(1.0, 2.0)])
TWO = reflectionless([(2.0, 12.0), (1.0, 6.0)])


@pytest.fixture(scope="module")
def one_field():
    return solve_field(ONE, X)


@pytest.fixture(scope="module")
def gauss():
    p = sample_potential(PotentialSpec.gaussian(-0.3), XG)
    sd, _ = compute_TR(p, KG)
    return p, sd, solve_field(sd, X)


def sech2(x, n=1):
    return -n * (n + 1) / np.cosh(x) ** 2


def test_zero_data_all_methods():
    sd = reflectionless([])
    out = reconstruct(sd, X, METHODS)
    for name, r in out.items():
        assert np.max(np.abs(r.q)) == 0, name


@pytest.mark.parametrize("method,tol", [("trace1", 1e-3), ("trace2", 1e-3), ("trace3", 1e-4), ("dt", 1e-6)])
def test_soliton_oracle(one_field, method, tol):
    out = reconstruct(ONE, X, [method], fld=one_field)[method]
    assert np.max(np.abs(out.q - sech2(X))) <= tol


def test_trace3_bound_term_alone(one_field):
    # R = 0 leaves only the discrete sum
    r = reconstruct_trace3(ONE, one_field)
    assert np.max(np.abs(r.q - sech2(X))) <= 1e-4
    assert np.max(np.abs(reconstruct_trace3(ONE, one_field, bound_states=False).q)) == 0


@pytest.mark.parametrize("sd,n,tol", [(ONE, 1, 1e-6), (TWO, 2, 1e-4)])
def test_darboux_reflectionless(sd, n, tol):
    r = reconstruct_trace4(sd, X)
    assert np.max(np.abs(r.q - sech2(X, n))) <= tol


def test_darboux_closed_form_single():
    # zero background: psi = 1, dpsi = -kappa
    x = np.linspace(-8, 8, 801)
    psi = np.ones((x.size, 1))
    r = darboux_dress(x, np.zeros_like(x), psi, -psi, [1.0], [2.0])
    assert np.max(np.abs(r.q - sech2(x))) <= 1e-6


def test_darboux_gram_guard():
    # coincident momenta with negligible C^-1 leave a rank-one Gram matrix
    x = np.linspace(-4, 4, 401)
    psi = np.ones((x.size, 2))
    with pytest.raises(DegenerateSpectrumError):
        darboux_dress(x, np.zeros_like(x), psi, -psi, [1.0, 1.0 + 1e-13], [1e30, 1e30])


@pytest.mark.parametrize("kappa", [[1.0, 1.0], [1.0, 1.0 + 1e-12]])
def test_darboux_coincident_momenta(kappa):
    x = np.linspace(-2, 2, 21)
    psi = np.ones((x.size, 2))
    with pytest.raises(DegenerateSpectrumError, match="coincide"):
        darboux_dress(x, np.zeros_like(x), psi, -psi, kappa, [2.0, 2.0])


def test_darboux_rejects_negative_constant():
    x = np.linspace(-1, 1, 11)
    psi = np.ones((x.size, 1))
    with pytest.raises(ParameterError):
        darboux_dress(x, np.zeros_like(x), psi, -psi, [1.0], [-1.0])


@pytest.mark.parametrize("method", ["trace1", "trace2", "trace3", "dt", "trace4"])
def test_gaussian_against_potential(gauss, method):
    p, sd, fld = gauss
    r = reconstruct(sd, X, [method], fld=fld)[method]
    assert np.max(np.abs(r.q - p(X))) <= 1e-4


def test_gaussian_cross_methods(gauss):
    _, sd, fld = gauss
    table = cross_table(reconstruct(sd, X, METHODS, fld=fld))
    assert len(table) == 10
    assert max(table.values()) <= 1e-4


def test_trace1_alpha_invariance(gauss):
    _, spread = trace1_sweep(gauss[2], (0.25, 0.5, 1.0, 2.0, 4.0))
    assert spread <= 1e-4


def test_trace1_rejects_bad_alpha(one_field):
    with pytest.raises(ParameterError):
        reconstruct_trace1(one_field, 0.0)


def test_reality(gauss):
    _, sd, fld = gauss
    assert reconstruct_trace3(sd, fld).imag_residue <= 1e-6
    assert dt_trace(sd, fld).imag_residue <= 1e-6


def test_trace4_without_bound_states():
    p = sample_potential(PotentialSpec.gaussian(0.5), XG)
    sd, _ = compute_TR(p, KG)
    assert not sd.bound_states
    r = reconstruct_trace4(sd, X[::3])
    np.testing.assert_array_equal(r.q, r.meta["q0"])
    assert np.max(np.abs(r.q - p(X[::3]))) <= 1e-5


def test_q0_representations_agree(gauss):
    reps = q0_representations(gauss[1], X[::4])
    ref = reps["kernel"]
    for name, q in reps.items():
        assert np.max(np.abs(q - ref)) <= 1e-5, name


def test_tail_reported(gauss):
    r = reconstruct_trace2(gauss[2])
    assert r.tail.shape == X.shape and np.all(r.tail >= 0)


@pytest.mark.parametrize("methods", [[], ["trace9"]])
def test_bad_method_list(methods):
    with pytest.raises(ParameterError):
        reconstruct(ONE, X, methods)
