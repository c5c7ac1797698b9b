"""Recovery of ``q(x)`` from Faddeev functions and scattering data.

All formulas are written for right-side data. Left-side reconstructions
are obtained by reflecting the potential, ``x -> -x``.

Field arguments follow the protocol shared by
:class:`~tracekdv.forward.JostField` and :class:`~tracekdv.hankel.MarchenkoField`:
attributes ``x``, ``k``, ``y`` and ``dy`` with ``y[i, j] = y(k_j, x_i)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .exceptions import DegenerateSpectrumError, ParameterError, TruncationWarning
from .forward import ScatteringData
from .grids import KGrid
from .hankel import MarchenkoField, MarchenkoSolution, ReflectionKernel, _cauchy_rows, solve_field
from .hardy import pv_integral

TAIL_FRACTION = 0.875
METHODS = ("trace1", "trace2", "trace3", "trace4", "dt")


@dataclass
class ReconstructionResult:
    """Reconstructed potential on a set of points.

    Attributes
    ----------
    x, q : ndarray
    method : str
        One of ``trace1``, ``trace2``, ``trace3``, ``trace4``, ``dt``.
    tail : ndarray
        Per-point magnitude of the truncation-tail correction (or of the
        principal-value extrapolation residual).
    derivative : {"analytic", "finite-difference"}
    imag_residue : float
        ``max |Im q|`` before the real part was taken.
    """

    x: np.ndarray
    q: np.ndarray
    method: str
    tail: np.ndarray
    derivative: str = "analytic"
    imag_residue: float = 0.0
    meta: dict = field(default_factory=dict)

    def sup_diff(self, other: "ReconstructionResult") -> float:
        return float(np.max(np.abs(self.q - other.q)))

    def to_columns(self) -> dict:
        return {"x": self.x, f"q_{self.method}": self.q}


# ------------------------------------------------------------ helpers


def _kgrid_of(fld) -> KGrid:
    k = np.asarray(fld.k).real
    dk = k[1] - k[0]
    if not np.allclose(np.diff(k), dk, rtol=1e-9, atol=0) or abs(k[0] + k[-1]) > 1e-9 * abs(k[0]):
        raise ParameterError("field momenta must be the nodes of a KGrid")
    return KGrid(float(-k[0] + dk / 2), k.size)


def _even_integral(values: np.ndarray, kgrid: KGrid, weight=None, start: int = 1, terms: int = 2,
                   fraction: float = TAIL_FRACTION):
    """``int_R w(k) f(k) dk`` for rows of even samples ``f``.

    The midpoint sum over the grid is completed beyond ``K`` by a
    least-squares fit ``f ~ sum_j c_j k^(-2j)``, ``j = start .. start+terms-1``,
    on ``|k| >= fraction * K``, integrated against ``w`` (default 1).
    Returns ``(integral, tail)``.
    """
    k, K, dk = kgrid.nodes, kgrid.K, kgrid.spacing
    w = np.ones_like(k) if weight is None else weight(k)
    body = dk * (values * w).sum(axis=-1)
    powers = range(start, start + terms)
    sel = np.abs(k) >= fraction * K
    A = np.column_stack([k[sel] ** (-2 * j) for j in powers])
    coef = np.linalg.lstsq(A, values[..., sel].T, rcond=None)[0]
    if weight is None:
        moments = [K ** (1 - 2 * j) / (2 * j - 1) for j in powers]
    else:
        moments = [quad(lambda t, j=j: weight(np.array(t)) * t ** (-2 * j), K, np.inf, epsabs=1e-15)[0]
                   for j in powers]
    tail = 2 * np.tensordot(np.array(moments), coef, axes=1)
    return body + tail, np.abs(tail)


def _at_imaginary(fld, kappa: np.ndarray, kgrid: KGrid):
    """``y`` and ``dy`` at ``k = i kappa`` for every ``x`` of the field."""
    if isinstance(fld, MarchenkoField):
        return fld.at(1j * kappa)
    rows = _cauchy_rows(kgrid, 1j * kappa)
    return fld.y @ rows.T, fld.dy @ rows.T


def _check_tail(tail, tol, method):
    if tol is not None and np.max(tail) > tol:
        warnings.warn(f"{method}: truncation tail {np.max(tail):.3g} exceeds {tol:.3g}; increase K",
                      TruncationWarning, stacklevel=3)


# ----------------------------------------------------- real-axis traces


def reconstruct_trace1(fld, alpha: float = 1.0, tail_tol: Optional[float] = None) -> ReconstructionResult:
    """``q = -(2/pi) d/dx int Re[y k / (k + i alpha)] dk`` with analytic ``d/dx``."""
    if not alpha > 0:
        raise ParameterError("alpha must be positive")
    g = _kgrid_of(fld)
    k = g.nodes
    # Re[dy k/(k + i alpha)] = (k^2 Re dy + alpha k Im dy) / (k^2 + alpha^2)
    I1, t1 = _even_integral(np.real(fld.dy), g, lambda s: s**2 / (s**2 + alpha**2))
    I2, t2 = _even_integral(k * np.imag(fld.dy), g, lambda s: alpha / (s**2 + alpha**2), start=0)
    I, tail = I1 + I2, t1 + t2
    _check_tail(tail, tail_tol, "trace1")
    return ReconstructionResult(np.asarray(fld.x), -2 / math.pi * I, "trace1", tail, meta={"alpha": alpha})


def trace1_sweep(fld, alphas: Sequence[float] = (0.5, 1.0, 2.0, 4.0)):
    """trace1 for several ``alpha`` and the pointwise spread between them."""
    res = [reconstruct_trace1(fld, a) for a in alphas]
    qs = np.array([r.q for r in res])
    return res, float(np.max(qs.max(axis=0) - qs.min(axis=0)))


def reconstruct_trace2(fld, tail_tol: Optional[float] = None) -> ReconstructionResult:
    """``q = -(2/pi) d/dx int Re y dk`` with analytic ``d/dx``.

    ``Re y`` is ``O(k^-2)`` so the truncated integral converges absolutely;
    the remainder beyond ``K`` is added from a fitted ``k^-2, k^-4`` tail.
    """
    g = _kgrid_of(fld)
    I, tail = _even_integral(np.real(fld.dy), g)
    _check_tail(tail, tail_tol, "trace2")
    return ReconstructionResult(np.asarray(fld.x), -2 / math.pi * I, "trace2", tail)


def _pv_rows(values: np.ndarray, kgrid: KGrid):
    out = np.empty(values.shape[0], dtype=complex)
    res = np.empty(values.shape[0])
    for i, v in enumerate(values):
        r = pv_integral(v, kgrid)
        out[i], res[i] = r.value, r.residual
    return out, res


def reconstruct_trace3(sd: ScatteringData, fld, bound_states: bool = True) -> ReconstructionResult:
    """``q = d/dx {2 sum c^2 exp(-kappa x) psi(x, i kappa) + (1/pi) PV int exp(ikx) R psi dk}``.

    With ``psi = exp(ikx)(1 + y)`` the x-derivative is taken analytically
    under the integral. ``bound_states=False`` drops the discrete sum (the
    second representation of the bound-state-free potential).
    """
    g = _kgrid_of(fld)
    k = g.nodes
    x = np.asarray(fld.x, dtype=float)
    e = np.exp(2j * np.outer(x, k))
    integrand = (sd.R[None, :] * e) * (2j * k[None, :] * (1 + fld.y) + fld.dy)
    I, res = _pv_rows(integrand, g)
    q = I / math.pi
    if bound_states and sd.bound_states:
        kap, c2 = sd.kappa, sd.c2
        y, dy = _at_imaginary(fld, kap, g)
        w = c2[None, :] * np.exp(-2 * np.outer(x, kap))
        q = q + 2 * np.sum(w * (-2 * kap[None, :] * (1 + y) + dy), axis=1)
    return ReconstructionResult(x, q.real, "trace3", res / math.pi, imag_residue=float(np.max(np.abs(q.imag))))


def dt_trace(sd: ScatteringData, fld) -> ReconstructionResult:
    """``q = -4 sum kappa c^2 psi(x, i kappa)^2 + (2i/pi) PV int R psi^2 k dk``."""
    g = _kgrid_of(fld)
    k = g.nodes
    x = np.asarray(fld.x, dtype=float)
    integrand = sd.R[None, :] * np.exp(2j * np.outer(x, k)) * (1 + fld.y) ** 2 * k[None, :]
    I, res = _pv_rows(integrand, g)
    q = 2j / math.pi * I
    if sd.bound_states:
        kap, c2 = sd.kappa, sd.c2
        y, _ = _at_imaginary(fld, kap, g)
        psi2 = np.exp(-2 * np.outer(x, kap)) * (1 + y) ** 2
        q = q - 4 * np.sum((kap * c2)[None, :] * psi2, axis=1)
    return ReconstructionResult(x, q.real, "dt", 2 * res / math.pi, imag_residue=float(np.max(np.abs(q.imag))))


# ------------------------------------------------------------- dressing


def _gram_tail(x: np.ndarray, psi: np.ndarray, kappa: np.ndarray, order: int = 5) -> np.ndarray:
    """``exp((kappa_i + kappa_j) x) int_x^inf psi_i psi_j exp(-(kappa_i + kappa_j) s) ds``.

    ``psi`` holds the scaled eigenfunctions ``exp(kappa x) psi_0(x, i kappa)``
    on ``x`` (shape (Nx, J)). Accumulated backwards from ``x[-1]`` with
    Gauss-Legendre panels on a cubic spline of ``psi``; beyond the last
    node ``psi`` is frozen at its final value.
    """
    nx, J = psi.shape
    a = np.add.outer(kappa, kappa)
    spl = CubicSpline(x, psi, axis=0)
    g, w = np.polynomial.legendre.leggauss(order)
    h = np.diff(x)
    # nodes s = x_m + h_m (g + 1)/2 on every interval
    s = x[:-1, None] + h[:, None] * (g[None, :] + 1) / 2
    ps = spl(s.ravel()).reshape(nx - 1, order, J)
    prod = ps[:, :, :, None] * ps[:, :, None, :]
    decay = np.exp(-a[None, None] * (s - x[:-1, None])[:, :, None, None])
    panel = np.einsum("mg,mgij->mij", w[None, :] * h[:, None] / 2, prod * decay)
    step = np.exp(-a[None] * h[:, None, None])
    T = np.empty((nx, J, J))
    T[-1] = np.outer(psi[-1], psi[-1]) / a
    for m in range(nx - 2, -1, -1):
        T[m] = step[m] * T[m + 1] + panel[m]
    return T


def wronskian_gram(fld: MarchenkoField, kappa: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Exact Gram tail ``exp((kappa_i + kappa_j) x) int_x^inf psi_i psi_j ds``.

    Off the diagonal ``int_x^inf psi_i psi_j = -W[psi_i, psi_j](x) / (kappa_i^2 - kappa_j^2)``;
    on it ``(psi' d_kappa psi - psi d_kappa psi') / (2 kappa)``, with the
    ``kappa``-derivatives of ``y(i kappa)`` from a fourth-order central
    difference of the analytic extension.
    """
    kappa = np.asarray(kappa, dtype=float)
    psi, dpsi = bound_state_functions(fld, kappa)
    J = kappa.size
    T = np.empty((psi.shape[0], J, J))
    d2 = np.subtract.outer(kappa**2, kappa**2)
    off = ~np.eye(J, dtype=bool)
    W = dpsi[:, :, None] * psi[:, None, :] - psi[:, :, None] * dpsi[:, None, :]
    T[:, off] = -W[:, off] / d2[off]
    stencil = [(-2, 1 / 12), (-1, -2 / 3), (1, 2 / 3), (2, -1 / 12)]
    ey = np.zeros_like(psi)
    edy = np.zeros_like(psi)
    for m, c in stencil:
        y, dy = fld.at(1j * (kappa + m * h))
        ey += c * y.real / h
        edy += c * dy.real / h
    dk_psi = ey
    dk_dpsi = -psi - kappa[None, :] * ey + edy
    i = np.arange(J)
    T[:, i, i] = (dpsi * dk_psi - psi * dk_dpsi) / (2 * kappa[None, :])
    return T


def darboux_dress(x, q0, psi, dpsi, kappa, c2, cond_max: float = 1e14, gram=None,
                  gap_min: float = 1e-8) -> ReconstructionResult:
    """Add bound states to a bound-state-free background.

    ``q = q0 + 2 d/dx [Psi (C^-1 + int_x^inf Psi^T Psi)^-1 Psi^T]``.

    Parameters
    ----------
    x : array_like, shape (Nx,)
        Increasing; the Gram tail is accumulated from ``x[-1]``.
    q0 : array_like, shape (Nx,)
        Background potential.
    psi, dpsi : array_like, shape (Nx, J)
        Scaled background eigenfunctions ``exp(kappa x) psi_0(x, i kappa)``
        and ``exp(kappa x) d/dx psi_0(x, i kappa)``.
    kappa, c2 : array_like, shape (J,)
        Bound-state momenta and (possibly time-evolved) norming constants.
    gram : array_like, shape (Nx, J, J), optional
        Scaled Gram tail, e.g. from :func:`wronskian_gram`. By default it is
        accumulated by quadrature over ``x``.
    gap_min : float
        Smallest admissible relative gap between momenta. Closer pairs make
        the off-diagonal Wronskian quotients meaningless.

    Raises
    ------
    DegenerateSpectrumError
        Momenta closer than ``gap_min``, a non-finite Gram matrix or a
        condition number above ``cond_max``.

    Notes
    -----
    Working with scaled functions keeps the Gram matrix bounded for both
    signs of ``x``. With ``P = Psi G^-1 Psi^T`` and ``dG/dx = -Psi^T Psi``,
    ``dP/dx = 2 Psi' G^-1 Psi^T + P^2``.
    """
    x = np.asarray(x, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    c2 = np.atleast_1d(np.asarray(c2, dtype=float))
    if kappa.size == 0:
        return ReconstructionResult(x, q0.copy(), "trace4", np.zeros_like(x))
    if np.any(c2 <= 0) or np.any(kappa <= 0):
        raise ParameterError("momenta and norming constants must be positive")
    if kappa.size > 1:
        gap = np.min(np.diff(np.sort(kappa)))
        if gap < gap_min * kappa.max():
            raise DegenerateSpectrumError(f"bound-state momenta coincide (gap {gap:.3g})")
    psi = np.real(np.asarray(psi)).reshape(x.size, -1)
    dpsi = np.real(np.asarray(dpsi)).reshape(x.size, -1)
    T = _gram_tail(x, psi, kappa) if gram is None else np.asarray(gram, dtype=float)
    with np.errstate(over="ignore"):
        cinv = np.minimum(np.exp(2 * np.outer(x, kappa)) / c2[None, :], 1e250)
    G = T.copy()
    G[:, np.arange(kappa.size), np.arange(kappa.size)] += cinv
    # Jacobi scaling: the diagonal spans exp(2 kappa x) / c^2 over many decades
    d = np.sqrt(np.abs(np.diagonal(G, axis1=1, axis2=2)))
    Gs = G / (d[:, :, None] * d[:, None, :])
    if not np.all(np.isfinite(Gs)):
        raise DegenerateSpectrumError("Gram matrix is not finite")
    if kappa.size > 1:
        cond = np.linalg.cond(Gs)
        if np.any(cond > cond_max):
            raise DegenerateSpectrumError(f"Gram matrix condition number {cond.max():.3g} exceeds {cond_max:.3g}")
    Ginv_psi = np.linalg.solve(Gs, (psi / d)[:, :, None])[:, :, 0] / d
    P = np.sum(psi * Ginv_psi, axis=1)
    dP = 2 * np.sum(dpsi * Ginv_psi, axis=1) + P**2
    return ReconstructionResult(x, q0 + 2 * dP, "trace4", np.zeros_like(x))


def bound_state_functions(fld: MarchenkoField, kappa: np.ndarray):
    """Scaled ``exp(kappa x) psi_0(x, i kappa)`` and its x-derivative."""
    kappa = np.asarray(kappa, dtype=float)
    y, dy = fld.at(1j * kappa)
    psi = 1 + y.real
    dpsi = -kappa[None, :] * psi + dy.real
    return psi, dpsi


def reconstruct_trace4(sd: ScatteringData, x, t: float = 0.0, background: Optional[MarchenkoField] = None,
                       h: Optional[float] = None) -> ReconstructionResult:
    """Darboux-dressed trace formula.

    The background ``q0`` and its eigenfunctions come from kernel solves of
    the bound-state-free data ``{R, none}`` at time ``t``; the bound states
    enter through ``C(t) = diag(c^2 exp(8 kappa^3 t))``.
    """
    x = np.asarray(x, dtype=float)
    if background is None:
        background = solve_field(sd, x, t, k=np.empty(0), drop_bound_states=True, h=h)
    q0 = background.q
    if not sd.bound_states:
        return ReconstructionResult(x, q0, "trace4", np.zeros_like(x), meta={"q0": q0})
    kap = sd.kappa
    psi, dpsi = bound_state_functions(background, kap)
    res = darboux_dress(x, q0, psi, dpsi, kap, sd.c2 * np.exp(8 * kap**3 * t),
                        gram=wronskian_gram(background, kap))
    res.meta["q0"] = q0
    return res


# ------------------------------------------------------ background q0


def compute_q0(sd: ScatteringData, x, t: float = 0.0, solutions: Optional[Sequence[MarchenkoSolution]] = None,
               kernel: Optional[ReflectionKernel] = None, fd_step: float = 1e-3) -> np.ndarray:
    """Bound-state-free potential from the regularized Fourier form.

    ``q0 = d2/dx2 int (xi - 1)/(2ik) R dk/pi + d/dx int R xi y0 dk/pi`` with
    ``xi = exp(i(8k^3 t + 2kx))``, evaluated on the Poisson-safe momentum
    lattice of the reflection kernel. The second derivative of the first
    term is taken under the integral when ``k R`` is negligible at the
    lattice edge, otherwise one derivative is a central difference.

    Parameters
    ----------
    solutions : sequence of MarchenkoSolution, optional
        Kernel solves of the bound-state-free symbol, one per ``x``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if kernel is None:
        kernel = ReflectionKernel(sd, t, sigma_min=min(2 * x.min() - 1.0, -40.0),
                                  window=max(200.0, 2 * float(np.ptp(x)) + 100.0))
    if kernel.zero:
        return np.zeros_like(x)
    if solutions is None:
        solutions = solve_field(sd, x, t, drop_bound_states=True).solutions
    k, R, dk = kernel.k_fine, kernel.R_fine, kernel.dk_fine
    disp = np.exp(8j * k**3 * t)
    absolute = abs(k[0] * R[0]) + abs(k[-1] * R[-1]) < 1e-10 * max(1.0, np.max(np.abs(k * R)))
    out = np.empty_like(x)
    for i, (xi, sol) in enumerate(zip(x, solutions)):
        xi_k = disp * np.exp(2j * k * xi)
        y0, dy0 = sol.y_at(k), sol.dy_at(k)
        second = dk * np.sum(R * xi_k * (2j * k * y0 + dy0)) / math.pi
        if absolute:
            first = dk * np.sum(2j * k * R * xi_k) / math.pi
        else:
            plus = dk * np.sum(R * disp * np.exp(2j * k * (xi + fd_step))) / math.pi
            minus = dk * np.sum(R * disp * np.exp(2j * k * (xi - fd_step))) / math.pi
            first = (plus - minus) / (2 * fd_step)
        out[i] = (first + second).real
    return out


def q0_representations(sd: ScatteringData, x) -> dict:
    """The three representations of the bound-state-free potential at ``t = 0``.

    Returns a mapping with keys ``real_part`` (trace2 of ``y0``),
    ``principal_value`` (trace3 without bound states) and ``regularized``
    (:func:`compute_q0`), plus ``kernel`` (``-2 d/dx B(0)``).
    """
    x = np.asarray(x, dtype=float)
    fld = solve_field(sd, x, 0.0, drop_bound_states=True)
    return {
        "real_part": reconstruct_trace2(fld).q,
        "principal_value": reconstruct_trace3(sd, fld, bound_states=False).q,
        "regularized": compute_q0(sd, x, 0.0, fld.solutions),
        "kernel": fld.q,
    }


# ----------------------------------------------------------- dispatcher


def reconstruct(sd: ScatteringData, x, methods: Sequence[str] = ("trace2",), alpha: float = 1.0,
                fld: Optional[MarchenkoField] = None) -> dict:
    """Run several trace formulas on one set of kernel solves."""
    if not methods:
        raise ParameterError("at least one reconstruction method is required")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ParameterError(f"unknown reconstruction method(s): {bad}")
    x = np.asarray(x, dtype=float)
    if fld is None and set(methods) - {"trace4"}:
        fld = solve_field(sd, x)
    out = {}
    for m in methods:
        if m == "trace1":
            out[m] = reconstruct_trace1(fld, alpha)
        elif m == "trace2":
            out[m] = reconstruct_trace2(fld)
        elif m == "trace3":
            out[m] = reconstruct_trace3(sd, fld)
        elif m == "dt":
            out[m] = dt_trace(sd, fld)
        else:
            out[m] = reconstruct_trace4(sd, x)
    return out


def cross_table(results: dict) -> dict:
    """Pairwise sup-differences ``{"a-b": value}`` between reconstructions."""
    names = sorted(results)
    return {f"{a}-{b}": results[a].sup_diff(results[b]) for i, a in enumerate(names) for b in names[i + 1:]}
