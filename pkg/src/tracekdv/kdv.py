"""KdV evolution ``q_t - 6 q q_x + q_xxx = 0`` by direct evaluation at each time.

Scattering data evolve trivially: ``R`` picks up ``exp(8 i k^3 t)`` inside
the Hankel symbol and the norming constants grow as ``exp(8 kappa^3 t)``.
The profile at time ``t`` is the bound-state-free background, from kernel
solves of ``{R exp(8ik^3 t), none}``, dressed with the evolved bound states.
There is no time stepping.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.special import airy

from .exceptions import ParameterError, TruncationWarning
from .forward import ScatteringData
from .hankel import assemble_operator, build_symbol, choose_quadrature, ReflectionKernel, solve_field
from .reconstruction import bound_state_functions, compute_q0, darboux_dress, wronskian_gram

__all__ = [
    "ConservedSet",
    "EvolvedProfile",
    "airy_decay_fit",
    "airy_tail",
    "conserved_check",
    "evolve_data",
    "kdv_solve",
    "linear_kdv",
    "log_moments",
    "peak_track",
    "positivity_sweep",
    "two_soliton",
]


def evolve_data(sd: ScatteringData, t: float) -> ScatteringData:
    """Norming constants at time ``t``; ``R`` and ``kappa`` are unchanged."""
    if t < 0:
        raise ParameterError("t must be non-negative")
    bs = [(k, c * math.exp(8 * k**3 * t)) for k, c in sd.bound_states]
    return ScatteringData(sd.side, sd.kgrid, sd.R, sd.T, bs)


@dataclass
class EvolvedProfile:
    """``q(x, t)`` on a fixed x-grid for several times.

    Attributes
    ----------
    x : ndarray, shape (Nx,)
    t : ndarray, shape (Nt,)
    q : ndarray, shape (Nt, Nx)
    q0 : ndarray, shape (Nt, Nx)
        Bound-state-free background.
    lambda_min : ndarray, shape (Nt, Nx) or None
        Smallest eigenvalue of ``I + H`` for the full symbol.
    """

    x: np.ndarray
    t: np.ndarray
    q: np.ndarray
    q0: np.ndarray
    lambda_min: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise ParameterError(f"time {t} not in profile")
        return self.q[i]


def kdv_solve(sd: ScatteringData, x, t, q0_method: str = "kernel", positivity: bool = False,
              h: Optional[float] = None) -> EvolvedProfile:
    """Evaluate the KdV solution with initial data ``sd`` at times ``t``.

    Parameters
    ----------
    sd : ScatteringData
        Right-side data of ``q(., 0)``.
    x : array_like
        Increasing evaluation points.
    t : float or sequence of float
        Non-negative times.
    q0_method : {"kernel", "regularized"}
        Background from ``-2 d/dx B(0)`` of the kernel solve, or from the
        regularized Fourier form of :func:`~tracekdv.reconstruction.compute_q0`.
    positivity : bool
        Also record ``lambda_min(I + H)`` for the full symbol at every point.

    Returns
    -------
    EvolvedProfile
    """
    x = np.asarray(x, dtype=float)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ParameterError("times must be non-negative")
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
        raise ParameterError("x must be a strictly increasing 1-d array")
    if q0_method not in ("kernel", "regularized"):
        raise ParameterError(f"unknown q0 method {q0_method!r}")
    Q, Q0, lam = [], [], []
    kap = sd.kappa
    for ti in ts:
        # the k-grid transform is not needed here, only B and y(i kappa)
        bg = solve_field(sd, x, ti, k=np.empty(0), drop_bound_states=True, h=h)
        q0 = bg.q if q0_method == "kernel" else compute_q0(sd, x, ti, bg.solutions)
        if kap.size:
            psi, dpsi = bound_state_functions(bg, kap)
            c2t = evolve_data(sd, ti).c2
            q = darboux_dress(x, q0, psi, dpsi, kap, c2t, gram=wronskian_gram(bg, kap)).q
        else:
            q = q0
        Q.append(q)
        Q0.append(q0)
        if positivity:
            lam.append(positivity_sweep(sd, x, [ti])[0])
    return EvolvedProfile(x, ts, np.array(Q), np.array(Q0), np.array(lam) if positivity else None,
                          meta={"q0_method": q0_method})


def positivity_sweep(sd: ScatteringData, x, t) -> np.ndarray:
    """``lambda_min(I + H(phi_{x,t}))`` on the product grid, shape (Nt, Nx)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((ts.size, x.size))
    for i, ti in enumerate(ts):
        kernel = ReflectionKernel(sd, ti, sigma_min=min(2 * x.min() - 1.0, -40.0),
                                  window=max(200.0, 2 * float(np.ptp(x)) + 100.0))
        for j, xi in enumerate(x):
            op = assemble_operator(build_symbol(sd, xi, ti), "kernel", kernel, choose_quadrature(kernel, xi))
            out[i, j] = op.lambda_min
    return out


# ------------------------------------------------------- conservation


def log_moments(sd: ScatteringData) -> tuple[float, float]:
    """``(1/pi) int L dk`` and ``(4/pi) int k^2 L dk`` with ``L = log(1 - |R|^2)^-1``.

    ``L`` is computed as ``-log|T|^2``. For generic data ``|T|^2 ~ k^2/beta^2``
    at the origin; the logarithmic singularity ``log(1 + beta^2/k^2)`` is
    subtracted and integrated exactly over ``[-K, K]``. Data with a
    zero-energy resonance (``T(0) != 0``) are not treated specially.
    """
    g = sd.kgrid
    k, K, dk = g.nodes, g.K, g.spacing
    T2 = np.abs(sd.T) ** 2
    if np.any(T2 <= 0):
        raise ParameterError("|T| must be positive on the grid")
    L = -np.log(T2)
    i0 = int(np.argmin(np.abs(k)))
    # model |T|^2 = k^2 / (k^2 + beta^2), matched at the node nearest 0
    b2 = k[i0] ** 2 * (1 / T2[i0] - 1)
    if b2 > 0:
        b = math.sqrt(b2)
        exact = 2 * K * math.log1p(b2 / K**2) + 4 * b * math.atan(K / b)
        m0 = dk * np.sum(L - np.log1p(b2 / k**2)) + exact
    else:
        m0 = dk * np.sum(L)
    m2 = dk * np.sum(k**2 * L)
    return float(m0 / math.pi), float(4 * m2 / math.pi)


@dataclass
class ConservedSet:
    """Both sides of the two trace identities at one time.

    ``m1 = int q + 4 sum kappa - (1/pi) int L`` and
    ``m2 = int q^2 - (16/3) sum kappa^3 - (4/pi) int k^2 L`` vanish for exact
    data. ``printed_m1``, ``printed_m2`` use the ``8/pi`` prefactors and
    ``int q + sum kappa`` as they are often quoted; they do not vanish and
    are kept for reference only.
    """

    t: float
    int_q: float
    int_q2: float
    sum_kappa: float
    sum_kappa3: float
    log0: float
    log2: float
    drift_q: float = 0.0
    drift_q2: float = 0.0

    @property
    def m1(self) -> float:
        return self.int_q + 4 * self.sum_kappa - self.log0

    @property
    def m2(self) -> float:
        return self.int_q2 - 16 / 3 * self.sum_kappa3 - self.log2

    @property
    def printed_m1(self) -> float:
        return 8 * self.log0 - (self.int_q + self.sum_kappa)

    @property
    def printed_m2(self) -> float:
        return 2 * self.log2 - (self.int_q2 - 16 / 3 * self.sum_kappa3)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("t", "int_q", "int_q2", "sum_kappa", "sum_kappa3", "log0", "log2",
                                           "drift_q", "drift_q2", "m1", "m2", "printed_m1", "printed_m2")}
        return {k: float(v) for k, v in d.items()}


def conserved_check(profile: EvolvedProfile, sd: ScatteringData, edge_tol: float = 1e-6) -> list[ConservedSet]:
    """Trace identities at every time of ``profile`` and drift from the first time.

    Integrals over x use Simpson's rule on the profile grid; a
    :class:`TruncationWarning` is issued when ``|q|`` at either end of the
    window exceeds ``edge_tol``.
    """
    x = profile.x
    kap = sd.kappa
    log0, log2 = log_moments(sd)
    out = []
    for ti, q in zip(profile.t, profile.q):
        edge = max(abs(q[0]), abs(q[-1]))
        if edge > edge_tol:
            warnings.warn(f"|q| = {edge:.3g} at the window edge at t = {ti}", TruncationWarning, stacklevel=2)
        out.append(ConservedSet(float(ti), float(simpson(q, x=x)), float(simpson(q**2, x=x)),
                                float(kap.sum()), float(np.sum(kap**3)), log0, log2))
    for c in out:
        c.drift_q = c.int_q - out[0].int_q
        c.drift_q2 = (c.int_q2 - out[0].int_q2) / max(abs(out[0].int_q2), 1e-300)
    return out


def peak_track(profile: EvolvedProfile) -> np.ndarray:
    """Location of ``min q`` at each time, refined by a parabola through three nodes."""
    x = profile.x
    out = []
    for q in profile.q:
        i = int(np.clip(np.argmin(q), 1, x.size - 2))
        a, b, c = q[i - 1], q[i], q[i + 1]
        den = a - 2 * b + c
        frac = 0.5 * (a - c) / den if den != 0 else 0.0
        out.append(x[i] + frac * (x[i + 1] - x[i - 1]) / 2)
    return np.array(out)


# ------------------------------------------------------------ oracles


def two_soliton(x, t):
    """Closed-form two-soliton with ``q(x, 0) = -6 sech^2 x``."""
    x = np.asarray(x, dtype=float)
    num = 3 + 4 * np.cosh(2 * x - 8 * t) + np.cosh(4 * x - 64 * t)
    den = 3 * np.cosh(x - 28 * t) + np.cosh(3 * x - 36 * t)
    return -12 * num / den**2


def linear_kdv(q0, x, t: float, period: Optional[float] = None):
    """Solve ``u_t + u_xxx = 0`` spectrally on a periodic box.

    ``q0`` is a callable; the box is ``period`` long (default ``20 * ptp(x)``)
    and centred on the window, sampled finely enough to resolve ``x``.
    """
    x = np.asarray(x, dtype=float)
    L = period or 20 * float(np.ptp(x))
    dx = min(0.05, float(np.min(np.diff(x))) if x.size > 1 else 0.05)
    n = int(2 ** math.ceil(math.log2(L / dx)))
    c = 0.5 * (x[0] + x[-1])
    grid = c - L / 2 + L * np.arange(n) / n
    p = 2 * math.pi * np.fft.fftfreq(n, d=L / n)
    coef = np.fft.fft(q0(grid)) * np.exp(1j * p**3 * t) / n
    # trigonometric interpolation at x; the Nyquist mode is dropped
    keep = np.abs(p) < np.max(np.abs(p))
    phase = np.exp(1j * np.outer(x - grid[0], p[keep]))
    return (phase @ coef[keep]).real


# --------------------------------------------------- dispersive tail


def _phase(lam):
    return lam**3 / 3 - lam


def _saddle_half(omega: float, order: int = 240) -> complex:
    """``int exp(i Omega S)`` from ``-i`` through the saddle ``1`` to ``inf e^{i pi/4}``."""
    e = np.exp(1j * math.pi / 4)
    g, w = np.polynomial.legendre.leggauss(order)
    total = 0j
    # segment -i -> 1 is 1 - rho e^{i pi/4}, rho in [0, sqrt 2]; the ray is 1 + rho e^{i pi/4}
    for sign, rho_max in ((-1, math.sqrt(2)), (1, math.inf)):
        cap = 45.0 / omega
        # |integrand| <= exp(-Omega (rho^2 + sign * ...)); solve rho^2 + rho^3/(3 sqrt 2) = 45/Omega on the ray
        r = math.sqrt(cap)
        if sign > 0:
            for _ in range(50):
                r = math.sqrt(cap / (1 + r / (3 * math.sqrt(2))))
        top = min(rho_max, r)
        rho = (g + 1) * top / 2
        lam = 1 + sign * rho * e
        total += np.sum(w * top / 2 * np.exp(1j * omega * _phase(lam))) * e
    return total


def airy_tail(s: float, t: float, route: str = "saddle", growth: float = 5.0) -> complex:
    """``I0(s, t) = int exp(i(8k^3 t - 2ks)) dk`` along a contour in the upper half plane.

    Parameters
    ----------
    s, t : float
        Positive distance and time.
    route : {"saddle", "contour", "closed"}
        ``saddle`` rescales ``k = a lambda`` with ``a = (s/12t)^(1/2)`` so that
        ``I0 = a int exp(i Omega (lambda^3/3 - lambda)) d lambda``,
        ``Omega = 2 a s``, and integrates through the saddles ``lambda = +-1``
        along steepest-descent directions. ``contour`` is the trapezoidal rule on
        ``Im k = eps`` with ``eps = min(1, growth / 2s)``, truncated where the
        Gaussian decay reaches ``1e-17``; its cost grows like ``s^(3/2)``.
        ``closed`` is ``2 pi (24t)^(-1/3) Ai(-2s (24t)^(-1/3))``.
    growth : float
        Allowed ``log`` of the amplification ``exp(2 s eps)`` on the shifted line.
    """
    if not (s > 0 and t > 0):
        raise ParameterError("airy_tail needs s > 0 and t > 0")
    if route == "closed":
        c = (24 * t) ** (-1 / 3)
        return complex(2 * math.pi * c * airy(-2 * s * c)[0])
    if route == "saddle":
        a = math.sqrt(s / (12 * t))
        return complex(2 * a * _saddle_half(2 * a * s).real)
    if route != "contour":
        raise ParameterError(f"unknown route {route!r}")
    eps = min(1.0, growth / (2 * s))
    u_max = math.sqrt((2 * s * eps + 8 * t * eps**3 + 40.0) / (24 * t * eps))
    fmax = 24 * t * u_max**2 + 2 * s
    n = int(math.ceil(2 * u_max * fmax / 1.5)) | 1
    if n > 5e8:
        raise ParameterError("contour route too expensive at this s; use the saddle route")
    h = 2 * u_max / (n - 1)
    total = 0j
    for start in range(0, n, 1 << 22):
        u = -u_max + h * np.arange(start, min(n, start + (1 << 22)))
        k = u + 1j * eps
        total += np.sum(np.exp(1j * (8 * t * k**3 - 2 * k * s)))
    return complex(total * h)


def airy_decay_fit(t: float = 1.0, s_min: float = 1e2, s_max: float = 1e4, n: int = 40):
    """Log-log slope of ``|I0(s, t)|`` at its crests in ``[s_min, s_max]``.

    ``I0`` oscillates with phase ``pi/4 - 2 Omega/3``; crests are taken at
    ``Omega_m = (3/2)(m + 1/4) pi`` for ``n`` integers ``m`` spread
    logarithmically over the range.

    Returns
    -------
    slope, intercept : float
    s, amplitude : ndarray
    """
    om = lambda s: s**1.5 / math.sqrt(3 * t)  # noqa: E731
    m_lo, m_hi = om(s_min) / (1.5 * math.pi) - 0.25, om(s_max) / (1.5 * math.pi) - 0.25
    m = np.unique(np.round(np.geomspace(max(m_lo, 1.0), m_hi, n)))
    omega = 1.5 * (m + 0.25) * math.pi
    s = (omega * math.sqrt(3 * t)) ** (2 / 3)
    amp = np.array([abs(airy_tail(si, t)) for si in s])
    slope, icpt = np.polyfit(np.log(s), np.log(amp), 1)
    return float(slope), float(icpt), s, amp
