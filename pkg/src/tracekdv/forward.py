"""Forward scattering for the 1-d Schrodinger operator ``-d^2/dx^2 + q``.

Jost solutions are carried in Faddeev form ``psi_pm(x, k) = exp(+-ikx)
(1 + y_pm(k, x))`` and obtained by integrating

    y_+'' + 2ik y_+' = q (1 + y_+)      from x_max with y_+ = y_+' = 0,
    y_-'' - 2ik y_-' = q (1 + y_-)      from x_min with y_- = y_-' = 0,

which is stable for real ``k`` and for ``k = i kappa`` in the direction of
integration. All Wronskians are written without the exponential factors.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson, solve_ivp, trapezoid
from scipy.optimize import brentq

from .exceptions import (
    ConvergenceError,
    DegenerateSpectrumError,
    EnlargeMarginError,
    ParameterError,
    ResonanceWarning,
)
from .grids import KGrid, Potential, XGrid, sample_potential

RTOL = 1e-10
ATOL = 1e-12
CHUNK = 256


def _solve_chunk(q, k, x_from, x_to, t_eval, side, rtol, atol):
    n = k.size
    s = 1.0 if side == "+" else -1.0

    def rhs(x, z):
        y, dy = z[:n], z[n:]
        return np.concatenate([dy, q(x) * (1.0 + y) - s * 2j * k * dy])

    # zero initial data makes the first error estimate 0/0
    with np.errstate(invalid="ignore", divide="ignore"):
        sol = solve_ivp(rhs, (x_from, x_to), np.zeros(2 * n, dtype=complex), method="DOP853",
                        t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise ConvergenceError(f"Jost integration failed: {sol.message}")
    return sol.y[:n].T, sol.y[n:].T


def _integrate(q, k, x_from, x_to, t_eval, side, rtol=RTOL, atol=ATOL, threads=1):
    """Integrate the Faddeev ODE for every entry of ``k``.

    ``k`` is split in fixed-size chunks so the result does not depend on
    the number of worker threads.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    chunks = [k[i:i + CHUNK] for i in range(0, k.size, CHUNK)]
    job = lambda kc: _solve_chunk(q, kc, x_from, x_to, t_eval, side, rtol, atol)  # noqa: E731
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    y = np.concatenate([p[0] for p in parts], axis=1)
    dy = np.concatenate([p[1] for p in parts], axis=1)
    return y, dy


@dataclass(frozen=True)
class JostField:
    """Faddeev functions ``y_pm(k, x)`` and ``d/dx y_pm`` on ``x`` by ``k``.

    Attributes
    ----------
    side : {"+", "-"}
    x : ndarray, shape (Nx,)
    k : ndarray, shape (Nk,), complex
    y, dy : ndarray, shape (Nx, Nk)
    """

    side: str
    x: np.ndarray
    k: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    potential: Optional[Potential] = field(default=None, repr=False, compare=False)

    def psi(self) -> np.ndarray:
        s = 1.0 if self.side == "+" else -1.0
        return np.exp(s * 1j * np.outer(self.x, self.k)) * (1.0 + self.y)

    def at(self, k):
        """Recompute the field at other momenta (possibly complex)."""
        if self.potential is None:
            raise ParameterError("field was built without a potential")
        f = compute_jost(self.potential, self.side, k)
        return f.y, f.dy

    def asymptotic_residual(self) -> np.ndarray:
        """``max_x |y - (i/2k) Q(x)|`` per momentum."""
        Q = self.potential.Q_plus if self.side == "+" else self.potential.Q_minus
        lead = 0.5j * Q[:, None] / self.k[None, :]
        return np.max(np.abs(self.y - lead), axis=0)


def _as_k(kgrid) -> np.ndarray:
    if isinstance(kgrid, KGrid):
        return kgrid.nodes.astype(complex)
    return np.atleast_1d(np.asarray(kgrid, dtype=complex))


def compute_jost(p: Potential, side: str, kgrid, xgrid: Optional[XGrid] = None,
                 rtol: float = RTOL, atol: float = ATOL, threads: int = 1) -> JostField:
    """Right (``side="+"``) or left (``side="-"``) Faddeev function.

    Parameters
    ----------
    p : Potential
        Sampled potential; its analytic spec is used between nodes.
    side : {"+", "-"}
    kgrid : KGrid or array_like
        Momenta, real or in the closed upper half plane.
    xgrid : XGrid, optional
        Output grid, defaults to the potential's grid.
    """
    if side not in ("+", "-"):
        raise ParameterError("side must be '+' or '-'")
    k = _as_k(kgrid)
    if np.any(k.imag < 0):
        raise ParameterError("momenta must lie in the closed upper half plane")
    if np.any(k == 0):
        raise ParameterError("k = 0 is excluded")
    xgrid = p.grid if xgrid is None else xgrid
    x = xgrid.nodes
    lo, hi = min(x[0], p.grid.x_min), max(x[-1], p.grid.x_max)
    if side == "+":
        y, dy = _integrate(p.spec, k, hi, x[0], x[::-1], side, rtol, atol, threads)
        y, dy = y[::-1], dy[::-1]
    else:
        y, dy = _integrate(p.spec, k, lo, x[-1], x, side, rtol, atol, threads)
    return JostField(side, x, k, y, dy, p)


def _matching_index(p: Potential, x: np.ndarray) -> int:
    w = np.abs(p.values)
    xc = 0.5 * (x[0] + x[-1]) if not w.any() else float(np.sum(p.x * w) / np.sum(w))
    return int(np.argmin(np.abs(x - xc)))


def _wronskian(yl, dyl, yr, dyr, k):
    """``W[psi_-, psi_+]`` with the exponentials divided out."""
    ik = 1j * k
    return (1 + yl) * (ik * (1 + yr) + dyr) + (ik * (1 + yl) - dyl) * (1 + yr)


@dataclass(frozen=True)
class ScatteringData:
    """Reflection/transmission samples and discrete spectrum for one side.

    ``bound_states`` holds ``(kappa_j, c_j^2)`` with kappa decreasing.
    """

    side: str
    kgrid: KGrid
    R: np.ndarray
    T: np.ndarray
    bound_states: tuple = ()

    def __post_init__(self):
        bs = tuple(sorted(((float(a), float(b)) for a, b in self.bound_states), reverse=True))
        object.__setattr__(self, "bound_states", bs)
        object.__setattr__(self, "R", np.asarray(self.R, dtype=complex))
        object.__setattr__(self, "T", np.asarray(self.T, dtype=complex))

    @property
    def k(self) -> np.ndarray:
        return self.kgrid.nodes

    @property
    def kappa(self) -> np.ndarray:
        return np.array([b[0] for b in self.bound_states])

    @property
    def c2(self) -> np.ndarray:
        return np.array([b[1] for b in self.bound_states])

    def unitarity_residual(self) -> float:
        return float(np.max(np.abs(np.abs(self.T) ** 2 + np.abs(self.R) ** 2 - 1.0)))

    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.R[::-1] - np.conj(self.R))))

    def translated(self, a: float) -> "ScatteringData":
        """Data of ``q(x - a)`` (right side)."""
        R = self.R * np.exp(-2j * self.k * a)
        bs = [(kap, c2 * np.exp(2 * kap * a)) for kap, c2 in self.bound_states]
        return ScatteringData(self.side, self.kgrid, R, self.T, bs)

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "K": self.kgrid.K,
            "N": self.kgrid.N,
            "R_real": self.R.real.tolist(),
            "R_imag": self.R.imag.tolist(),
            "T_real": self.T.real.tolist(),
            "T_imag": self.T.imag.tolist(),
            "bound_states": [list(b) for b in self.bound_states],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScatteringData":
        g = KGrid(d["K"], d["N"])
        R = np.asarray(d["R_real"]) + 1j * np.asarray(d["R_imag"])
        T = np.asarray(d.get("T_real", np.ones(g.N))) + 1j * np.asarray(d.get("T_imag", np.zeros(g.N)))
        return cls(d.get("side", "+"), g, R, T, tuple(tuple(b) for b in d.get("bound_states", [])))

    @classmethod
    def reflectionless(cls, kgrid: KGrid, bound_states) -> "ScatteringData":
        k = kgrid.nodes
        T = np.ones_like(k, dtype=complex)
        for kap, _ in bound_states:
            T = T * (k + 1j * kap) / (k - 1j * kap)
        return cls("+", kgrid, np.zeros_like(T), T, tuple(bound_states))


def compute_TR(p: Potential, kgrid: KGrid, xgrid: Optional[XGrid] = None, n_avg: int = 5,
               with_bound_states: bool = True, threads: int = 1,
               jost: Optional[tuple] = None) -> tuple[ScatteringData, ScatteringData]:
    """Right and left scattering data of ``p``.

    ``T = 2ik / W[psi_-, psi_+]``, ``R_+ = -W[psi_-, conj psi_+] / W`` and
    ``R_- = W[psi_+, conj psi_-] / W``, each averaged over ``n_avg`` nodes
    around the matching point.
    """
    if jost is None:
        jp = compute_jost(p, "+", kgrid, xgrid, threads=threads)
        jm = compute_jost(p, "-", kgrid, xgrid, threads=threads)
    else:
        jp, jm = jost
    k = kgrid.nodes
    x = jp.x
    i0 = _matching_index(p, x)
    idx = np.clip(np.arange(i0 - n_avg // 2, i0 - n_avg // 2 + n_avg), 0, x.size - 1)
    yl, dyl, yr, dyr = jm.y[idx], jm.dy[idx], jp.y[idx], jp.dy[idx]
    W = _wronskian(yl, dyl, yr, dyr, k)
    xs = x[idx][:, None]
    Wp = np.exp(-2j * k * xs) * ((1 + yl) * np.conj(dyr) - dyl * (1 + np.conj(yr)))
    Wm = np.exp(2j * k * xs) * ((1 + yr) * np.conj(dyl) - dyr * (1 + np.conj(yl)))
    Wbar = W.mean(axis=0)
    if np.min(np.abs(Wbar / (2 * k))) < 1e-8:
        warnings.warn("Wronskian nearly vanishes on the real axis", ResonanceWarning, stacklevel=2)
    T = 2j * k / Wbar
    Rp = -(Wp / W).mean(axis=0)
    Rm = (Wm / W).mean(axis=0)
    bs = tuple(find_bound_states(p)) if with_bound_states else ()
    return ScatteringData("+", kgrid, Rp, T, bs), ScatteringData("-", kgrid, Rm, T, ())


def reflection_via_integral(p: Potential, T: np.ndarray, y_minus: JostField) -> np.ndarray:
    """``R_+(k) = T(k)/(2ik) int exp(-2ikx) q(x) (1 + y_-(k, x)) dx``."""
    k = y_minus.k
    x = y_minus.x
    q = p.spec(x)
    integrand = np.exp(-2j * np.outer(x, k)) * q[:, None] * (1 + y_minus.y)
    return T / (2j * k) * trapezoid(integrand, x=x, axis=0)


def _bound_wronskian(p: Potential, kappa, x_c: float) -> np.ndarray:
    k = 1j * np.atleast_1d(np.asarray(kappa, dtype=float))
    t = np.array([x_c])
    yr, dyr = _integrate(p.spec, k, p.grid.x_max, x_c, t, "+")
    yl, dyl = _integrate(p.spec, k, p.grid.x_min, x_c, t, "-")
    return _wronskian(yl[0], dyl[0], yr[0], dyr[0], k).real


def find_bound_states(p: Potential, xgrid: Optional[XGrid] = None, margin: float = 0.5,
                      n_scan: int = 400, xtol: float = 1e-12) -> list[tuple[float, float]]:
    """Eigenvalues ``-kappa_j^2`` and right norming constants ``c_j^2``.

    Roots of ``W(i kappa)`` are bracketed on a uniform scan of
    ``(0, kappa_max]`` and refined with Brent's method. The norm of
    ``psi_+(., i kappa)`` is assembled from ``psi_+`` right of the matching
    point and the proportional ``psi_-`` left of it, with exact exponential
    tails beyond the window.
    """
    if p.is_zero:
        return []
    kappa_max = float(np.sqrt(max(-np.min(p.values), 0.0))) + margin
    x = p.x if xgrid is None else xgrid.nodes
    i0 = _matching_index(p, x)
    x_c = float(x[i0])
    kap = np.linspace(kappa_max / n_scan, kappa_max, n_scan)
    W = _bound_wronskian(p, kap, x_c)
    scale = np.max(np.abs(W))
    if abs(W[-1]) < 1e-8 * scale:
        raise EnlargeMarginError(f"Wronskian vanishes at kappa_max = {kappa_max:.6g}")
    # a touching zero without a sign change signals a double root
    a = np.abs(W)
    dips = np.where((a[1:-1] < a[:-2]) & (a[1:-1] < a[2:]) & (a[1:-1] < 1e-8 * scale))[0] + 1
    changes = np.where(np.sign(W[:-1]) * np.sign(W[1:]) < 0)[0]
    if any(not np.any(np.abs(changes - d) <= 1) for d in dips):
        raise DegenerateSpectrumError("Wronskian touches zero without changing sign")
    roots = []
    for i in changes:
        roots.append(brentq(lambda s: _bound_wronskian(p, s, x_c)[0], kap[i], kap[i + 1],
                            xtol=xtol, rtol=4 * np.finfo(float).eps))
    if np.any(np.diff(sorted(roots)) < 1e-8):
        raise DegenerateSpectrumError("bound states closer than 1e-8")
    return [(kj, _norming_constant(p, kj, i0, x)) for kj in sorted(roots, reverse=True)]


def _norming_constant(p: Potential, kappa: float, i0: int, x: np.ndarray) -> float:
    k = np.array([1j * kappa])
    yr, _ = _integrate(p.spec, k, p.grid.x_max, x[i0], x[i0:][::-1], "+")
    yl, _ = _integrate(p.spec, k, p.grid.x_min, x[i0], x[: i0 + 1], "-")
    right = np.exp(-kappa * x[i0:]) * (1 + yr[::-1, 0].real)
    left = np.exp(kappa * x[: i0 + 1]) * (1 + yl[:, 0].real)
    lam = right[0] / left[-1]
    left = lam * left
    norm2 = (simpson(right**2, x=x[i0:]) + simpson(left**2, x=x[: i0 + 1])
             + (right[-1] ** 2 + left[0] ** 2) / (2 * kappa))
    return float(1.0 / norm2)


def scattering_data(p: Potential, kgrid: KGrid, threads: int = 1) -> ScatteringData:
    """Right scattering data with bound states (convenience wrapper)."""
    return compute_TR(p, kgrid, threads=threads)[0]


def forward(spec, kgrid: KGrid, xgrid: XGrid, threads: int = 1) -> ScatteringData:
    return scattering_data(sample_potential(spec, xgrid), kgrid, threads=threads)
