"""Hardy-space machinery on the uniform momentum grid.

A sampled function ``f`` is split as ``f = r + T`` where ``T`` is a rational
tail model ``sum_n c_n (k + i beta)^-n`` fitted on the outer part of the
grid. ``T`` lies in H^2_+ and is handled in closed form. The remainder
``r`` decays fast enough that its Cauchy integral can be computed by the
odd/even (alternating-node) quadrature rule, which is spectrally accurate
on a uniform grid. This removes the window-truncation error a plain
FFT cut suffers for functions decaying like ``1/k``.

Transform convention: ``fhat(s) = (1/2 pi) int f(k) exp(-i k s) dk``, so
H^2_+ is the set of fields whose dual representation lives on ``s >= 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np

from .exceptions import ConvergenceError
from .grids import KGrid

TAIL_ORDER = 10
TAIL_SHIFT = 1.0
TAIL_FRACTION = 0.875
# fields already negligible at the grid edge skip the tail model
EDGE_TOL = 1e-12


@dataclass(frozen=True)
class _TailModel:
    basis: np.ndarray  # (N, p)
    fit: np.ndarray  # (p, N) least-squares map samples -> coefficients
    order: int
    shift: float


@lru_cache(maxsize=8)
def _tail_model(K: float, N: int, order: int = TAIL_ORDER, shift: float = TAIL_SHIFT) -> _TailModel:
    k = KGrid(K, N).nodes
    basis = np.column_stack([(k + 1j * shift) ** -n for n in range(1, order + 1)])
    sel = np.abs(k) >= TAIL_FRACTION * K
    fit = np.zeros((order, N), dtype=complex)
    fit[:, sel] = np.linalg.pinv(basis[sel])
    basis.flags.writeable = False
    fit.flags.writeable = False
    return _TailModel(basis, fit, order, shift)


@lru_cache(maxsize=4)
def _hilbert_matrix(K: float, N: int) -> np.ndarray:
    """Odd/even rule for ``PV int f(s) / (s - k_j) ds`` on the grid."""
    grid = KGrid(K, N)
    k = grid.nodes
    idx = np.arange(N)
    odd = (idx[:, None] - idx[None, :]) % 2 == 1
    diff = k[None, :] - k[:, None]
    diff[~odd] = 1.0
    H = np.where(odd, 2.0 * grid.spacing / diff, 0.0)
    H.flags.writeable = False
    return H


@lru_cache(maxsize=4)
def minus_projector(K: float, N: int) -> np.ndarray:
    """Dense matrix of the discrete Riesz projection onto H^2_-."""
    tail = _tail_model(K, N)
    H = _hilbert_matrix(K, N)
    P_r = 0.5 * np.eye(N) - H / (2j * np.pi)
    P = P_r - P_r @ (tail.basis @ tail.fit)
    P.flags.writeable = False
    return P


@dataclass(frozen=True)
class SpectralField:
    """Complex samples of a function of momentum on a :class:`KGrid`.

    ``member`` records known Hardy-space membership: ``"+"``, ``"-"`` or
    ``None``.
    """

    kgrid: KGrid
    values: np.ndarray
    member: Optional[str] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape[-1] != self.kgrid.N:
            raise ValueError(f"expected {self.kgrid.N} samples, got {v.shape[-1]}")
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> np.ndarray:
        return self.kgrid.nodes

    @cached_property
    def tail_coefficients(self) -> np.ndarray:
        v = self.values
        edge = max(abs(v[..., 0]).max(), abs(v[..., -1]).max())
        if edge <= EDGE_TOL * max(np.abs(v).max(), np.finfo(float).tiny):
            return np.zeros(TAIL_ORDER, dtype=complex)
        return _tail_model(self.kgrid.K, self.kgrid.N).fit @ v

    @cached_property
    def remainder(self) -> np.ndarray:
        tail = _tail_model(self.kgrid.K, self.kgrid.N)
        return self.values - tail.basis @ self.tail_coefficients

    def tail(self, z) -> np.ndarray:
        """Evaluate the fitted rational tail at arbitrary complex ``z``."""
        z = np.asarray(z, dtype=complex)
        c = self.tail_coefficients
        out = np.zeros(z.shape, dtype=complex)
        w = 1.0 / (z + 1j * TAIL_SHIFT)
        p = np.ones_like(out)
        for cn in c:
            p = p * w
            out = out + cn * p
        return out

    def inner(self, other: "SpectralField") -> complex:
        """Discrete ``<f, g> = int f conj(g) dk``."""
        return complex(self.kgrid.spacing * np.sum(self.values * np.conj(other.values)))

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def __add__(self, other):
        return SpectralField(self.kgrid, self.values + _vals(other))

    def __sub__(self, other):
        return SpectralField(self.kgrid, self.values - _vals(other))

    def __mul__(self, other):
        return SpectralField(self.kgrid, self.values * _vals(other))

    __rmul__ = __mul__

    def reflect(self) -> "SpectralField":
        """``(J f)(k) = f(-k)``; exact on the symmetric grid."""
        flip = {"+": "-", "-": "+"}.get(self.member)
        return SpectralField(self.kgrid, self.values[..., ::-1], flip)

    def conj(self) -> "SpectralField":
        return SpectralField(self.kgrid, np.conj(self.values))


def _vals(obj):
    return obj.values if isinstance(obj, SpectralField) else obj


def as_field(f, kgrid: Optional[KGrid] = None) -> SpectralField:
    if isinstance(f, SpectralField):
        return f
    if kgrid is None:
        raise TypeError("a KGrid is needed to wrap raw samples")
    if callable(f):
        f = f(kgrid.nodes)
    return SpectralField(kgrid, np.broadcast_to(np.asarray(f, dtype=complex), (kgrid.N,)).copy())


@dataclass(frozen=True)
class DualField:
    """Dual (conjugate-variable) representation of a :class:`SpectralField`.

    ``remainder_hat`` is the discrete transform of the fast-decaying part on
    the s-grid ``s_m = m * pi / K``, ``m = -N/2 .. N/2 - 1``; the rational
    tail is kept as coefficients and transformed in closed form.
    """

    kgrid: KGrid
    s: np.ndarray
    remainder_hat: np.ndarray
    tail_coefficients: np.ndarray

    @property
    def spacing(self) -> float:
        return math.pi / self.kgrid.K

    def tail_hat(self, s=None) -> np.ndarray:
        s = self.s if s is None else np.asarray(s, dtype=float)
        out = np.zeros(s.shape, dtype=complex)
        pos = s > 0
        sp = s[pos]
        for n, cn in enumerate(self.tail_coefficients, start=1):
            out[pos] += cn * (-1j) * (-1j * sp) ** (n - 1) * np.exp(-TAIL_SHIFT * sp) / math.factorial(n - 1)
        out[s == 0] += -0.5j * self.tail_coefficients[0]
        return out

    @property
    def values(self) -> np.ndarray:
        """``fhat`` sampled on the s-grid."""
        return self.remainder_hat + self.tail_hat()

    def inverse(self) -> SpectralField:
        N = self.kgrid.N
        m = np.arange(-N // 2, N // 2)
        g = self.remainder_hat * ((-1.0) ** m) * np.exp(1j * np.pi * m / N)
        # sum_m g_m exp(2 pi i j m / N) with m taken mod N
        r = N * np.fft.ifft(np.fft.ifftshift(g)) * self.spacing
        tail = _tail_model(self.kgrid.K, N).basis @ self.tail_coefficients
        return SpectralField(self.kgrid, r + tail)


def fourier_pair(f) -> DualField:
    """Dual representation ``fhat(s) = (1/2 pi) int f(k) exp(-iks) dk``."""
    f = as_field(f)
    grid = f.kgrid
    N = grid.N
    m = np.arange(-N // 2, N // 2)
    s = m * (math.pi / grid.K)
    # exp(-i k_j s_m) = (-1)^m exp(-i pi m / N) exp(-2 pi i j m / N)
    raw = np.fft.fftshift(np.fft.fft(f.remainder))
    rhat = grid.spacing / (2 * math.pi) * raw * ((-1.0) ** m) * np.exp(-1j * np.pi * m / N)
    return DualField(grid, s, rhat, f.tail_coefficients.copy())


def riesz_project(f, sign: str = "+") -> SpectralField:
    """Riesz projection onto H^2_+ (``sign="+"``) or H^2_- (``sign="-"``).

    ``riesz_project(f, "+") + riesz_project(f, "-")`` reproduces ``f``
    exactly on the grid.
    """
    f = as_field(f)
    H = _hilbert_matrix(f.kgrid.K, f.kgrid.N)
    r = f.remainder
    minus = 0.5 * r - (H @ r) / (2j * math.pi)
    if sign == "-":
        return SpectralField(f.kgrid, minus, "-")
    if sign == "+":
        return SpectralField(f.kgrid, f.values - minus, "+")
    raise ValueError("sign must be '+' or '-'")


def regularized_project(phi) -> SpectralField:
    """``(k + i) * P_-[phi / (k + i)]``, defined for bounded ``phi``.

    Differs from ``P_- phi`` (when the latter exists) by a constant, so both
    induce the same Hankel operator.
    """
    phi = as_field(phi)
    k = phi.k
    inner = riesz_project(SpectralField(phi.kgrid, phi.values / (k + 1j)), "-")
    return SpectralField(phi.kgrid, (k + 1j) * inner.values)


def cauchy_eval(f, z) -> np.ndarray:
    """``(P_+ f)(z) = (1/2 pi i) int f(k) / (k - z) dk`` for ``Im z > 0``.

    For ``f`` in H^2_+ this is the analytic continuation of ``f`` into the
    upper half plane.
    """
    f = as_field(f)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.imag <= 0):
        raise ValueError("evaluation points must lie in the upper half plane")
    k = f.k
    kern = f.kgrid.spacing / (2j * math.pi) / (k[None, :] - z[:, None])
    c = f.tail_coefficients
    if not c.any():
        return kern @ f.values
    tail = _tail_model(f.kgrid.K, f.kgrid.N)
    Bz = np.column_stack([(z + 1j * TAIL_SHIFT) ** -n for n in range(1, tail.order + 1)])
    # grouped so that only the small |k| > K part of the basis meets c
    return kern @ f.values + (Bz - kern @ tail.basis) @ c


@dataclass(frozen=True)
class PVResult:
    value: complex
    residual: float
    truncations: np.ndarray
    partial_sums: np.ndarray

    def __complex__(self):
        return complex(self.value)


def _symmetric_partial_sums(values: np.ndarray, dk: float) -> np.ndarray:
    """``int_{-a_j}^{a_j}`` by the midpoint rule, ``a_j = j * dk``, j = 1..N/2."""
    N = values.shape[-1]
    half = N // 2
    pair = values[..., half:] + values[..., :half][..., ::-1]
    return dk * np.cumsum(pair, axis=-1)


def pv_integral(f, kgrid: Optional[KGrid] = None, tol: Optional[float] = None,
                fraction: float = 0.875, order: int = 4) -> PVResult:
    """Principal-value integral ``lim_a int_{-a}^{a} f`` from grid samples.

    Symmetric partial integrals ``I(a)`` on ``a in [fraction*K, K]`` are
    extrapolated to ``a -> inf`` by a least-squares fit in odd powers of
    ``1/a`` (the even powers cancel under symmetric truncation). The
    residual is the change of the extrapolated value when the highest power
    is dropped.
    """
    f = as_field(f, kgrid)
    grid = f.kgrid
    dk = grid.spacing
    I = _symmetric_partial_sums(f.values, dk)
    a = dk * np.arange(1, grid.N // 2 + 1)
    sel = a >= fraction * grid.K - 1e-12

    def extrapolate(m):
        A = np.column_stack([np.ones(sel.sum())] + [a[sel] ** -(2 * j - 1) for j in range(1, m + 1)])
        coef, *_ = np.linalg.lstsq(A, I[sel], rcond=None)
        return coef[0]

    hi = extrapolate(order)
    lo = extrapolate(order - 1)
    residual = float(abs(hi - lo))
    if tol is not None and residual > tol * max(1.0, abs(hi)):
        raise ConvergenceError(f"principal-value extrapolation residual {residual:.3g} exceeds {tol:.3g}")
    return PVResult(complex(hi), residual, a, I)


def pv_lemma_check(f, kgrid: Optional[KGrid] = None) -> float:
    """``|PV int P_- f - (1/2) int f|`` for ``<k> f`` square integrable."""
    f = as_field(f, kgrid)
    lhs = pv_integral(riesz_project(f, "-")).value
    rhs = 0.5 * pv_integral(f).value
    return float(abs(lhs - rhs))
