"""Hankel symbols, the two discretizations of ``I + H(phi)`` and the
Marchenko solves for ``y`` and ``d/dx y``.

Spectral representation
    Dense matrix of ``f -> J P_-(phi f)`` on the momentum grid; the pole
    part of the symbol is applied exactly as the rank-one map
    ``f -> i a f(i kappa) / (k + i kappa)``.

Kernel representation
    Nystrom discretization of the equivalent half-line equation

        B(u) + F(2x + u) + int_0^inf B(u') F(2x + u + u') du' = 0,
        F(s) = sum_n c_n^2(t) exp(-kappa_n s)
               + (1/2 pi) int R(k) exp(i(8 k^3 t + k s)) dk,

    with ``y(k) = int_0^inf B(u) exp(iku) du``. Beyond the point ``S``
    where the reflection part of ``F`` is negligible, ``B`` is an exact
    combination of ``exp(-kappa_n u)``; those coefficients are carried as
    extra unknowns, which keeps the system well conditioned for any size
    of ``c_n^2 exp(-2 kappa_n x)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy.fft import ifft, next_fast_len
from scipy.interpolate import CubicSpline, make_interp_spline
from scipy.linalg import cho_factor, cho_solve, eigh, eigvalsh, lu_factor, lu_solve

from .exceptions import ParameterError, PositivityError, TruncationWarning
from .forward import ScatteringData
from .grids import KGrid
from .hardy import SpectralField, _tail_model, as_field, cauchy_eval, minus_projector, riesz_project

MAX_SPECTRAL_N = 4096
GL_ORDER = 10
# bare solves switch to the plain kernel once the pole amplitude exceeds this
SPLIT_MAX = 1e6


# ---------------------------------------------------------------- symbol


@dataclass(frozen=True)
class HankelSymbol:
    """``phi(k) = sum_n -i a_n / (k - i kappa_n) + R(k) exp(i(8k^3 t + 2kx))``.

    ``a_n = c_n^2 exp(8 kappa_n^3 t) exp(-2 kappa_n x)``.
    """

    data: ScatteringData
    x: float
    t: float = 0.0

    @property
    def kgrid(self) -> KGrid:
        return self.data.kgrid

    @property
    def k(self) -> np.ndarray:
        return self.data.k

    @cached_property
    def kappa(self) -> np.ndarray:
        return self.data.kappa

    @cached_property
    def amplitudes(self) -> np.ndarray:
        kap = self.kappa
        if kap.size == 0:
            return kap
        return self.data.c2 * np.exp(8 * kap**3 * self.t - 2 * kap * self.x)

    @cached_property
    def phase(self) -> np.ndarray:
        k = self.k
        return np.exp(1j * (8 * k**3 * self.t + 2 * k * self.x))

    @cached_property
    def reflection_part(self) -> np.ndarray:
        return self.data.R * self.phase

    @cached_property
    def values(self) -> np.ndarray:
        k = self.k
        out = self.reflection_part.copy()
        for a, kap in zip(self.amplitudes, self.kappa):
            out += -1j * a / (k - 1j * kap)
        return out

    def derivative(self) -> "SymbolDerivative":
        """``d/dx phi``: reflection part times ``2ik``, amplitudes times ``-2 kappa``."""
        return SymbolDerivative(self)

    def symmetry_residual(self) -> float:
        v = self.values
        return float(np.max(np.abs(v[::-1] - np.conj(v))))

    def field(self) -> SpectralField:
        return SpectralField(self.kgrid, self.values)


@dataclass(frozen=True)
class SymbolDerivative:
    base: HankelSymbol

    @property
    def kgrid(self):
        return self.base.kgrid

    @property
    def kappa(self):
        return self.base.kappa

    @property
    def amplitudes(self):
        return -2 * self.base.kappa * self.base.amplitudes

    @property
    def reflection_part(self):
        return 2j * self.base.k * self.base.reflection_part

    @property
    def values(self):
        k = self.base.k
        out = self.reflection_part.copy()
        for a, kap in zip(self.amplitudes, self.kappa):
            out += -1j * a / (k - 1j * kap)
        return out


def build_symbol(sd: ScatteringData, x: float, t: float = 0.0, evolved: bool = True) -> HankelSymbol:
    """Hankel symbol of the data at position ``x`` and KdV time ``t``.

    With ``evolved=False`` the time is forced to zero.
    """
    if t < 0:
        raise ParameterError("t must be non-negative")
    return HankelSymbol(sd, float(x), float(t) if evolved else 0.0)


def hankel_apply(phi, f) -> SpectralField:
    """``H(phi) f = J P_-(phi f)`` for ``f`` in H^2_+.

    ``phi`` is a :class:`HankelSymbol` (pole terms applied exactly) or any
    bounded :class:`SpectralField`.
    """
    if isinstance(phi, (HankelSymbol, SymbolDerivative)):
        f = as_field(f, phi.kgrid)
        k = f.k
        out = riesz_project(SpectralField(f.kgrid, phi.reflection_part * f.values), "-").values[::-1]
        out = out.copy()
        if len(phi.kappa):
            fz = cauchy_eval(f, 1j * phi.kappa)
            for a, kap, v in zip(phi.amplitudes, phi.kappa, fz):
                out += 1j * a * v / (k + 1j * kap)
        return SpectralField(f.kgrid, out, "+")
    phi = as_field(phi)
    f = as_field(f, phi.kgrid)
    return riesz_project(phi * f, "-").reflect()


def hankel_one(phi) -> np.ndarray:
    """``H(phi) 1``, the right-hand side of the Marchenko equation."""
    k = phi.kgrid.nodes
    out = riesz_project(SpectralField(phi.kgrid, phi.reflection_part), "-").values[::-1].copy()
    for a, kap in zip(phi.amplitudes, phi.kappa):
        out += 1j * a / (k + 1j * kap)
    return out


# ------------------------------------------------------ reflection kernel


class ReflectionKernel:
    """Fast part of the Marchenko kernel, tabulated on a fine lattice and
    interpolated by quintic splines.

    ``F_R(s, t) = (1/2 pi) int R(k) exp(i(8k^3 t + ks)) dk``. When ``R`` has
    poles at ``i kappa_n`` with residues ``i r_n`` (``r_n = c_n^2`` for data
    of a potential with bound states), ``F_R`` carries the slow tail
    ``-sum r_n exp(8 kappa_n^3 t - kappa_n s)``. The kernel returns
    ``F_fast = F_R + sum r_n exp(8 kappa_n^3 t - kappa_n s)``, which decays
    like the potential; the exponentials are handled exactly by the solver.

    The midpoint sum over a k-grid of spacing ``dk`` equals the sum of
    ``F_R(s + m P)`` over ``m`` with period ``P = 2 pi / dk`` (Poisson), so
    ``P`` is chosen larger than the window plus the dispersive spread
    ``24 k_eff^2 t``.

    With ``split=False`` the plain ``F_R`` is tabulated (the window is
    stretched over its exponential tail). The split form loses about
    ``log10(r exp(-kappa sigma_min))`` digits to cancellation far to the
    left, where the plain form is preferable.
    """

    def __init__(self, data: ScatteringData, t: float = 0.0, sigma_min: float = -40.0,
                 window: float = 200.0, tol: float = 1e-12, support_tol: float = 1e-13,
                 poles: Optional[Sequence] = None, split: bool = True, zero_tol: float = 1e-9):
        self.t = float(t)
        self.sigma_min = sigma_min
        R = data.R
        k = data.k
        live = np.abs(R) > tol
        # forward-solver noise on reflectionless data is treated as R = 0
        self.zero = not live.any() or float(np.max(np.abs(R))) <= zero_tol
        poles = data.bound_states if poles is None else poles
        if self.zero:
            poles = ()
        kap = np.array([a for a, _ in poles], dtype=float)
        res = np.array([b for _, b in poles], dtype=float)
        self.pole_kappa, self.pole_residue = kap, res
        c2t = res * np.exp(8 * kap**3 * self.t)
        self.split = split
        if kap.size and not split:
            window = max(window, float(np.max(np.log(np.maximum(c2t, 1.0) / support_tol) / kap)) + 10.0 - sigma_min)
        if self.zero:
            self.sigma_end, self.k_eff, self.scale = sigma_min, 0.0, 0.0
            self.k_fine, self.R_fine, self.dk_fine = np.zeros(0), np.zeros(0, complex), data.kgrid.spacing
            return
        if max(abs(R[0]), abs(R[-1])) > 1e-10:
            warnings.warn("reflection coefficient not negligible at the grid edge",
                          TruncationWarning, stacklevel=2)
        k_eff = min(float(np.max(np.abs(k[live]))) + 2 * data.kgrid.spacing, data.kgrid.K)
        self.k_eff = k_eff
        P = window + 24 * k_eff**2 * self.t + 50.0
        if not split:
            P = max(P, 2 * window + 50.0)
        dk0 = data.kgrid.spacing
        if dk0 <= 2 * math.pi / P:
            # native nodes suffice, no interpolation
            sel = np.abs(k) <= k_eff
            kf, Rf, dk = k[sel], R[sel], dk0
        else:
            r = 2 * int(math.ceil((dk0 * P / (2 * math.pi) - 1) / 2)) + 1  # odd refinement keeps the nodes
            dk = dk0 / r
            n = 2 * int(math.ceil(k_eff / dk))
            kf = (np.arange(n) - n // 2 + 0.5) * dk
            # R has poles at i kappa_n with residue i c_n^2; interpolate the smooth remainder
            pole = lambda z: sum(1j * c / (z - 1j * kp) for kp, c in zip(kap, res))  # noqa: E731
            Rs = R - pole(k) if kap.size else R
            Rf = CubicSpline(k, Rs.real)(kf) + 1j * CubicSpline(k, Rs.imag)(kf)
            if kap.size:
                Rf = Rf + pole(kf)
        n = kf.size
        g = Rf * np.exp(1j * 8 * kf**3 * self.t)
        # refined lattice, reused by momentum-side quadratures
        self.k_fine, self.R_fine, self.dk_fine = kf, Rf, dk
        P = 2 * math.pi / dk
        ds_target = min(0.01, 0.05 / k_eff)
        M = next_fast_len(max(n, int(math.ceil(P / ds_target))))
        ds = P / M
        m = np.arange(M)
        # exp(i k_j s_m) with s_m = sigma_min + m ds, k_j = k_0 + j dk
        base = np.exp(1j * kf[0] * m * ds) * (dk / (2 * math.pi)) * M
        shift = np.exp(1j * kf * sigma_min)
        Fv = base * ifft(np.concatenate([g * shift, np.zeros(M - n)]))
        dFv = base * ifft(np.concatenate([1j * kf * g * shift, np.zeros(M - n)]))
        s = sigma_min + m * ds
        keep = s <= sigma_min + min(window, 0.5 * P)
        s, Fv, dFv = s[keep], Fv[keep].real, dFv[keep].real
        big = max(1.0, float(np.max(np.abs(Fv))))
        if kap.size and not _residues_consistent(s, Fv, kap, c2t):
            # e.g. reflectionless data: R has no poles, F_R no exponential tail
            kap, res, c2t = np.zeros(0), np.zeros(0), np.zeros(0)
            self.pole_kappa, self.pole_residue = kap, res
        if split:
            for kp, c in zip(kap, c2t):
                Fv = Fv + c * np.exp(-kp * s)
                dFv = dFv - kp * c * np.exp(-kp * s)
        else:
            self.pole_kappa, self.pole_residue = np.zeros(0), np.zeros(0)
        alive = np.nonzero(np.abs(Fv) > support_tol * big)[0]
        self.sigma_end = float(s[alive[-1]]) if alive.size else sigma_min
        self.scale = big
        self._F = make_interp_spline(s, Fv, k=5)
        self._dF = make_interp_spline(s, dFv, k=5)
        self._s_max = float(s[-1])

    def pole_amplitudes(self, x: float) -> np.ndarray:
        """``r_n exp(8 kappa_n^3 t - 2 kappa_n x)``."""
        k = self.pole_kappa
        return self.pole_residue * np.exp(8 * k**3 * self.t - 2 * k * x)

    def __call__(self, s, nu: int = 0):
        s = np.asarray(s, dtype=float)
        if self.zero:
            return np.zeros_like(s)
        if np.any(s < self.sigma_min - 1e-9):
            raise ParameterError(f"kernel evaluated below sigma_min = {self.sigma_min}")
        return (self._dF if nu else self._F)(np.minimum(s, self._s_max))


def _eig_end(M, index: int) -> float:
    """One extreme eigenvalue of a symmetric matrix; falls back to the full spectrum
    when the subset driver fails (seen on small, nearly diagonal matrices)."""
    try:
        return float(eigvalsh(M, subset_by_index=[index, index])[0])
    except np.linalg.LinAlgError:
        return float(eigvalsh(M)[index])


def _residues_consistent(s, F, kappa, amp, rel: float = 1e-2) -> bool:
    """Check the tail ``F_R(s) ~ -sum amp_n exp(-kappa_n s)`` where each term is 1e-3 of its size at 0."""
    P = lambda z: np.sum(amp * np.exp(-kappa * z))  # noqa: E731
    for kp in kappa:
        z = max(3 * math.log(10) / kp, 5.0)
        if z > s[-1]:
            z = s[-1]
        f = float(np.interp(z, s, F))
        if abs(f + P(z)) > rel * abs(P(z)):
            return False
    return True


@lru_cache(maxsize=4)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=16)
def _refine_matrix(n: int, m: int):
    """Interpolation from n GL nodes on [-1, 1] to m sub-panels of n GL nodes."""
    g, w = _gauss_legendre(n)
    sub = (np.arange(m)[:, None] + (g[None, :] + 1) / 2) * (2.0 / m) - 1.0
    V = np.polynomial.legendre.legvander(g, n - 1)
    Vs = np.polynomial.legendre.legvander(sub.ravel(), n - 1)
    L = Vs @ np.linalg.inv(V)
    return L, sub.ravel(), np.tile(w / m, m)


@dataclass(frozen=True)
class HalfLineQuadrature:
    """Composite Gauss-Legendre rule on ``[0, S]``."""

    S: float
    h: float
    order: int = GL_ORDER

    @cached_property
    def panels(self) -> int:
        return int(round(self.S / self.h))

    @cached_property
    def nodes(self) -> np.ndarray:
        g, _ = _gauss_legendre(self.order)
        return (np.arange(self.panels)[:, None] * self.h + (g[None, :] + 1) * self.h / 2).ravel()

    @cached_property
    def weights(self) -> np.ndarray:
        _, w = _gauss_legendre(self.order)
        return np.tile(w * self.h / 2, self.panels)

    @cached_property
    def offsets(self) -> np.ndarray:
        """Distinct values of ``u_i + u_j`` arranged as (2P-1, n, n)."""
        g, _ = _gauss_legendre(self.order)
        loc = (g + 1) * self.h / 2
        return np.arange(2 * self.panels - 1)[:, None, None] * self.h + loc[:, None] + loc[None, :]

    def hankel(self, F, sigma0: float, nu: int = 0) -> np.ndarray:
        """Matrix ``F(sigma0 + u_i + u_j)``; block (p, q) depends on p + q only."""
        vals = F(sigma0 + self.offsets, nu)
        P, n = self.panels, self.order
        idx = np.add.outer(np.arange(P), np.arange(P))
        return vals[idx].transpose(0, 2, 1, 3).reshape(P * n, P * n)

    def fourier(self, k, values: np.ndarray) -> np.ndarray:
        """``int_0^S f(u) exp(iku) du`` for f sampled at the nodes (rows)."""
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        kmax = float(np.max(np.abs(k))) if k.size else 0.0
        m = max(1, int(math.ceil(kmax * self.h / 3.0)))
        L, sub, w = _refine_matrix(self.order, m)
        vals = np.asarray(values).reshape(values.shape[:-1] + (self.panels, self.order))
        fine = vals @ L.T  # (..., P, m*n)
        u = (np.arange(self.panels)[:, None] * self.h + (sub[None, :] + 1) * self.h / 2).ravel()
        wf = np.tile(w * self.h / 2, self.panels)
        E = np.exp(1j * np.outer(u, k)) * wf[:, None]
        return fine.reshape(values.shape[:-1] + (-1,)) @ E


# ------------------------------------------------------ operator reps


@dataclass
class HankelOperatorRep:
    """Discretized ``H(phi)``.

    For ``rep="spectral"``: ``matrix`` acts on momentum samples.
    For ``rep="kernel"``: the kernel is split as
    ``F = F_fast + sum_n a_n exp(-kappa_n (2x + u + u'))``; ``reflection``
    is the symmetrized Nystrom matrix ``W^1/2 F_fast W^1/2`` on the
    half-line nodes, ``V`` the weighted exponentials ``W^1/2 exp(-kappa u)``,
    ``amplitudes`` the ``a_n`` (zero amplitudes dropped) and ``tail_gram``
    the exact Gram matrix of the exponentials on ``[S, inf)``.
    ``matrix`` is ``reflection + V diag(a) V^T``.
    """

    rep: str
    symbol: HankelSymbol
    matrix: np.ndarray
    symmetric: bool
    quadrature: Optional[HalfLineQuadrature] = None
    kernel: Optional[ReflectionKernel] = None
    reflection: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None
    tail_gram: Optional[np.ndarray] = None
    kappa: Optional[np.ndarray] = None
    amplitudes: Optional[np.ndarray] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def symmetry_residual(self) -> float:
        M = self.matrix
        return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0

    @cached_property
    def lambda_min(self) -> float:
        """Smallest eigenvalue of ``I + H``.

        For the kernel representation the exponential tail on ``[S, inf)``
        is included as ``J`` extra basis functions (``H`` vanishes on their
        orthogonal complement there).
        """
        if self.rep == "spectral":
            # not Hermitian on the full grid space; use the spectrum itself
            ev = np.linalg.eigvals(np.eye(self.matrix.shape[0]) + self.matrix)
            return float(np.min(ev.real))
        n = self.matrix.shape[0]
        a, V, G = self.amplitudes, self.V, self.tail_gram
        if a.size == 0:
            return _eig_end(np.eye(n) + self.reflection, 0)
        if np.max(np.abs(a)) * max(1.0, np.max(np.sum(V**2, axis=0))) < 1e8:
            AG = a[:, None] * G
            H = np.block([[self.matrix, V @ AG], [AG.T @ V.T, G @ AG]])
            mass = np.eye(n + a.size)
            mass[n:, n:] = G
            return float(eigh(H + mass, mass, eigvals_only=True, subset_by_index=[0, 0])[0])
        # huge rank-J part: invert with Woodbury, where everything stays bounded
        c = _cholesky(np.eye(n) + self.reflection)
        Ainv = cho_solve(c, np.eye(n))
        Z = Ainv @ V
        Mc = np.diag(_clipped_inverse(a)) + V.T @ Z
        inv = Ainv - Z @ np.linalg.solve(Mc, Z.T)
        return 1.0 / _eig_end(0.5 * (inv + inv.T), n - 1)

    def quadratic_form(self, f) -> complex:
        """``<H f, f>`` for ``f`` in H^2_+.

        Spectral: ``f`` is a field or callable on the momentum grid.
        Kernel: ``f`` is a callable returning the dual representation
        ``fhat(s)`` on ``s >= 0`` (``f(k) = int fhat(s) exp(iks) ds``) that
        is negligible beyond ``S``.
        """
        if self.rep == "spectral":
            f = as_field(f, self.symbol.kgrid)
            Hf = self.matrix @ f.values
            return complex(self.symbol.kgrid.spacing * np.sum(Hf * np.conj(f.values)))
        q = self.quadrature
        fw = np.sqrt(q.weights) * f(q.nodes)
        return complex(2 * math.pi * (np.conj(fw) @ (self.matrix @ fw)))


def _cauchy_rows(kgrid: KGrid, z: np.ndarray) -> np.ndarray:
    """Linear functionals ``f -> (P_+ f)(z)`` including the tail model."""
    tail = _tail_model(kgrid.K, kgrid.N)
    k = kgrid.nodes
    mid = kgrid.spacing / (2j * math.pi) / (k[None, :] - z[:, None])
    Bz = np.column_stack([(z + 1j) ** -n for n in range(1, tail.order + 1)])
    # Bz - mid @ basis is the small |k| > K part of the basis integrals; forming
    # it first avoids cancelling two large products
    return mid + (Bz - mid @ tail.basis) @ tail.fit


def _spectral_matrix(phi) -> np.ndarray:
    g = phi.kgrid
    if g.N > MAX_SPECTRAL_N:
        raise ParameterError(f"spectral representation capped at N = {MAX_SPECTRAL_N}")
    P = minus_projector(g.K, g.N)
    M = (P * phi.reflection_part[None, :])[::-1]
    if len(phi.kappa):
        k = g.nodes
        rows = _cauchy_rows(g, 1j * phi.kappa)
        for a, kap, r in zip(phi.amplitudes, phi.kappa, rows):
            M = M + np.outer(1j * a / (k + 1j * kap), r)
    return M


def choose_quadrature(kernel: ReflectionKernel, x: float, h: Optional[float] = None,
                      S: Optional[float] = None) -> HalfLineQuadrature:
    if h is None:
        h = 0.5 if kernel.zero else min(1.0, 5.0 / max(kernel.k_eff, 1e-9))
    if S is None:
        S = max(kernel.sigma_end - 2 * x, h)
    P = max(1, int(math.ceil(S / h)))
    return HalfLineQuadrature(P * h, h)


def _effective_poles(phi: HankelSymbol, kernel: ReflectionKernel):
    """Exponential part left over once the kernel's pole terms are absorbed.

    Returns ``kappa`` and ``a = a_symbol - a_kernel``; entries that cancel
    to rounding are dropped.
    """
    kap = list(phi.kappa)
    amp = list(phi.amplitudes)
    ref = [abs(a) for a in amp]
    for kp, ar in zip(kernel.pole_kappa, kernel.pole_amplitudes(phi.x)):
        hit = [i for i, kq in enumerate(kap) if abs(kq - kp) <= 1e-12 * kp]
        if hit:
            amp[hit[0]] -= ar
            ref[hit[0]] = max(ref[hit[0]], abs(ar))
        else:
            kap.append(kp)
            amp.append(-ar)
            ref.append(abs(ar))
    kap, amp, ref = np.array(kap, dtype=float), np.array(amp, dtype=float), np.array(ref, dtype=float)
    keep = np.abs(amp) > 1e-12 * ref
    return kap[keep], amp[keep]


def assemble_operator(phi: HankelSymbol, rep: str = "kernel", kernel: Optional[ReflectionKernel] = None,
                      quadrature: Optional[HalfLineQuadrature] = None) -> HankelOperatorRep:
    """Dense matrix of ``H(phi)`` in the spectral or kernel representation."""
    if rep == "spectral":
        return HankelOperatorRep("spectral", phi, _spectral_matrix(phi), False)
    if rep != "kernel":
        raise ParameterError("rep must be 'spectral' or 'kernel'")
    if kernel is None:
        kernel = ReflectionKernel(phi.data, phi.t, sigma_min=min(2 * phi.x - 1.0, -40.0))
    q = quadrature or choose_quadrature(kernel, phi.x)
    sw = np.sqrt(q.weights)
    FR = q.hankel(kernel, 2 * phi.x) * sw[:, None] * sw[None, :]
    kap, a = _effective_poles(phi, kernel)
    V = np.exp(-np.outer(q.nodes, kap)) * sw[:, None]
    # beyond S only the exponentials survive, so B is an exact exponential sum there
    ksum = np.add.outer(kap, kap)
    G = np.exp(-ksum * q.S) / ksum
    M = FR + (V * a[None, :]) @ V.T if kap.size else FR.copy()
    return HankelOperatorRep("kernel", phi, M, True, q, kernel, FR, V, G, kap, a)


# ------------------------------------------------------------- solves


def _cholesky(A):
    try:
        return cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise PositivityError("I + H is not positive definite on the grid") from exc


@dataclass
class MarchenkoSolution:
    """Solution of ``(I + H) y = -H 1`` at one ``(x, t)``.

    Kernel solutions keep the half-line density ``B`` (nodes ``u``) and the
    tail coefficients ``beta`` with ``B(u) = sum beta_n exp(-kappa_n u)``
    for ``u >= S``; ``y`` and ``dy`` are then available at any momentum.
    """

    x: float
    t: float
    k: np.ndarray
    y: np.ndarray
    dy: Optional[np.ndarray] = None
    residual: float = 0.0
    lambda_min: Optional[float] = None
    B: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    Bx: Optional[np.ndarray] = None
    beta_x: Optional[np.ndarray] = None
    B0: Optional[float] = None
    B0x: Optional[float] = None
    quadrature: Optional[HalfLineQuadrature] = None
    kappa: Optional[np.ndarray] = None
    exact_tail: bool = False

    def _transform(self, k, dens, beta):
        q = self.quadrature
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        out = q.fourier(k, dens)
        if beta is not None and beta.size and self.exact_tail:
            tail = np.exp((1j * k[None, :] - self.kappa[:, None]) * q.S) / (self.kappa[:, None] - 1j * k[None, :])
            out = out + beta @ tail
        return out

    def y_at(self, k) -> np.ndarray:
        if self.B is None:
            raise ParameterError("only kernel solutions can be evaluated off the grid")
        return self._transform(k, self.B, self.beta)

    def dy_at(self, k) -> np.ndarray:
        if self.Bx is None:
            raise ParameterError("derivative not computed")
        return self._transform(k, self.Bx, self.beta_x)

    @property
    def q(self) -> float:
        """``-2 d/dx B(0)``."""
        return -2.0 * self.B0x


def _clipped_inverse(a):
    with np.errstate(divide="ignore", over="ignore"):
        return np.clip(1.0 / np.asarray(a, dtype=float), -1e200, 1e200)


class _KernelSystem:
    """Factorized augmented system ``[[A0, -V], [V^T, 1/a + G]]``.

    ``A0 = I + W^1/2 F_fast W^1/2`` is positive definite; the ``J x J``
    Schur complement may be indefinite (negative amplitudes) and is solved
    by LU.
    """

    def __init__(self, op: HankelOperatorRep):
        # no reference back to op: the cache would form a cycle holding O(n^2) arrays
        self.V = op.V
        n = op.matrix.shape[0]
        self.chol = _cholesky(np.eye(n) + op.reflection)
        a = op.amplitudes
        self.J = a.size
        if self.J:
            self.Z = cho_solve(self.chol, op.V)
            self.ainv = _clipped_inverse(a)
            self.M = np.diag(self.ainv) + op.tail_gram + op.V.T @ self.Z
            self.Mfac = lu_factor(self.M)

    def solve(self, r0, r1):
        """Solve ``A0 b - V beta = r0``, ``V^T b + (1/a + G) beta = r1``."""
        b0 = cho_solve(self.chol, r0)
        if not self.J:
            return b0, np.zeros(0)
        beta = lu_solve(self.Mfac, r1 - self.V.T @ b0)
        return b0 + self.Z @ beta, beta


def _system(op):
    sysm = op._cache.get("system")
    if sysm is None:
        sysm = op._cache["system"] = _KernelSystem(op)
    return sysm


def marchenko_solve(op: HankelOperatorRep, with_derivative: bool = True, check_positivity: bool = True,
                    threshold: float = 1e-10, k=None) -> MarchenkoSolution:
    """Solve the Marchenko equation ``(I + H) y = -H 1``.

    Parameters
    ----------
    op : HankelOperatorRep
    with_derivative : bool
        Also compute ``d/dx y`` from the same factorization.
    check_positivity : bool
        Compute ``lambda_min(I + H)`` and raise :class:`PositivityError` below
        ``threshold``. A failed Cholesky factorization always raises.
    k : array_like, optional
        Momenta for the kernel representation (defaults to the symbol grid).

    Notes
    -----
    Kernel form: ``B(u) = -F_fast(2x+u) - int B F_fast + sum beta_n exp(-kappa_n u)``
    with ``beta = -a (1 + int_0^inf B exp(-kappa u))``.
    """
    phi = op.symbol
    lam = None
    if check_positivity:
        lam = op.lambda_min
        if lam <= threshold:
            raise PositivityError(f"lambda_min(I + H) = {lam:.3g} <= {threshold:.3g}")
    if op.rep == "spectral":
        return _spectral_solve(op, with_derivative, lam)
    q, F = op.quadrature, op.kernel
    sw = np.sqrt(q.weights)
    x = phi.x
    sysm = _system(op)
    f = F(2 * x + q.nodes)
    bt, beta = sysm.solve(-f * sw, -np.ones(op.kappa.size))
    Bnodes = bt / sw
    # Nystrom interpolation at u = 0
    B0 = -F(2 * x) - np.sum(q.weights * Bnodes * f) + np.sum(beta)
    res_vec = bt + op.reflection @ bt - (op.V @ beta if beta.size else 0) + f * sw
    residual = float(np.max(np.abs(res_vec)))
    kk = phi.k if k is None else np.asarray(k)
    sol = MarchenkoSolution(x, phi.t, kk, None, None, residual, lam, Bnodes, beta,
                            B0=float(B0), quadrature=q, kappa=op.kappa, exact_tail=True)
    if with_derivative:
        marchenko_solve_dx(op, sol, transform=False)
        sol.y, sol.dy = sol._transform(kk, np.stack([Bnodes, sol.Bx]), np.stack([beta, sol.beta_x]))
    else:
        sol.y = sol.y_at(kk)
    return sol


def marchenko_solve_dx(op: HankelOperatorRep, sol: MarchenkoSolution, transform: bool = True):
    """``d/dx y`` by one more solve against the stored factorization.

    Differentiating the augmented kernel equations gives the same matrix
    with right-hand side ``(-2 F'(2x+u) - 2 int B F'(2x+u+u'),
    -2 kappa beta / a)``.
    """
    if op.rep == "spectral":
        return _spectral_dx(op, sol)
    q, F = op.quadrature, op.kernel
    x = op.symbol.x
    sw = np.sqrt(q.weights)
    sysm = _system(op)
    dF = op._cache.get("dF")
    if dF is None:
        dF = op._cache["dF"] = q.hankel(F, 2 * x, nu=1)
    w = q.weights
    df = F(2 * x + q.nodes, 1)
    r0 = (-2 * df - 2 * dF @ (w * sol.B)) * sw
    r1 = -2 * op.kappa * sol.beta * sysm.ainv if op.kappa.size else np.zeros(0)
    bt, beta_x = sysm.solve(r0, r1)
    Bx = bt / sw
    B0x = (-2 * F(2 * x, 1) - 2 * np.sum(w * sol.B * df)
           - np.sum(w * Bx * F(2 * x + q.nodes)) + np.sum(beta_x))
    sol.Bx, sol.beta_x, sol.B0x = Bx, beta_x, float(B0x)
    if transform:
        sol.dy = sol.dy_at(sol.k)
    return sol.dy


def _spectral_solve(op, with_derivative, lam):
    phi = op.symbol
    n = op.matrix.shape[0]
    A = np.eye(n) + op.matrix
    lu = lu_factor(A)
    rhs = -hankel_one(phi)
    y = lu_solve(lu, rhs)
    residual = float(np.max(np.abs(A @ y - rhs)))
    sol = MarchenkoSolution(phi.x, phi.t, phi.k, y, None, residual, lam)
    op._cache["lu"] = lu
    if with_derivative:
        _spectral_dx(op, sol)
    return sol


def _spectral_dx(op, sol):
    phi = op.symbol
    d = phi.derivative()
    Mx = _spectral_matrix(d)
    lu = op._cache.get("lu") or lu_factor(np.eye(op.matrix.shape[0]) + op.matrix)
    rhs = -(hankel_one(d) + Mx @ sol.y)
    sol.dy = lu_solve(lu, rhs)
    return sol.dy


# ------------------------------------------------------------- fields


@dataclass
class MarchenkoField:
    """``y(k, x)`` and ``d/dx y`` from kernel solves over a set of ``x``.

    Implements the same protocol as :class:`~tracekdv.forward.JostField`:
    attributes ``x``, ``k``, ``y``, ``dy`` and method ``at(k)``.
    """

    x: np.ndarray
    k: np.ndarray
    t: float
    solutions: list
    y: np.ndarray = None
    dy: np.ndarray = None

    def __post_init__(self):
        if self.y is None:
            self.y = np.array([s.y for s in self.solutions])
            self.dy = np.array([s.dy for s in self.solutions])

    def at(self, k):
        y = np.array([s.y_at(k) for s in self.solutions])
        dy = np.array([s.dy_at(k) for s in self.solutions])
        return y, dy

    @property
    def q(self) -> np.ndarray:
        return np.array([s.q for s in self.solutions])

    @property
    def B0(self) -> np.ndarray:
        return np.array([s.B0 for s in self.solutions])

    @property
    def lambda_min(self) -> np.ndarray:
        return np.array([np.nan if s.lambda_min is None else s.lambda_min for s in self.solutions])


def solve_field(sd: ScatteringData, x: Sequence[float], t: float = 0.0, k=None,
                check_positivity: bool = False, h: Optional[float] = None,
                drop_bound_states: bool = False) -> MarchenkoField:
    """Kernel Marchenko solves at every ``x`` sharing one tabulated kernel.

    ``drop_bound_states`` solves with the reflection part only.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    poles = sd.bound_states
    if drop_bound_states:
        sd = ScatteringData(sd.side, sd.kgrid, sd.R, sd.T, ())
    opts = dict(sigma_min=min(2 * x.min() - 1.0, -40.0), window=max(200.0, 2 * float(np.ptp(x)) + 100.0),
                poles=poles)
    kernel = ReflectionKernel(sd, t, **opts)
    plain = None
    kk = sd.k if k is None else np.asarray(k)
    sols = []
    for xi in x:
        kern = kernel
        if drop_bound_states and kernel.pole_kappa.size and np.max(kernel.pole_amplitudes(xi)) > SPLIT_MAX:
            if plain is None:
                plain = ReflectionKernel(sd, t, split=False, **opts)
            kern = plain
        quad = choose_quadrature(kern, float(xi), h=h)
        op = assemble_operator(build_symbol(sd, xi, t), "kernel", kern, quad)
        sols.append(marchenko_solve(op, True, check_positivity, k=kk))
    return MarchenkoField(x, kk, t, sols)
