"""Momentum and space discretizations and the catalog of test potentials."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline

from .exceptions import ParameterError, TruncationWarning

FAMILIES = ("zero", "sech2", "gaussian", "box", "samples")


@dataclass(frozen=True)
class KGrid:
    """Uniform momentum grid with a half-spacing offset.

    Nodes are ``k_i = -K + (i + 1/2) * 2K/N`` so ``k = 0`` is never a node
    and the grid is symmetric, ``k[::-1] == -k``.
    """

    K: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.K) or self.K <= 0:
            raise ParameterError(f"K must be positive, got {self.K!r}")
        if int(self.N) != self.N or self.N % 2 or self.N < 8:
            raise ParameterError(f"N must be an even integer >= 8, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "K", float(self.K))

    @property
    def spacing(self) -> float:
        return 2.0 * self.K / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        k = -self.K + (np.arange(self.N) + 0.5) * self.spacing
        k.flags.writeable = False
        return k

    @property
    def weights(self) -> np.ndarray:
        """Midpoint-rule weights on ``[-K, K]``."""
        return np.full(self.N, self.spacing)

    def __len__(self):
        return self.N


def build_kgrid(K: float, N: int) -> KGrid:
    return KGrid(K, N)


@dataclass(frozen=True)
class XGrid:
    """Uniform spatial grid on ``[x_min, x_max]`` with ``M`` nodes."""

    x_min: float
    x_max: float
    M: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ParameterError("x_min must be smaller than x_max")
        if int(self.M) != self.M or self.M < 2:
            raise ParameterError("M must be an integer >= 2")
        object.__setattr__(self, "M", int(self.M))

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.M - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.M)
        x.flags.writeable = False
        return x

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, dx: float) -> "XGrid":
        M = int(round((x_max - x_min) / dx)) + 1
        return cls(x_min, x_min + (M - 1) * dx, M)

    def __len__(self):
        return self.M


@dataclass(frozen=True)
class PotentialSpec:
    """Parametric description of a real potential ``q(x)``.

    Families and their parameters:

    - ``zero``: no parameters.
    - ``sech2``: ``kappa``, ``center`` and optional integer ``order`` n
      (default 1); ``q = -n (n + 1) kappa^2 sech^2(kappa (x - center))``,
      reflectionless with bound states ``kappa, 2 kappa, ..., n kappa``.
    - ``gaussian``: ``amplitude``, ``width``, ``center``;
      ``q = amplitude * exp(-((x - center) / width)^2)``.
    - ``box``: ``depth``, ``half_width``, ``center``; ``q = -depth`` inside.
    - ``samples``: ``x``, ``q`` tables, interpolated by a cubic spline and
      set to zero outside the table.
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown potential family {self.family!r}")
        p = dict(self.params)
        if self.family == "sech2":
            p.setdefault("center", 0.0)
            p.setdefault("order", 1)
            if p.get("kappa", 0) <= 0:
                raise ParameterError("sech2 needs kappa > 0")
            if int(p["order"]) != p["order"] or p["order"] < 1:
                raise ParameterError("sech2 order must be a positive integer")
        elif self.family == "gaussian":
            p.setdefault("center", 0.0)
            p.setdefault("width", 1.0)
            if "amplitude" not in p or p["width"] <= 0:
                raise ParameterError("gaussian needs amplitude and width > 0")
        elif self.family == "box":
            p.setdefault("center", 0.0)
            if "depth" not in p or p.get("half_width", 0) <= 0:
                raise ParameterError("box needs depth and half_width > 0")
        elif self.family == "samples":
            x = np.asarray(p.get("x"), dtype=float)
            q = np.asarray(p.get("q"), dtype=float)
            if x.ndim != 1 or x.shape != q.shape or x.size < 4:
                raise ParameterError("samples need matching 1-d x and q with >= 4 points")
            if np.any(np.diff(x) <= 0):
                raise ParameterError("sample abscissae must be increasing")
            if not np.all(np.isfinite(q)):
                raise ParameterError("sample values must be finite")
            p["x"], p["q"] = x, q
        object.__setattr__(self, "params", p)

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def sech2(cls, kappa=1.0, center=0.0, order=1):
        return cls("sech2", {"kappa": kappa, "center": center, "order": order})

    @classmethod
    def gaussian(cls, amplitude, width=1.0, center=0.0):
        return cls("gaussian", {"amplitude": amplitude, "width": width, "center": center})

    @classmethod
    def box(cls, depth, half_width, center=0.0):
        return cls("box", {"depth": depth, "half_width": half_width, "center": center})

    @classmethod
    def samples(cls, x, q):
        return cls("samples", {"x": x, "q": q})

    def shifted(self, a: float) -> "PotentialSpec":
        """The same potential translated by ``a``: ``q(x - a)``."""
        p = dict(self.params)
        if self.family == "zero":
            return self
        if self.family == "samples":
            p["x"] = p["x"] + a
        else:
            p["center"] = p["center"] + a
        return replace(self, params=p)

    @cached_property
    def _spline(self):
        return CubicSpline(self.params["x"], self.params["q"], bc_type="natural")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == "zero":
            return np.zeros_like(x)
        if self.family == "sech2":
            kap, n = p["kappa"], p["order"]
            return -n * (n + 1) * kap**2 / np.cosh(kap * (x - p["center"])) ** 2
        if self.family == "gaussian":
            return p["amplitude"] * np.exp(-(((x - p["center"]) / p["width"]) ** 2))
        if self.family == "box":
            inside = np.abs(x - p["center"]) < p["half_width"]
            return np.where(inside, -float(p["depth"]), 0.0)
        xs = p["x"]
        inside = (x >= xs[0]) & (x <= xs[-1])
        return np.where(inside, self._spline(np.clip(x, xs[0], xs[-1])), 0.0)

    def to_dict(self) -> dict:
        p = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.params.items()}
        return {"family": self.family, **p}

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialSpec":
        d = dict(d)
        family = d.pop("family", None)
        if family is None:
            raise ParameterError("potential spec needs a 'family' key")
        return cls(family, d)


@dataclass(frozen=True)
class Potential:
    """A potential sampled on an :class:`XGrid` with cached tail integrals.

    ``Q_plus[i] = int_{x_i}^inf q`` and ``Q_minus[i] = int_{-inf}^{x_i} q``,
    both truncated to the grid window.
    """

    spec: PotentialSpec
    grid: XGrid
    values: np.ndarray
    Q_plus: np.ndarray
    Q_minus: np.ndarray
    rule: str = "simpson"

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def integral(self) -> float:
        return float(self.Q_minus[-1])

    def __call__(self, x):
        return self.spec(x)

    @property
    def is_zero(self) -> bool:
        return self.spec.family == "zero" or not np.any(self.values)


def sample_potential(spec: PotentialSpec, grid: XGrid, truncation_tol: float = 1e-10) -> Potential:
    """Sample ``spec`` on ``grid`` and accumulate the tail integrals."""
    x = grid.nodes
    q = spec(x)
    scale = max(1.0, float(np.max(np.abs(q))))
    if abs(q[0]) > truncation_tol * scale or abs(q[-1]) > truncation_tol * scale:
        warnings.warn(
            f"potential does not decay inside [{grid.x_min}, {grid.x_max}]: "
            f"|q| = {abs(q[0]):.3g}, {abs(q[-1]):.3g} at the edges",
            TruncationWarning,
            stacklevel=2,
        )
    Q_minus = cumulative_simpson(q, x=x, initial=0.0)
    Q_plus = cumulative_simpson(q[::-1], x=-x[::-1], initial=0.0)[::-1]
    for arr in (q, Q_minus, Q_plus):
        arr.flags.writeable = False
    return Potential(spec, grid, q, Q_plus, Q_minus)


def weighted_norm(p: Potential, alpha: float = 0.0, power: int = 1) -> float:
    """Composite-Simpson value of ``int |q|^power <x>^alpha dx``."""
    if power not in (1, 2):
        raise ParameterError("power must be 1 or 2")
    x = p.x
    weight = (1.0 + x**2) ** (alpha / 2.0)
    return float(simpson(np.abs(p.values) ** power * weight, x=x))


def catalog() -> dict[str, PotentialSpec]:
    """Named potentials used by the verification sweeps."""
    return {
        "zero": PotentialSpec.zero(),
        "sech2": PotentialSpec.sech2(1.0, 0.0),
        "two_soliton": PotentialSpec.sech2(1.0, 0.0, order=2),
        "gaussian": PotentialSpec.gaussian(-0.3, 1.0, 0.0),
        "gaussian_repulsive": PotentialSpec.gaussian(0.5, 1.0, 0.0),
    }
