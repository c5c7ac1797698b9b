"""Input checks shared by the estimators and the command-line front-end."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import ParameterError
from .forward import ScatteringData
from .grids import Potential, PotentialSpec
from .reconstruction import METHODS


def check_points(x, name: str = "x") -> np.ndarray:
    """A finite, strictly increasing 1-d float array."""
    try:
        arr = check_array(np.atleast_1d(np.asarray(x, dtype=float)), ensure_2d=False, dtype=float)
    except ValueError as err:
        raise ParameterError(f"{name}: {err}") from None
    if arr.ndim != 1:
        raise ParameterError(f"{name} must be 1-d")
    if np.any(np.diff(arr) <= 0):
        raise ParameterError(f"{name} must be strictly increasing")
    return arr


def check_times(t) -> np.ndarray:
    """Non-negative finite times as a 1-d array (order is kept)."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if ts.ndim != 1 or ts.size == 0:
        raise ParameterError("at least one time is required")
    if not np.all(np.isfinite(ts)) or np.any(ts < 0):
        raise ParameterError("times must be finite and non-negative")
    return ts


def check_methods(methods: Sequence[str]) -> tuple:
    """A non-empty tuple of known reconstruction methods without repeats."""
    if isinstance(methods, str):
        methods = (methods,)
    methods = tuple(methods)
    if not methods:
        raise ParameterError("at least one reconstruction method is required")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ParameterError(f"unknown reconstruction method(s): {bad}; choose from {list(METHODS)}")
    if len(set(methods)) != len(methods):
        raise ParameterError("reconstruction methods must not repeat")
    return methods


def check_positive(value, name: str, integer: bool = False):
    """A positive finite number, optionally integral."""
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a number, got {value!r}") from None
    if not np.isfinite(v) or v <= 0:
        raise ParameterError(f"{name} must be positive, got {value!r}")
    if integer:
        if v != int(v):
            raise ParameterError(f"{name} must be an integer, got {value!r}")
        return int(v)
    return v


def check_potential(X) -> PotentialSpec | Potential:
    """Accept a spec, a sampled potential, a spec dict or an ``(x, q)`` table."""
    if isinstance(X, (PotentialSpec, Potential)):
        return X
    if isinstance(X, dict):
        return PotentialSpec.from_dict(X)
    try:
        arr = check_array(np.asarray(X, dtype=float), dtype=float)
    except ValueError as err:
        raise ParameterError(f"potential table: {err}") from None
    if arr.shape[0] == 2 and arr.shape[1] != 2:
        arr = arr.T
    if arr.shape[1] != 2:
        raise ParameterError("a potential table needs two columns (x, q)")
    return PotentialSpec.samples(arr[:, 0], arr[:, 1])


def check_scattering_data(sd) -> ScatteringData:
    """A :class:`ScatteringData` from an instance or its dictionary form."""
    if isinstance(sd, ScatteringData):
        out = sd
    elif isinstance(sd, dict):
        try:
            out = ScatteringData.from_dict(sd)
        except KeyError as err:
            raise ParameterError(f"scattering data is missing key {err}") from None
    else:
        raise ParameterError(f"expected ScatteringData, got {type(sd).__name__}")
    for kap, c2 in out.bound_states:
        if kap <= 0 or c2 <= 0:
            raise ParameterError("bound states need kappa > 0 and c^2 > 0")
    if out.R.shape != (out.kgrid.N,):
        raise ParameterError("R must have one sample per k-node")
    return out
