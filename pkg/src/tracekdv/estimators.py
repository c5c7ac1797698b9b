"""Estimator wrappers with the familiar ``fit``/``predict`` interface.

Parameters are plain constructor arguments, so ``get_params``/``set_params``
and cloning behave as for any scikit-learn estimator. Fitted state carries a
trailing underscore.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    check_methods,
    check_points,
    check_positive,
    check_potential,
    check_scattering_data,
    check_times,
)
from .forward import compute_TR
from .grids import KGrid, Potential, XGrid, sample_potential
from .kdv import conserved_check, kdv_solve
from .reconstruction import cross_table, reconstruct

__all__ = ["ForwardScattering", "KdVSolver", "MarchenkoReconstructor"]


class ForwardScattering(BaseEstimator):
    """Scattering data of a real potential on the line.

    Parameters
    ----------
    K, N : float, int
        Momentum window ``[-K, K]`` and number of midpoint nodes.
    x_min, x_max, nx : float, float, int
        Sampling grid of the potential.
    threads : int
        Worker threads for the Jost integrations.

    Attributes
    ----------
    scattering_data_ : ScatteringData
        Right-side data ``{R, T, (kappa_j, c_j^2)}``.
    left_data_ : ScatteringData
        Left reflection coefficient (no bound states attached).
    bound_states_ : tuple of (float, float)
    unitarity_residual_ : float
        ``max | |R|^2 + |T|^2 - 1 |``.
    """

    def __init__(self, K: float = 16.0, N: int = 2048, x_min: float = -20.0, x_max: float = 20.0,
                 nx: int = 2001, threads: int = 1):
        self.K = K
        self.N = N
        self.x_min = x_min
        self.x_max = x_max
        self.nx = nx
        self.threads = threads

    def fit(self, X, y=None):
        """Compute the scattering data of ``X``.

        Parameters
        ----------
        X : PotentialSpec, Potential, dict or array of shape (n, 2)
            The potential; tables are read as ``(x, q)`` columns.
        y : ignored
        """
        kgrid = KGrid(check_positive(self.K, "K"), check_positive(self.N, "N", integer=True))
        spec = check_potential(X)
        if isinstance(spec, Potential):
            pot = spec
        else:
            xg = XGrid(float(self.x_min), float(self.x_max), check_positive(self.nx, "nx", integer=True))
            pot = sample_potential(spec, xg)
        threads = check_positive(self.threads, "threads", integer=True)
        self.scattering_data_, self.left_data_ = compute_TR(pot, kgrid, threads=threads)
        self.potential_ = pot
        self.bound_states_ = self.scattering_data_.bound_states
        self.unitarity_residual_ = self.scattering_data_.unitarity_residual()
        return self

    def predict(self, X=None) -> np.ndarray:
        """Right reflection coefficient at momenta ``X`` (grid nodes if None).

        Off-grid values use a cubic spline of the real and imaginary parts.
        """
        check_is_fitted(self, "scattering_data_")
        sd = self.scattering_data_
        if X is None:
            return sd.R.copy()
        k = check_points(X, "k")
        if np.max(np.abs(k)) > sd.kgrid.K:
            raise ValueError("momenta outside the fitted window")
        re = CubicSpline(sd.k, sd.R.real)(k)
        im = CubicSpline(sd.k, sd.R.imag)(k)
        return re + 1j * im


class MarchenkoReconstructor(BaseEstimator):
    """Recover ``q(x)`` from scattering data by the trace formulas.

    Parameters
    ----------
    methods : sequence of str
        Any of ``trace1``, ``trace2``, ``trace3``, ``trace4``, ``dt``. The first
        is returned by :meth:`predict`.
    alpha : float
        Free parameter of ``trace1``.

    Attributes
    ----------
    scattering_data_ : ScatteringData
    results_ : dict
        Last :class:`ReconstructionResult` per method.
    cross_table_ : dict
        Pairwise sup-differences of the last prediction.
    """

    def __init__(self, methods: Sequence[str] = ("trace2",), alpha: float = 1.0):
        self.methods = methods
        self.alpha = alpha

    def fit(self, X, y=None):
        """Store validated scattering data ``X`` (ScatteringData or its dict)."""
        check_methods(self.methods)
        check_positive(self.alpha, "alpha")
        self.scattering_data_ = check_scattering_data(X)
        return self

    def predict(self, X) -> np.ndarray:
        """``q`` at the increasing points ``X`` from the first method."""
        return self.predict_all(X)[check_methods(self.methods)[0]]

    def predict_all(self, X) -> dict:
        """``{method: q}`` at ``X`` for every selected method."""
        check_is_fitted(self, "scattering_data_")
        x = check_points(X)
        self.results_ = reconstruct(self.scattering_data_, x, check_methods(self.methods), alpha=float(self.alpha))
        self.cross_table_ = cross_table(self.results_) if len(self.results_) > 1 else {}
        return {m: r.q for m, r in self.results_.items()}


class KdVSolver(BaseEstimator):
    """Solutions of ``q_t - 6 q q_x + q_xxx = 0`` from initial scattering data.

    Parameters
    ----------
    q0_method : {"kernel", "regularized"}
        Representation of the bound-state-free background.
    positivity : bool
        Record ``lambda_min(I + H)`` along with the profile.

    Attributes
    ----------
    scattering_data_ : ScatteringData
    profile_ : EvolvedProfile
        Result of the last :meth:`predict`.
    """

    def __init__(self, q0_method: str = "kernel", positivity: bool = False):
        self.q0_method = q0_method
        self.positivity = positivity

    def fit(self, X, y=None):
        """Store validated initial scattering data ``X``."""
        self.scattering_data_ = check_scattering_data(X)
        return self

    def predict(self, X, t=0.0) -> np.ndarray:
        """``q(X, t)``; shape ``(Nx,)`` for scalar ``t``, else ``(Nt, Nx)``."""
        check_is_fitted(self, "scattering_data_")
        x = check_points(X)
        ts = check_times(t)
        self.profile_ = kdv_solve(self.scattering_data_, x, ts, q0_method=self.q0_method,
                                  positivity=bool(self.positivity))
        return self.profile_.q[0] if np.ndim(t) == 0 else self.profile_.q

    def conserved(self, edge_tol: float = 1e-6) -> list:
        """Conserved-quantity residuals of the last prediction."""
        check_is_fitted(self, "profile_")
        return conserved_check(self.profile_, self.scattering_data_, edge_tol=edge_tol)
