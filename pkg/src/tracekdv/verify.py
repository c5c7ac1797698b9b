"""Numerical self-checks used by the ``verify`` and ``converge`` commands."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .forward import ScatteringData, compute_TR
from .grids import KGrid, PotentialSpec, XGrid, sample_potential, weighted_norm
from .hankel import assemble_operator, build_symbol, marchenko_solve
from .hardy import pv_lemma_check
from .reconstruction import q0_representations, reconstruct_trace2, solve_field

__all__ = [
    "derivative_order",
    "pv_family",
    "quadratic_form_gap",
    "q0_gap",
    "refinement_ladder",
    "perturbation_ladder",
    "relative_l2",
]


def relative_l2(x, q, ref) -> float:
    """``||q - ref|| / ||ref||`` in L2 by the trapezoid rule."""
    num = trapezoid((np.asarray(q) - ref) ** 2, x)
    den = trapezoid(np.asarray(ref) ** 2, x)
    return float(math.sqrt(num / den)) if den > 0 else float(math.sqrt(num))


def derivative_order(sd: ScatteringData, x0: float = 0.3, steps: Sequence[float] = (0.4, 0.2, 0.1, 0.05),
                     rep: str = "spectral") -> tuple[float, np.ndarray]:
    """Observed order of the central difference of ``y`` against ``dy``.

    Returns the least-squares slope of ``log error`` on ``log step`` and the
    sup-norm errors on the k-grid for each step.
    """
    steps = np.asarray(steps, dtype=float)
    centre = marchenko_solve(assemble_operator(build_symbol(sd, x0), rep))
    errs = []
    for h in steps:
        plus = marchenko_solve(assemble_operator(build_symbol(sd, x0 + h), rep), with_derivative=False)
        minus = marchenko_solve(assemble_operator(build_symbol(sd, x0 - h), rep), with_derivative=False)
        errs.append(np.max(np.abs((plus.y - minus.y) / (2 * h) - centre.dy)))
    errs = np.array(errs)
    return float(np.polyfit(np.log(steps), np.log(errs), 1)[0]), errs


def pv_family(kgrid: KGrid, seed: int, n: int = 10) -> np.ndarray:
    """Lemma residuals for ``1/(k^2+1)`` followed by ``n`` random smooth members.

    Members are ``(a + i b) / ((k - c)^2 + w^2)`` plus a Gaussian bump, which
    keeps ``<k> f`` square integrable.
    """
    rng = np.random.default_rng(seed)
    funcs = [lambda k: 1 / (k**2 + 1)]
    for _ in range(n):
        a, b = rng.normal(size=2)
        c, d = rng.uniform(-2, 2, size=2)
        w, v = rng.uniform(0.5, 2.0, size=2)

        def f(k, a=a, b=b, c=c, d=d, w=w, v=v):
            return (a + 1j * b) / ((k - c) ** 2 + w**2) + np.exp(-(((k - d) / v) ** 2))

        funcs.append(f)
    return np.array([pv_lemma_check(f, kgrid) for f in funcs])


def _dual_power(n: int):
    """``(k + i)^-n`` and its half-line dual."""
    f = lambda k: (k + 1j) ** (-n)  # noqa: E731
    fh = lambda s: -1j * (-1j * s) ** (n - 1) * np.exp(-s) / math.factorial(n - 1)  # noqa: E731
    return f, fh


def quadratic_form_gap(sd: ScatteringData, xs: Sequence[float] = (-1.0, 0.5, 2.0),
                       powers: Sequence[int] = (6, 8)) -> float:
    """Largest ``|<Hf, f>|`` difference between the two representations."""
    gap = 0.0
    for x in xs:
        phi = build_symbol(sd, float(x))
        spec = assemble_operator(phi, "spectral")
        kern = assemble_operator(phi, "kernel")
        for n in powers:
            f, fh = _dual_power(n)
            gap = max(gap, abs(spec.quadratic_form(f) - kern.quadratic_form(fh)))
    return float(gap)


def q0_gap(sd: ScatteringData, x) -> float:
    """Largest pairwise sup-difference between the background representations."""
    reps = list(q0_representations(sd, x).values())
    return float(max(np.max(np.abs(a - b)) for i, a in enumerate(reps) for b in reps[i + 1:]))


def refinement_ladder(spec: PotentialSpec, xgrid: XGrid, x, Ns: Sequence[int], Ks: Sequence[float],
                      threads: int = 1) -> list[dict]:
    """trace2 errors against the input potential for each ``(K, N)`` rung."""
    x = np.asarray(x, dtype=float)
    p = sample_potential(spec, xgrid)
    ref = p(x)
    rows = []
    for K, N in zip(Ks, Ns):
        sd = compute_TR(p, KGrid(float(K), int(N)), threads=threads)[0]
        q = reconstruct_trace2(solve_field(sd, x)).q
        rows.append({"K": float(K), "N": int(N), "sup_error": float(np.max(np.abs(q - ref))),
                     "rel_l2_error": relative_l2(x, q, ref)})
    return rows


def perturbation_ladder(spec: PotentialSpec, xgrid: XGrid, kgrid: KGrid, amplitude: float,
                        halvings: int, center: float, threads: int = 1) -> list[dict]:
    """``||dq||`` in the weighted L1 norm and ``||dR||`` in L2 for shrinking bumps.

    The perturbation is ``eps exp(-(x - center)^2)`` with ``eps`` halved at
    each rung.
    """
    base = compute_TR(sample_potential(spec, xgrid), kgrid, threads=threads)[0]
    rows = []
    for j in range(halvings + 1):
        eps = amplitude * 2.0**-j
        xs = xgrid.nodes
        q = spec(xs) + eps * np.exp(-((xs - center) ** 2))
        p = sample_potential(PotentialSpec.samples(xs, q), xgrid)
        dq = sample_potential(PotentialSpec.samples(xs, q - spec(xs)), xgrid)
        sd = compute_TR(p, kgrid, with_bound_states=False, threads=threads)[0]
        dR = math.sqrt(kgrid.spacing * float(np.sum(np.abs(sd.R - base.R) ** 2)))
        rows.append({"epsilon": eps, "dq_weighted_l1": weighted_norm(dq, alpha=1.0), "dR_l2": dR})
    return rows
