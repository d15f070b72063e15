"""Per-timestep determination of the squared correlation length.

The linearized residual is affine in s = delta_q^2, so the least-squares
optimum has a closed form; that is the production path.  A damped scalar
Newton iteration on the squared cost is kept for the translation-based
(nonlinear) oracle and for cross-validation of the closed form.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fields import PairKernels, planar_inner, residual_components
from .grids import ElectronicGrid
from .nuclear import WavepacketState

_TINY = np.finfo(float).tiny


class ConvergenceError(RuntimeError):
    """Newton iteration failed; carries the last iterate."""

    def __init__(self, message: str, last_s: float, iterations: int):
        super().__init__(message)
        self.last_s = last_s
        self.iterations = iterations


@dataclass(frozen=True)
class OptimizationResult:
    """Optimal squared correlation length at one time."""

    t: float
    s_opt: float           # bohr^2
    delta_q: float         # bohr
    l2_at_opt: float
    method: str            # closed_form | newton | degenerate
    clamped: bool
    iterations: int


def _result(t, s, l2, method, clamped, iterations) -> OptimizationResult:
    return OptimizationResult(t, s, math.sqrt(s), l2, method, clamped, iterations)


def optimize_closed_form(
    a_field: np.ndarray, d_field: np.ndarray, e_grid: ElectronicGrid, t: float = 0.0
) -> OptimizationResult:
    """Exact minimizer of ||A + s D|| over s >= 0 with the planar inner product.

    Degeneracy (no response, e.g. a stationary state) is a result state with
    s = 0, not an error; negative unconstrained optima are clamped to 0 and
    flagged.
    """
    aa = planar_inner(a_field, a_field, e_grid)
    dd = planar_inner(d_field, d_field, e_grid)
    ad = planar_inner(a_field, d_field, e_grid)
    if dd < 1e-12 * aa + _TINY:
        return _result(t, 0.0, math.sqrt(max(aa, 0.0)), "degenerate", False, 0)
    s = -ad / dd
    clamped = s < 0.0
    if clamped:
        s = 0.0
    l2 = math.sqrt(max(aa + 2.0 * s * ad + s * s * dd, 0.0))
    return _result(t, s, l2, "closed_form", clamped, 0)


def optimize_newton(
    cost, s0: float, t: float = 0.0, max_iterations: int = 100
) -> OptimizationResult:
    """Damped Newton on d(cost^2)/ds with central numerical derivatives.

    Converged when |step| < 1e-14 + 1e-10 s; iterates are projected to s >= 0.
    """
    if s0 < 0.0:
        raise ValueError("starting point must be non-negative")

    def f(s: float) -> float:
        c = cost(s)
        return c * c

    s = float(s0)
    fs = f(s)
    clamped = False
    for it in range(1, max_iterations + 1):
        h = 0.05 * max(abs(s), 1e-8)
        if s - h < 0.0:
            # the cost is only defined for s >= 0; difference to the right
            f1 = f(s + h)
            f2 = f(s + 2.0 * h)
            grad = (-3.0 * fs + 4.0 * f1 - f2) / (2.0 * h)
            curv = (fs - 2.0 * f1 + f2) / h**2
        else:
            f_plus = f(s + h)
            f_minus = f(s - h)
            grad = (f_plus - f_minus) / (2.0 * h)
            curv = (f_plus - 2.0 * fs + f_minus) / h**2
        step = -grad / curv if curv > 0.0 else -math.copysign(max(h, abs(s)), grad)
        # damp until the cost stops increasing
        for _ in range(60):
            s_new = max(s + step, 0.0)
            f_new = f(s_new)
            if f_new <= fs + 1e-12 * abs(fs) + _TINY:
                break
            step *= 0.5
        clamped = (s + step) < 0.0
        delta = s_new - s
        s, fs = s_new, f_new
        if abs(delta) < 1e-14 + 1e-10 * abs(s):
            return _result(t, s, math.sqrt(max(fs, 0.0)), "newton", clamped, it)
    raise ConvergenceError(
        f"Newton did not converge within {max_iterations} iterations (last s = {s})",
        last_s=s,
        iterations=max_iterations,
    )


def optimize_series(
    kernels: PairKernels,
    state: WavepacketState,
    times_fs,
    threads: int = 1,
) -> list[OptimizationResult]:
    """Independent closed-form optimization at each time; order preserved.

    Degenerate timesteps are flagged in their results, never raised.
    """
    times = np.asarray(times_fs, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1D sequence")
    if np.any(~np.isfinite(times)) or np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be finite and strictly ascending")

    def solve(t: float) -> OptimizationResult:
        a_field, d_field = residual_components(kernels, state, t)
        return optimize_closed_form(a_field, d_field, kernels.e_grid, t=t)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(solve, times))
    return [solve(t) for t in times]
