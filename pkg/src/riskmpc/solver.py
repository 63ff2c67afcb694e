"""Box-constrained smooth minimization for the receding-horizon problem.

Projected gradient descent with a backtracking (Armijo) line search along the
projection arc. Search directions on the free variables are scaled by a
limited-memory BFGS two-loop recursion; variables pinned at a bound with the
gradient pushing outward are held fixed for the iteration. Every accepted
step satisfies sufficient decrease, so the cost trace is non-increasing.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ocp
from .ocp import OcpProblem, OcpSolution

CONVERGED = "converged"
ITERATION_LIMIT = "iteration_limit"
TIME_LIMIT = "time_limit"


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 200
    grad_tolerance: float = 1e-4  # on the projected-gradient infinity norm
    time_budget: Optional[float] = None  # seconds; None means no wall-clock limit
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    warm_start: bool = True
    memory: int = 20
    max_backtracks: int = 30
    initial_step: float = 1e-3  # fraction of the box width for gradient steps
    max_step: float = 1.0  # largest move per iteration, as a fraction of box width
    max_evaluations: int = 1000  # deterministic work cap (cost + gradient calls)

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.grad_tolerance > 0:
            raise ValueError("grad_tolerance must be positive")
        if self.time_budget is not None and not self.time_budget > 0:
            raise ValueError("time_budget must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError("sufficient_decrease must lie in (0, 1)")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.max_backtracks < 1 or self.max_evaluations < 1:
            raise ValueError("max_backtracks and max_evaluations must be >= 1")


@dataclass
class SolveReport:
    iterations: int
    final_projected_grad_norm: float
    wall_time: float
    status: str
    cost_trace: list[float] = field(default_factory=list)
    evaluations: int = 0


def projected_gradient_norm(z: np.ndarray, g: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Infinity norm of ``P(z - g) - z``; zero exactly at a KKT point of the box problem."""
    return float(np.max(np.abs(np.clip(z - g, lo, hi) - z))) if z.size else 0.0


def _two_loop(g: np.ndarray, pairs, free: np.ndarray) -> np.ndarray:
    # mask every stored pair once; per-row dots keep the summation order of the plain loop
    S = np.where(free, np.array([p[0] for p in pairs]), 0.0)
    Y = np.where(free, np.array([p[1] for p in pairs]), 0.0)
    rhos = [p[2] for p in pairs]
    q = np.where(free, g, 0.0)
    m = len(rhos)
    alphas = [0.0] * m
    for i in range(m - 1, -1, -1):
        a = rhos[i] * float(S[i] @ q)
        alphas[i] = a
        q = q - a * Y[i]
    s, y, _ = pairs[-1]
    q *= float(s @ y) / float(y @ y)
    for i in range(m):
        b = rhos[i] * float(Y[i] @ q)
        q = q + (alphas[i] - b) * S[i]
    return q


def _resolve(g) -> np.ndarray:
    return g() if callable(g) else g


def minimize_box(fun: Callable[[np.ndarray], tuple[float, np.ndarray]], z0, lo, hi,
                 config: SolverConfig = SolverConfig()) -> tuple[np.ndarray, SolveReport]:
    """Minimize ``fun`` (returning value and gradient) over ``lo <= z <= hi``.

    The gradient may also be returned as a zero-argument callable; it is then
    only evaluated at accepted points.

    Never raises on non-convergence; the best iterate is returned with a
    status of ``iteration_limit`` or ``time_limit``.
    """
    t0 = time.perf_counter()
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    z = np.clip(np.asarray(z0, dtype=float).copy(), lo, hi)
    span = hi - lo
    # pinned (lo == hi) or unbounded variables get unit scale
    width = np.where(np.isfinite(span) & (span > 0), span, 1.0)
    f, g = fun(z)
    g = _resolve(g)
    evals = 1
    trace = [f]
    pairs: deque = deque(maxlen=config.memory)
    c1 = config.sufficient_decrease
    status = ITERATION_LIMIT
    iterations = 0
    pg = projected_gradient_norm(z, g, lo, hi)

    while True:
        if pg <= config.grad_tolerance:
            status = CONVERGED
            break
        if iterations >= config.max_iterations or evals >= config.max_evaluations:
            status = ITERATION_LIMIT
            break
        if config.time_budget is not None and time.perf_counter() - t0 >= config.time_budget:
            status = TIME_LIMIT
            break
        iterations += 1

        # variables held at a bound by the gradient stay fixed this iteration
        free = ~(((z <= lo) & (g > 0)) | ((z >= hi) & (g < 0)))
        if pairs:
            with np.errstate(all="ignore"):
                d = -_two_loop(g, pairs, free)
            if not np.all(np.isfinite(d)) or float(g @ d) >= 0.0:
                d = -np.where(free, g, 0.0)
                pairs.clear()
        else:
            # first step moves at most initial_step of a variable's box width
            d = -np.where(free, g, 0.0)
            ratio = float(np.max(np.abs(d) / width))
            if ratio > 0:
                d *= min(1.0, config.initial_step / ratio)

        ratio = float(np.max(np.abs(d) / width))
        step = min(1.0, config.max_step / ratio) if ratio > 0 else 1.0
        accepted = False
        for _ in range(config.max_backtracks):
            z_new = np.clip(z + step * d, lo, hi)
            dz = z_new - z
            decrease = float(g @ dz)
            if not np.any(dz):
                break
            f_new, g_new = fun(z_new)
            evals += 1
            if np.isfinite(f_new) and f_new <= f + c1 * decrease:
                accepted = True
                break
            if evals >= config.max_evaluations:
                break
            # safeguarded quadratic interpolation along the trial segment
            frac = config.shrink
            curv = f_new - f - decrease
            if np.isfinite(f_new) and curv > 0:
                frac = min(config.shrink, max(0.1, -decrease / (2.0 * curv)))
            step *= frac
        if not accepted:
            if evals >= config.max_evaluations:
                break
            # fall back to a plain projected gradient step before giving up
            if pairs:
                pairs.clear()
                continue
            break

        g_new = _resolve(g_new)
        s = z_new - z
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.sqrt((s @ s) * (y @ y))):
            pairs.append((s, y, 1.0 / sy))
        z, f, g = z_new, f_new, g_new
        trace.append(f)
        pg = projected_gradient_norm(z, g, lo, hi)

    if status != CONVERGED and pg <= config.grad_tolerance:
        status = CONVERGED
    report = SolveReport(
        iterations=iterations,
        final_projected_grad_norm=pg,
        wall_time=time.perf_counter() - t0,
        status=status,
        cost_trace=trace,
        evaluations=evals,
    )
    return z, report


def solve(problem: OcpProblem, config: SolverConfig = SolverConfig(),
          warm_start=None) -> tuple[OcpSolution, SolveReport]:
    """Solve the risk-averse trajectory problem from ``warm_start`` (default: coast straight)."""
    N = problem.horizon_N
    if warm_start is None or not config.warm_start:
        z0 = ocp.zero_inputs(N)
    else:
        z0 = ocp.as_input_array(warm_start, N).ravel()
    lo, hi = ocp.input_bounds(problem)
    z, report = minimize_box(lambda zz: ocp.cost_and_lazy_gradient(problem, zz), z0, lo, hi, config)
    return ocp.make_solution(problem, z), report


def shift_warm_start(previous):
    """Drop the first input and repeat the last one.

    Accepts a sequence of inputs or an array of ``(delta, a)`` pairs (flat or
    ``(N, 2)``); the result has the same type and shape.
    """
    if isinstance(previous, np.ndarray):
        arr = previous.reshape(-1, 2)
        return np.concatenate([arr[1:], arr[-1:]]).reshape(previous.shape)
    seq = list(previous)
    shifted = seq[1:] + seq[-1:]
    return tuple(shifted) if isinstance(previous, tuple) else shifted
