"""Maximization of acquisition functions over the unit hypercube.

Every run starts with a random-search warm start; the best warm-up points
seed a local method. Local methods may give up (degenerate curvature in the
quasi-Newton update, a failed line search, NaNs); the result is then simply
the best point seen so far, so a run is never worse than its warm start.

All objectives are *maximized*. Internally the quasi-Newton code works on
``f = -u`` so the usual minimization conventions (positive curvature
``y's > 0``) apply.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, OptimizationFailure

logger = logging.getLogger(__name__)

METHODS = ("random", "bounded_qn", "qn", "nelder_mead")

ARMIJO_C = 1e-4
BACKTRACK_SHRINK = 0.5
MAX_BACKTRACKS = 30
CURVATURE_EPS = 1e-12


@dataclass(frozen=True)
class AcqOptConfig:
    method: str = "bounded_qn"
    warmup_samples: int = 1000
    restarts: int = 5
    max_iterations: int = 200
    gradient_tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.warmup_samples < 1 or self.restarts < 1 or self.max_iterations < 1:
            raise ConfigurationError("warmup_samples, restarts and max_iterations must be >= 1")
        if not self.gradient_tolerance > 0:
            raise ConfigurationError("gradient_tolerance must be positive")

    @classmethod
    def from_dict(cls, doc: dict | None) -> "AcqOptConfig":
        return cls(**(doc or {}))


@dataclass
class MaximizeResult:
    x: np.ndarray
    value: float
    warm_start_x: np.ndarray
    warm_start_value: float
    failures: list[str] = field(default_factory=list)
    iterations: int = 0


@dataclass(frozen=True)
class QuasiNewtonState:
    """Inverse-Hessian approximation of ``f = -u`` at ``point``.

    ``skipped`` is set when the last update was refused because the
    curvature ``y's`` was not safely positive.
    """

    inverse_hessian: np.ndarray
    point: np.ndarray
    gradient: np.ndarray
    skipped: bool = False

    @classmethod
    def start(cls, point, gradient) -> "QuasiNewtonState":
        point = np.asarray(point, dtype=float)
        return cls(np.eye(point.size), point.copy(), np.asarray(gradient, dtype=float).copy())


def quasi_newton_step(state: QuasiNewtonState, gradient_new, point_new) -> QuasiNewtonState:
    """Inverse BFGS update.

    The new matrix satisfies the secant condition ``H (g_new - g) = x_new - x``.
    Gradients are those of the function being *minimized*.
    """
    point_new = np.asarray(point_new, dtype=float)
    gradient_new = np.asarray(gradient_new, dtype=float)
    s = point_new - state.point
    y = gradient_new - state.gradient
    sy = float(s @ y)
    if not sy > CURVATURE_EPS:
        return QuasiNewtonState(state.inverse_hessian, point_new, gradient_new, skipped=True)
    rho = 1.0 / sy
    H = state.inverse_hessian
    Hy = H @ y
    H_new = (
        H
        - rho * (np.outer(s, Hy) + np.outer(Hy, s))
        + (rho * rho * (y @ Hy) + rho) * np.outer(s, s)
    )
    H_new = 0.5 * (H_new + H_new.T)
    return QuasiNewtonState(H_new, point_new, gradient_new)


def _project(x):
    return np.clip(x, 0.0, 1.0)


def bounded_step(func, point, direction, value=None, gradient=None,
                 max_backtracks=MAX_BACKTRACKS):
    """Backtracking Armijo line search along ``direction`` with projection.

    ``func(x)`` returns ``(value, gradient)`` of the function being maximized.
    Returns ``(x_new, value_new, gradient_new)``; raises
    :class:`OptimizationFailure` when no step satisfies the sufficient
    increase condition.
    """
    point = np.asarray(point, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if value is None or gradient is None:
        value, gradient = func(point)
    alpha = 1.0
    for _ in range(max_backtracks):
        trial = _project(point + alpha * direction)
        delta = trial - point
        predicted = float(gradient @ delta)
        if not np.any(delta) or not predicted > 0.0:
            # projection killed the step, or it is no ascent direction at all
            if not np.any(direction):
                break
            alpha *= BACKTRACK_SHRINK
            continue
        new_value, new_grad = func(trial)
        if math.isfinite(new_value) and new_value >= value + ARMIJO_C * predicted:
            return trial, float(new_value), np.asarray(new_grad, dtype=float)
        alpha *= BACKTRACK_SHRINK
    raise OptimizationFailure("line search found no improving step", "line_search")


def _projected_gradient_norm(x, g):
    return float(np.linalg.norm(_project(x + g) - x))


def quasi_newton_maximize(func, x0, max_iterations=200, gradient_tolerance=1e-6,
                          bounded=True, on_point=None):
    """Projected inverse-BFGS ascent from ``x0``.

    With ``bounded=True`` the search direction is computed on the free
    variables only (variables at a bound whose gradient pushes outward are
    held fixed), which keeps it an ascent direction after projection. With
    ``bounded=False`` the plain quasi-Newton direction is used and the
    trial points are merely clamped.

    ``on_point(x, value)`` is called for every accepted iterate so a caller
    can keep the best point even if a later iteration fails. Returns
    ``(x, value, iterations)``.
    """
    x = _project(np.asarray(x0, dtype=float))
    value, grad = func(x)
    grad = np.asarray(grad, dtype=float)
    if not (math.isfinite(value) and np.all(np.isfinite(grad))):
        raise OptimizationFailure("non-finite objective at start", "nan")
    state = QuasiNewtonState.start(x, -grad)
    for it in range(max_iterations):
        if _projected_gradient_norm(x, grad) <= gradient_tolerance:
            return x, value, it
        H = state.inverse_hessian
        if bounded:
            free = ~(((x <= 0.0) & (grad < 0.0)) | ((x >= 1.0) & (grad > 0.0)))
            direction = np.zeros_like(x)
            direction[free] = H[np.ix_(free, free)] @ grad[free]
            if not direction @ grad > 0.0:
                # lost positive definiteness on the face; restart from steepest ascent
                state = QuasiNewtonState.start(x, -grad)
                direction = np.where(free, grad, 0.0)
        else:
            direction = H @ grad
        x_new, value_new, grad_new = bounded_step(func, x, direction, value, grad)
        if not np.all(np.isfinite(grad_new)):
            raise OptimizationFailure("non-finite gradient", "nan")
        if on_point is not None:
            on_point(x_new, value_new)
        state = quasi_newton_step(state, -grad_new, x_new)
        x, value, grad = x_new, value_new, grad_new
        # a vanishing step near the optimum also makes y's tiny; that is success
        if state.skipped and _projected_gradient_norm(x, grad) > gradient_tolerance:
            raise OptimizationFailure("curvature y's <= 0 in BFGS update", "curvature")
    return x, value, max_iterations


def _simplex_diameter(simplex):
    diffs = simplex[:, None, :] - simplex[None, :, :]
    return float(np.sqrt((diffs ** 2).sum(axis=-1)).max())


def nelder_mead_maximize(func, bounds=None, config: AcqOptConfig | None = None, x0=None,
                         initial_step=0.05, tolerance=1e-8, max_iterations=None,
                         history=None):
    """Nelder-Mead simplex search maximizing a value-only ``func``.

    Reflection 1, expansion 2, contraction 0.5, shrink 0.5. Vertices outside
    ``bounds`` (a ``(d, 2)`` array, default the unit cube) are clamped.
    Stops when the simplex diameter drops below ``tolerance``. If
    ``history`` is a list, ``(operation, diameter)`` is appended after each
    iteration, where operation is one of reflect, expand, contract, shrink.
    """
    if config is None:
        config = AcqOptConfig(method="nelder_mead")
    if max_iterations is None:
        max_iterations = config.max_iterations
    if bounds is None:
        if x0 is None:
            raise ConfigurationError("need bounds or a start point")
        bounds = np.tile([0.0, 1.0], (len(np.atleast_1d(x0)), 1))
    bounds = np.asarray(bounds, dtype=float)
    lo, hi = bounds[:, 0], bounds[:, 1]
    d = len(lo)
    if x0 is None:
        x0 = np.random.default_rng(config.seed).uniform(lo, hi)
    x0 = np.clip(np.asarray(x0, dtype=float), lo, hi)

    def f(x):
        v = func(x)
        return -v if math.isfinite(v) else math.inf

    simplex = np.empty((d + 1, d))
    simplex[0] = x0
    for i in range(d):
        v = x0.copy()
        step = initial_step * (hi[i] - lo[i])
        v[i] = v[i] + step if v[i] + step <= hi[i] else v[i] - step
        simplex[i + 1] = v
    fvals = np.array([f(v) for v in simplex])

    for _ in range(max_iterations):
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        if _simplex_diameter(simplex) < tolerance:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = np.clip(centroid + (centroid - worst), lo, hi)
        fr = f(xr)
        if fr < fvals[0]:
            xe = np.clip(centroid + 2.0 * (centroid - worst), lo, hi)
            fe = f(xe)
            simplex[-1], fvals[-1] = (xe, fe) if fe < fr else (xr, fr)
            op = "expand" if fe < fr else "reflect"
        elif fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            op = "reflect"
        else:
            if fr < fvals[-1]:
                xc = np.clip(centroid + 0.5 * (xr - centroid), lo, hi)
            else:
                xc = np.clip(centroid + 0.5 * (worst - centroid), lo, hi)
            fc = f(xc)
            if fc < min(fr, fvals[-1]):
                simplex[-1], fvals[-1] = xc, fc
                op = "contract"
            else:
                simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
                fvals[1:] = [f(v) for v in simplex[1:]]
                op = "shrink"
        if history is not None:
            history.append((op, _simplex_diameter(simplex)))

    best = int(np.argmin(fvals))
    if not math.isfinite(fvals[best]):
        return simplex[0], -math.inf
    return simplex[best].copy(), -float(fvals[best])


def _as_value_and_grad(func, jac):
    if jac:
        def vg(x):
            v, g = func(x)
            return float(v), np.asarray(g, dtype=float)
        return vg
    return None


def maximize(func: Callable, dim: int, config: AcqOptConfig | None = None,
             jac: bool = False) -> MaximizeResult:
    """Maximize ``func`` over ``[0, 1]**dim``.

    ``func(x)`` returns the value, or ``(value, gradient)`` when ``jac`` is
    true. Gradient based methods require ``jac``.
    """
    config = config or AcqOptConfig()
    if dim < 1:
        raise ConfigurationError("dimension must be >= 1")
    if config.method in ("bounded_qn", "qn") and not jac:
        raise ConfigurationError(f"method {config.method!r} needs gradients (jac=True)")
    value_only = (lambda x: func(x)[0]) if jac else func

    rng = np.random.default_rng(config.seed)
    warm = rng.random((config.warmup_samples, dim))
    warm_values = np.array([float(value_only(x)) for x in warm])
    warm_values[~np.isfinite(warm_values)] = -np.inf
    order = np.argsort(-warm_values, kind="stable")
    best_i = int(order[0])

    result = MaximizeResult(
        x=warm[best_i].copy(),
        value=float(warm_values[best_i]),
        warm_start_x=warm[best_i].copy(),
        warm_start_value=float(warm_values[best_i]),
    )
    if config.method == "random":
        return result

    def consider(x, v):
        if math.isfinite(v) and v > result.value:
            result.x, result.value = np.array(x, dtype=float), float(v)

    starts = []
    for i in order:
        if len(starts) == config.restarts:
            break
        if not any(np.array_equal(warm[i], s) for s in starts):
            starts.append(warm[i])

    vg = _as_value_and_grad(func, jac)
    for start in starts:
        try:
            if config.method == "nelder_mead":
                x, v = nelder_mead_maximize(value_only, x0=start, config=config)
                consider(x, v)
            else:
                x, v, its = quasi_newton_maximize(
                    vg, start, config.max_iterations, config.gradient_tolerance,
                    bounded=config.method == "bounded_qn", on_point=consider,
                )
                consider(x, v)
                result.iterations = max(result.iterations, its)
        except OptimizationFailure as exc:
            logger.debug("local %s run stopped: %s", config.method, exc)
            result.failures.append(exc.reason)
        except (FloatingPointError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
            logger.debug("local %s run crashed: %s", config.method, exc)
            result.failures.append("numerical")
    return result
