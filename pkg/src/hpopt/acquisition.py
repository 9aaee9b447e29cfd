"""Probability of Improvement, Expected Improvement and the EI gradient.

The direction flag ``max_flag`` (1 when the objective is maximized) and the
exploration offset ``zeta`` enter through one modified score

    z = (-1)**max_flag * (incumbent - mean + zeta) / sigma

which is shared by PI and EI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .errors import ConfigurationError, NumericalError

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_pdf(z):
    # huge |z| overflows z**2 to inf, and exp(-inf) = 0 is the right answer
    with np.errstate(over="ignore"):
        return INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def norm_cdf(z):
    return ndtr(z)


class DegenerateVarianceError(NumericalError):
    """Posterior variance is zero, so the score z is undefined."""


@dataclass(frozen=True)
class AcquisitionConfig:
    kind: str = "ei"
    zeta: float = 0.0
    max_flag: int = 0

    def __post_init__(self):
        if self.kind not in ("ei", "pi"):
            raise ConfigurationError(f"unknown acquisition {self.kind!r}; use 'ei' or 'pi'")
        if self.max_flag not in (0, 1):
            raise ConfigurationError("max_flag must be 0 or 1")
        if not math.isfinite(self.zeta) or self.zeta < 0:
            raise ConfigurationError("zeta must be finite and non-negative")

    @classmethod
    def from_dict(cls, doc: dict | None) -> "AcquisitionConfig":
        return cls(**(doc or {}))

    @property
    def sign(self) -> float:
        return -1.0 if self.max_flag else 1.0


@dataclass(frozen=True)
class PosteriorAt:
    mean: float
    variance: float
    incumbent: float
    grad_mean: np.ndarray | None = None
    grad_variance: np.ndarray | None = None

    def __post_init__(self):
        if self.variance < 0:
            raise ConfigurationError("variance must be non-negative")


def z_score(p: PosteriorAt, config: AcquisitionConfig) -> float:
    if p.variance <= 0:
        raise DegenerateVarianceError("z is undefined for zero variance")
    return config.sign * (p.incumbent - p.mean + config.zeta) / math.sqrt(p.variance)


def expected_improvement(p: PosteriorAt, config: AcquisitionConfig) -> float:
    if p.variance <= 0:
        return 0.0
    sigma = math.sqrt(p.variance)
    z = z_score(p, config)
    return max(sigma * (z * float(norm_cdf(z)) + float(norm_pdf(z))), 0.0)


def expected_improvement_numeric(p: PosteriorAt, config: AcquisitionConfig) -> float:
    """EI by quadrature of ``E[max(improvement, 0)]`` over mean +- 8 sigma.

    The improvement of an outcome ``y`` is ``incumbent + zeta - y`` when
    minimizing and ``y - incumbent - zeta`` when maximizing.
    """
    if p.variance <= 0:
        raise DegenerateVarianceError("quadrature needs positive variance")
    sigma = math.sqrt(p.variance)
    target = p.incumbent + config.zeta
    lo, hi = p.mean - 8.0 * sigma, p.mean + 8.0 * sigma

    def integrand(y):
        gain = config.sign * (target - y)
        return gain * INV_SQRT_2PI * math.exp(-0.5 * ((y - p.mean) / sigma) ** 2) / sigma

    # integrate only where the gain is positive
    if config.max_flag:
        a, b = max(lo, target), hi
    else:
        a, b = lo, min(hi, target)
    if a >= b:
        return 0.0
    value, _ = integrate.quad(integrand, a, b, epsabs=1e-12, epsrel=1e-12, limit=200)
    return value


def probability_of_improvement(p: PosteriorAt, config: AcquisitionConfig) -> float:
    if p.variance <= 0:
        return 1.0 if config.sign * (p.incumbent - p.mean + config.zeta) > 0 else 0.0
    return float(norm_cdf(z_score(p, config)))


def _sigma_and_grad(p: PosteriorAt):
    if p.variance <= 0:
        raise DegenerateVarianceError("gradient undefined for zero variance")
    if p.grad_mean is None or p.grad_variance is None:
        raise ConfigurationError("posterior gradients are required")
    return math.sqrt(p.variance), np.asarray(p.grad_mean, float), np.asarray(p.grad_variance, float)


def expected_improvement_gradient(p: PosteriorAt, config: AcquisitionConfig) -> np.ndarray:
    """Gradient of EI with respect to the input point."""
    sigma, grad_mean, grad_var = _sigma_and_grad(p)
    z = z_score(p, config)
    cdf, pdf = float(norm_cdf(z)), float(norm_pdf(z))
    return (
        grad_var / (2.0 * sigma) * (z * cdf + pdf)
        - config.sign * grad_mean * cdf
        - grad_var * cdf * z / (2.0 * sigma)
    )


def probability_of_improvement_gradient(p: PosteriorAt, config: AcquisitionConfig) -> np.ndarray:
    sigma, grad_mean, grad_var = _sigma_and_grad(p)
    z = z_score(p, config)
    grad_sigma = grad_var / (2.0 * sigma)
    grad_z = -config.sign * grad_mean / sigma - z * grad_sigma / sigma
    return float(norm_pdf(z)) * grad_z


def acquisition_function(model, incumbent: float, config: AcquisitionConfig):
    """Return ``u(x) -> (value, gradient)`` on a fitted GP model.

    Where the posterior variance vanishes the value follows the degenerate
    convention and the gradient is reported as zero.
    """
    if config.kind == "ei":
        value_fn, grad_fn = expected_improvement, expected_improvement_gradient
    else:
        value_fn, grad_fn = probability_of_improvement, probability_of_improvement_gradient

    def u(x):
        mean, var, gm, gv = model.predict_with_gradients(x)
        p = PosteriorAt(mean, var, incumbent, gm, gv)
        value = value_fn(p, config)
        if var <= 0:
            return value, np.zeros_like(gm)
        return value, grad_fn(p, config)

    return u
