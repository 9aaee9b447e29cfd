"""Zero-mean Gaussian-process regression on warped points.

Supplies the posterior mean and variance together with their gradients
with respect to the input point, which is what the EI gradient consumes.
Kernel hyperparameters are fitted by maximizing the log marginal
likelihood in log space with multi-start Nelder-Mead.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from .acq_optimizer import nelder_mead_maximize
from .errors import ConfigurationError, DataError, NumericalError, ParamDomainError

logger = logging.getLogger(__name__)

KERNELS = ("matern52", "rbf")
SQRT5 = math.sqrt(5.0)
LOG_2PI = math.log(2.0 * math.pi)

JITTER_START = 1e-10
JITTER_MAX = 1e-4


@dataclass(frozen=True)
class Kernel:
    """Stationary ARD kernel, either Matern 5/2 or squared exponential."""

    kind: str
    lengthscales: np.ndarray
    signal_variance: float

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ConfigurationError(f"unknown kernel {self.kind!r}; choose from {KERNELS}")
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if ls.ndim != 1 or not np.all(ls > 0) or not np.all(np.isfinite(ls)):
            raise ConfigurationError("lengthscales must be positive and finite")
        if not (self.signal_variance > 0 and math.isfinite(self.signal_variance)):
            raise ConfigurationError("signal_variance must be positive and finite")
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))

    @property
    def dim(self) -> int:
        return self.lengthscales.size

    def _scaled_sqdist(self, A, B):
        A = A / self.lengthscales
        B = B / self.lengthscales
        d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        return np.maximum(d2, 0.0)

    def __call__(self, A, B=None):
        """Covariance matrix between the rows of ``A`` and ``B``."""
        A = np.atleast_2d(A)
        B = A if B is None else np.atleast_2d(B)
        d2 = self._scaled_sqdist(A, B)
        if B is A:
            np.fill_diagonal(d2, 0.0)
        return self._from_sqdist(d2)

    def _from_sqdist(self, d2):
        s = self.signal_variance
        if self.kind == "rbf":
            return s * np.exp(-0.5 * d2)
        r = np.sqrt(d2)
        return s * (1.0 + SQRT5 * r + (5.0 / 3.0) * d2) * np.exp(-SQRT5 * r)

    def cross_with_gradient(self, x, X):
        """``k(x, X_i)`` for all rows of ``X`` and its gradient with respect to ``x``.

        Returns ``(k, dk)`` with shapes ``(n,)`` and ``(n, d)``. The squared
        distance is computed from explicit differences so that the gradient
        is exact at ``x == X_i``.
        """
        diff = (x[None, :] - X) / self.lengthscales  # (n, d)
        d2 = (diff * diff).sum(1)
        k = self._from_sqdist(d2)
        # dk/dx_j = dk/d(d2) * 2 * diff_j / l_j
        if self.kind == "rbf":
            dk_dd2 = -0.5 * k
        else:
            r = np.sqrt(d2)
            dk_dd2 = -(5.0 / 6.0) * self.signal_variance * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
        dk = (2.0 * dk_dd2)[:, None] * diff / self.lengthscales
        return k, dk


def _cholesky_with_jitter(K):
    try:
        return cholesky(K, lower=True, check_finite=False), 0.0
    except LinAlgError:
        pass
    jitter = JITTER_START
    eye = np.eye(K.shape[0])
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            return cholesky(K + jitter * eye, lower=True, check_finite=False), jitter
        except LinAlgError:
            jitter *= 10.0
    raise NumericalError(f"Cholesky failed even with jitter {JITTER_MAX:g}")


@dataclass(frozen=True, eq=False)
class GPModel:
    kernel: Kernel
    train_x: np.ndarray
    train_y: np.ndarray
    noise_variance: float
    chol: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    jitter: float = 0.0

    @classmethod
    def build(cls, kernel: Kernel, train_x, train_y, noise_variance: float) -> "GPModel":
        """Factorize ``K + noise * I`` for fixed hyperparameters."""
        X, y = _check_data(train_x, train_y)
        if X.shape[1] != kernel.dim:
            raise DataError(f"kernel has {kernel.dim} lengthscales but points have {X.shape[1]} dims")
        if not (noise_variance >= 0 and math.isfinite(noise_variance)):
            raise ConfigurationError("noise_variance must be non-negative")
        K = kernel(X)
        K[np.diag_indices_from(K)] += noise_variance
        L, jitter = _cholesky_with_jitter(K)
        alpha = solve_triangular(L.T, solve_triangular(L, y, lower=True), lower=False)
        return cls(kernel, X, y, float(noise_variance), L, alpha, jitter)

    @property
    def dim(self) -> int:
        return self.train_x.shape[1]

    def _check_point(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise ParamDomainError(f"point has {x.size} coordinates, model expects {self.dim}")
        return x

    def _posterior(self, x, gradients):
        k, dk = self.kernel.cross_with_gradient(x, self.train_x)
        mean = float(k @ self.alpha)
        v = solve_triangular(self.chol, k, lower=True, check_finite=False)
        variance = max(self.kernel.signal_variance - float(v @ v), 0.0)
        if not gradients:
            return mean, variance
        grad_mean = dk.T @ self.alpha
        # d var / dx = -2 dk^T K^{-1} k
        Kinv_k = solve_triangular(self.chol.T, v, lower=False, check_finite=False)
        grad_var = -2.0 * (dk.T @ Kinv_k)
        return mean, variance, grad_mean, grad_var

    def predict(self, x):
        """Posterior mean and (latent, noise-free) variance at ``x``."""
        return self._posterior(self._check_point(x), False)

    def predict_with_gradients(self, x):
        """``(mean, variance, grad_mean, grad_variance)`` at ``x``."""
        return self._posterior(self._check_point(x), True)

    def predict_many(self, X):
        """Vectorized :meth:`predict` over the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dim:
            raise ParamDomainError(f"points have {X.shape[1]} coordinates, model expects {self.dim}")
        Ks = self.kernel(X, self.train_x)
        mean = Ks @ self.alpha
        V = solve_triangular(self.chol, Ks.T, lower=True, check_finite=False)
        var = np.maximum(self.kernel.signal_variance - (V * V).sum(0), 0.0)
        return mean, var

    def log_marginal_likelihood(self) -> float:
        n = self.train_y.size
        return float(
            -0.5 * self.train_y @ self.alpha
            - np.log(np.diag(self.chol)).sum()
            - 0.5 * n * LOG_2PI
        )


def log_marginal_likelihood(model: GPModel) -> float:
    return model.log_marginal_likelihood()


def _check_data(points, values):
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(values, dtype=float).ravel()
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("need at least one training point")
    if X.shape[0] != y.size:
        raise DataError(f"{X.shape[0]} points but {y.size} values")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("training data must be finite")
    return X, y


@dataclass(frozen=True)
class GPFitConfig:
    kernel: str = "matern52"
    lengthscale_bounds: tuple[float, float] = (1e-3, 10.0)
    signal_variance_bounds: tuple[float, float] = (1e-4, 1e3)
    noise_bounds: tuple[float, float] = (1e-8, 1.0)
    restarts: int = 5
    max_iterations: int = 300
    seed: int = 0
    # default initialization, also the first restart
    initial_lengthscale: float = 0.3
    initial_noise: float = 1e-4

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ConfigurationError(f"unknown kernel {self.kernel!r}; choose from {KERNELS}")
        if self.restarts < 1:
            raise ConfigurationError("restarts must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict | None) -> "GPFitConfig":
        doc = dict(doc or {})
        for key in ("lengthscale_bounds", "signal_variance_bounds", "noise_bounds"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)


def _unpack(theta, d):
    theta = np.exp(theta)
    return theta[:d], theta[d], theta[d + 1]


def fit(points, values, config: GPFitConfig | None = None) -> GPModel:
    """Fit kernel hyperparameters by maximizing the log marginal likelihood.

    The search runs in log space over the box given by ``config``; the
    first start is the default initialization, so the returned model's LML
    is never below it. Remaining starts are drawn uniformly in the box.
    """
    config = config or GPFitConfig()
    X, y = _check_data(points, values)
    d = X.shape[1]

    log_bounds = np.log(np.array(
        [config.lengthscale_bounds] * d + [config.signal_variance_bounds, config.noise_bounds],
        dtype=float,
    ))
    lo, hi = log_bounds[:, 0], log_bounds[:, 1]

    s0 = float(np.mean(y * y)) if np.any(y) else 1.0
    theta0 = np.log(np.concatenate([
        np.full(d, config.initial_lengthscale), [s0, config.initial_noise]
    ]))
    theta0 = np.clip(theta0, lo, hi)

    def build(theta):
        ls, s, noise = _unpack(theta, d)
        return GPModel.build(Kernel(config.kernel, ls, s), X, y, noise)

    def objective(theta):
        try:
            value = build(theta).log_marginal_likelihood()
        except NumericalError:
            return -math.inf
        return value if math.isfinite(value) else -math.inf

    rng = np.random.default_rng(config.seed)
    starts = [theta0] + [rng.uniform(lo, hi) for _ in range(config.restarts - 1)]
    best_theta, best_value = theta0, objective(theta0)
    for start in starts:
        theta, value = nelder_mead_maximize(
            objective, bounds=log_bounds, x0=start, initial_step=0.1,
            tolerance=1e-4, max_iterations=config.max_iterations,
        )
        if value > best_value:
            best_theta, best_value = theta, value
    if not math.isfinite(best_value):
        raise NumericalError("no hyperparameter setting gave a usable Cholesky factor")
    model = build(best_theta)
    logger.debug("GP fit: lml=%.4g params=%s", best_value, np.exp(best_theta))
    return model
