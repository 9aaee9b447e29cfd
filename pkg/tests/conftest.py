import numpy as np
import pytest

from hpopt.gp import GPModel, Kernel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_random_model(rng, d, n=None, kind=None, noise=1e-6):
    """GP with random hyperparameters on random data in the unit cube."""
    n = n or int(rng.integers(3, 12))
    kernel = Kernel(kind or str(rng.choice(["matern52", "rbf"])),
                    rng.uniform(0.2, 1.0, d), rng.uniform(0.5, 2.0))
    return GPModel.build(kernel, rng.random((n, d)), rng.normal(size=n), noise)


def central_difference(f, x, h):
    x = np.asarray(x, dtype=float)
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])


def mp_acquisition(model, incumbent, zeta=0.0, max_flag=0, kind="ei", dps=40):
    """The acquisition of ``model`` evaluated in extended precision.

    Rebuilds the posterior with mpmath from the model's data and
    hyperparameters, so central differences taken on it are free of the
    float round-off that an ill-conditioned kernel matrix amplifies.
    """
    import mpmath as mp

    ctx = mp.mp.clone()
    ctx.dps = dps
    ls = [ctx.mpf(float(v)) for v in model.kernel.lengthscales]
    s = ctx.mpf(model.kernel.signal_variance)
    X = [[ctx.mpf(float(v)) for v in row] for row in model.train_x]
    n = len(X)

    def k(a, b):
        d2 = ctx.fsum(((ai - bi) / li) ** 2 for ai, bi, li in zip(a, b, ls))
        if model.kernel.kind == "rbf":
            return s * ctx.exp(-d2 / 2)
        r = ctx.sqrt(d2)
        return s * (1 + ctx.sqrt(5) * r + ctx.mpf(5) / 3 * d2) * ctx.exp(-ctx.sqrt(5) * r)

    K = ctx.matrix(n, n)
    for i in range(n):
        for j in range(n):
            K[i, j] = k(X[i], X[j])
        K[i, i] += ctx.mpf(model.noise_variance) + ctx.mpf(model.jitter)
    L = ctx.cholesky(K)
    y = ctx.matrix([ctx.mpf(float(v)) for v in model.train_y])
    alpha = ctx.cholesky_solve(K, y)
    sign = -1 if max_flag else 1

    def u(x):
        x = [ctx.mpf(float(v)) for v in x]
        kx = ctx.matrix([k(x, xi) for xi in X])
        mean = ctx.fsum(kx[i] * alpha[i] for i in range(n))
        v = ctx.lu_solve(L, kx)
        var = s - ctx.fsum(vi * vi for vi in v)
        sigma = ctx.sqrt(var)
        z = sign * (ctx.mpf(incumbent) - mean + ctx.mpf(zeta)) / sigma
        if kind == "pi":
            return ctx.ncdf(z)
        return sigma * (z * ctx.ncdf(z) + ctx.npdf(z))

    return u, ctx


def mp_central_difference(model, incumbent, x, h=1e-6, **kw):
    u, ctx = mp_acquisition(model, incumbent, **kw)
    x = np.asarray(x, dtype=float)
    out = []
    for e in np.eye(x.size):
        hi = u([ctx.mpf(float(a)) + ctx.mpf(h) * int(b) for a, b in zip(x, e)])
        lo = u([ctx.mpf(float(a)) - ctx.mpf(h) * int(b) for a, b in zip(x, e)])
        out.append(float((hi - lo) / (2 * ctx.mpf(h))))
    return np.array(out)
