"""Quick oracle checks runnable from the command line.

Each check compares a closed form against an independent computation
(quadrature, finite differences, inverse maps) on random inputs.
"""
from __future__ import annotations

import numpy as np

from .acquisition import (
    AcquisitionConfig,
    PosteriorAt,
    acquisition_function,
    expected_improvement,
    expected_improvement_numeric,
)
from .gp import GPModel, Kernel
from .params import AsymptoticNumericParamDef, MinMaxNumericParamDef


def check_ei_quadrature(n=200, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        p = PosteriorAt(rng.uniform(-5, 5), 10 ** rng.uniform(-6, 1), rng.uniform(-5, 5))
        cfg = AcquisitionConfig(zeta=float(rng.choice([0.0, 0.01, 0.1])), max_flag=int(rng.integers(2)))
        worst = max(worst, abs(expected_improvement(p, cfg) - expected_improvement_numeric(p, cfg)))
    return worst <= 1e-6, f"max |EI - quadrature| = {worst:.2e}"


def random_model(rng, d, n=None, kind=None):
    n = n or int(rng.integers(3, 12))
    kernel = Kernel(kind or str(rng.choice(["matern52", "rbf"])),
                    rng.uniform(0.2, 1.0, d), rng.uniform(0.5, 2.0))
    X = rng.random((n, d))
    y = rng.normal(size=n)
    return GPModel.build(kernel, X, y, 1e-6)


def check_ei_gradient(n=20, seed=0, h=1e-6):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        d = int(rng.integers(1, 6))
        model = random_model(rng, d)
        u = acquisition_function(model, float(model.train_y.min()), AcquisitionConfig())
        x = rng.uniform(0.05, 0.95, d)
        _, g = u(x)
        fd = np.array([(u(x + h * e)[0] - u(x - h * e)[0]) / (2 * h) for e in np.eye(d)])
        err = np.abs(g - fd) / np.maximum(np.abs(fd), 1e-4)
        worst = max(worst, float(err.max()))
    return worst <= 1e-4, f"max relative gradient error = {worst:.2e}"


def check_warp_round_trip(n=1000, seed=0):
    rng = np.random.default_rng(seed)
    defs = [MinMaxNumericParamDef(-5.0, 10.0), AsymptoticNumericParamDef(0.0, 1.0),
            AsymptoticNumericParamDef(1.0, 0.5, 3.0)]
    us = rng.random(n)
    worst = max(abs(d.warp_in(d.warp_out(u)) - u) for d in defs for u in us)
    return worst <= 1e-10, f"max round-trip error = {worst:.2e}"


CHECKS = {
    "ei_quadrature": check_ei_quadrature,
    "ei_gradient": check_ei_gradient,
    "warp_round_trip": check_warp_round_trip,
}


def run_all():
    return [(name, *fn()) for name, fn in CHECKS.items()]
