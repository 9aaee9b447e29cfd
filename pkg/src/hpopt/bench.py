"""Benchmark objectives and the seeded optimizer-comparison harness."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import svgplot
from .assistants import LabAssistant, atomic_write
from .errors import ConfigurationError, HpoptError
from .experiment import format_value
from .optimizers import OPTIMIZERS, derive_seed
from .params import MinMaxNumericParamDef

logger = logging.getLogger(__name__)

BRANIN_BOUNDS = ((-5.0, 10.0), (0.0, 15.0))
MAX_GRID_CELLS = 10_000_000
AGGREGATE_QUANTILES = (12.5, 87.5)  # central 75 % band


def branin(x: float, y: float) -> float:
    """Branin-Hoo function; three global minima of value ~0.397887."""
    b = 5.1 / (4.0 * math.pi ** 2)
    c = 5.0 / math.pi
    t = 1.0 / (8.0 * math.pi)
    return (y - b * x * x + c * x - 6.0) ** 2 + 10.0 * (1.0 - t) * math.cos(x) + 10.0


BRANIN_MINIMUM = branin(math.pi, 2.275)


@dataclass(frozen=True, eq=False)
class Objective:
    """A function to be minimized over a box, addressed by named dimensions."""

    name: str
    bounds: tuple[tuple[float, float], ...]
    func: Callable[[np.ndarray], float]
    dim_names: tuple[str, ...]

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def param_defs(self) -> dict[str, MinMaxNumericParamDef]:
        return {n: MinMaxNumericParamDef(lo, hi) for n, (lo, hi) in zip(self.dim_names, self.bounds)}

    def __call__(self, params: dict[str, Any]) -> float:
        return float(self.func(np.array([params[n] for n in self.dim_names], dtype=float)))


def branin_objective() -> Objective:
    return Objective("branin", BRANIN_BOUNDS, lambda v: branin(v[0], v[1]), ("x", "y"))


def default_grid_points(n: int) -> int:
    return 20 if n <= 2 else 8


def default_neighbor_cutoff(n: int) -> int:
    return min(2 ** n * 2, 64)


@dataclass(frozen=True, eq=False)
class NoiseFunction:
    """Random grid values on [0, 1]**n, smoothed by Gaussian-weighted averaging.

    Only the ``neighbor_cutoff`` nearest grid nodes enter each evaluation.
    The grid depends on the seed alone, so functions that differ only in
    ``smoothing_variance`` share it.
    """

    dimension: int
    grid_points_per_dim: int
    grid_values: np.ndarray = field(repr=False)
    smoothing_variance: float
    neighbor_cutoff: int
    nodes: np.ndarray = field(repr=False)

    def __call__(self, point) -> float:
        p = np.asarray(point, dtype=float).ravel()
        if p.size != self.dimension:
            raise ConfigurationError(f"point has {p.size} coordinates, expected {self.dimension}")
        d2 = ((self.nodes - p) ** 2).sum(axis=1)
        k = min(self.neighbor_cutoff, d2.size)
        idx = np.argsort(d2, kind="stable")[:k]
        near = d2[idx]
        # shift by the nearest distance so tiny variances do not underflow
        w = np.exp(-(near - near[0]) / (2.0 * self.smoothing_variance))
        vals = self.grid_values.ravel()[idx]
        return float(w @ vals / w.sum())


def make_noise_function(n: int, grid_points_per_dim: int | None = None, seed: int = 0,
                        smoothing_variance: float = 0.01,
                        neighbor_cutoff: int | None = None) -> NoiseFunction:
    if n < 1:
        raise ConfigurationError("noise dimension must be >= 1")
    g = default_grid_points(n) if grid_points_per_dim is None else int(grid_points_per_dim)
    if g < 2:
        raise ConfigurationError("need at least 2 grid points per dimension")
    if g ** n > MAX_GRID_CELLS:
        raise ConfigurationError(f"grid of {g}**{n} cells exceeds {MAX_GRID_CELLS}")
    if not smoothing_variance > 0:
        raise ConfigurationError("smoothing_variance must be positive")
    k = default_neighbor_cutoff(n) if neighbor_cutoff is None else int(neighbor_cutoff)
    if k < 1:
        raise ConfigurationError("neighbor_cutoff must be >= 1")
    values = np.random.default_rng(seed).random(g ** n).reshape((g,) * n)
    axis = np.linspace(0.0, 1.0, g)
    nodes = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    return NoiseFunction(n, g, values, float(smoothing_variance), k, nodes)


def noise_eval(f: NoiseFunction, point) -> float:
    return f(point)


def noise_objective(n: int, seed: int, smoothing_variance: float,
                    grid_points_per_dim: int | None = None) -> Objective:
    f = make_noise_function(n, grid_points_per_dim, seed, smoothing_variance)
    return Objective(f"noise{n}d", ((0.0, 1.0),) * n, f, tuple(f"x{i}" for i in range(n)))


@dataclass(frozen=True)
class RunConfig:
    objective: str = "branin"
    optimizers: tuple[str, ...] = ("random", "bayes")
    steps: int = 30
    seeds: int = 1
    base_seed: int = 0
    shared_initial: int = 10
    zeta: float = 0.0
    kernel: str = "matern52"
    noise_dim: int = 3
    noise_variance: float = 0.01
    grid_points: int | None = None
    out_dir: str | None = None
    # extra settings merged into the Bayesian optimizer's parameter document
    bayes_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.objective not in ("branin", "noise"):
            raise ConfigurationError(f"unknown objective {self.objective!r}")
        if not self.optimizers:
            raise ConfigurationError("need at least one optimizer")
        for name in self.optimizers:
            if name not in OPTIMIZERS:
                raise ConfigurationError(f"unknown optimizer {name!r}")
        if len(set(self.optimizers)) != len(self.optimizers):
            raise ConfigurationError("optimizer list has duplicates")
        if self.steps < 1 or self.seeds < 1:
            raise ConfigurationError("steps and seeds must be >= 1")
        if self.shared_initial < 0 or self.steps < self.shared_initial:
            raise ConfigurationError("need 0 <= shared_initial <= steps")


@dataclass
class SeedResult:
    seed: int
    values: dict[str, list[float]]
    best: dict[str, list[float]]


@dataclass
class RunResult:
    config: RunConfig
    per_seed: list[SeedResult]
    aggregate: dict[str, dict[str, list[float]]]
    files: list[Path]

    def final_best(self, optimizer: str) -> np.ndarray:
        return np.array([s.best[optimizer][-1] for s in self.per_seed])


class RunFailure(HpoptError):
    def __init__(self, seed, cause):
        super().__init__(f"seed {seed} failed: {cause}")
        self.seed = seed
        self.cause = cause


def build_objective(config: RunConfig, seed: int) -> Objective:
    if config.objective == "branin":
        return branin_objective()
    return noise_objective(config.noise_dim, seed, config.noise_variance, config.grid_points)


def _optimizer_params(config: RunConfig, name: str, seed: int) -> dict:
    if name == "bayes":
        doc = {"seed": seed, "acquisition": {"zeta": config.zeta}, "gp": {"kernel": config.kernel}}
        for key, value in config.bayes_params.items():
            if isinstance(value, dict) and isinstance(doc.get(key), dict):
                doc[key] = {**doc[key], **value}
            else:
                doc[key] = value
        return doc
    return {"seed": seed}


def run_seed(config: RunConfig, seed: int, out_dir: Path | None = None) -> SeedResult:
    """One repetition: every optimizer on the same objective and shared start."""
    objective = build_objective(config, seed)
    defs = objective.param_defs()
    lab = LabAssistant()
    opt_seed = derive_seed(seed, 1)
    for name in config.optimizers:
        lab.init_experiment(name, name, _optimizer_params(config, name, opt_seed), defs,
                            minimization=True)
    lab.inject_shared_initial(config.shared_initial, derive_seed(seed, 0))
    for step in range(config.steps):
        for name, assistant in lab.assistants.items():
            candidate = assistant.get_next_candidate()
            candidate.result = objective(candidate.params)
            assistant.tell(candidate)
        logger.debug("seed %d step %d done", seed, step + 1)
    if out_dir is not None:
        lab.compare_and_emit(out_dir)
    return SeedResult(
        seed,
        {n: [c.result for c in a.experiment.finished] for n, a in lab.assistants.items()},
        {n: [b for _, b in a.best_result_series()] for n, a in lab.assistants.items()},
    )


def aggregate(per_seed: Sequence[SeedResult], optimizers) -> dict[str, dict[str, list[float]]]:
    """Per-step mean and central 75 % interval of the best-so-far series."""
    out = {}
    for name in optimizers:
        best = np.array([s.best[name] for s in per_seed])
        lo, hi = np.percentile(best, AGGREGATE_QUANTILES, axis=0)
        out[name] = {"mean": best.mean(axis=0).tolist(), "low": lo.tolist(), "high": hi.tolist()}
    return out


def aggregate_csv(agg: dict[str, dict[str, list[float]]]) -> str:
    names = list(agg)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["step"] + [f"{n}_{k}" for n in names for k in ("mean", "low", "high")])
    steps = len(next(iter(agg.values()))["mean"])
    for i in range(steps):
        writer.writerow([i + 1] + [format_value(float(agg[n][k][i]))
                                   for n in names for k in ("mean", "low", "high")])
    return buf.getvalue()


def run_comparison(config: RunConfig) -> RunResult:
    """Run every seed, emit per-seed comparison files and the aggregate."""
    out = Path(config.out_dir) if config.out_dir else None
    per_seed, files = [], []
    for i in range(config.seeds):
        seed = config.base_seed + i
        seed_dir = out / f"seed_{seed}" if out else None
        try:
            per_seed.append(run_seed(config, seed, seed_dir))
        except ConfigurationError:
            raise
        except Exception as exc:
            if seed_dir is not None:
                atomic_write(seed_dir / "FAILED", f"{type(exc).__name__}: {exc}\n")
            raise RunFailure(seed, exc) from exc
    agg = aggregate(per_seed, config.optimizers)
    if out is not None:
        for s in per_seed:
            d = out / f"seed_{s.seed}"
            files += sorted(p for p in d.rglob("*") if p.is_file())
        atomic_write(out / "aggregate.csv", aggregate_csv(agg))
        series = {n: [(i + 1.0, v) for i, v in enumerate(agg[n]["mean"])] for n in agg}
        bands = {n: [(i + 1.0, lo, hi) for i, (lo, hi) in enumerate(zip(agg[n]["low"], agg[n]["high"]))]
                 for n in agg}
        title = f"{config.objective}: mean best result over {config.seeds} seeds"
        atomic_write(out / "aggregate.svg", svgplot.line_chart(series, title=title, bands=bands))
        files += [out / "aggregate.csv", out / "aggregate.svg"]
    return RunResult(config, per_seed, agg, files)
