"""Proposal strategies: random search and GP/EI Bayesian optimization."""
from __future__ import annotations

import dataclasses
import logging
from abc import ABC, abstractmethod
from typing import Any, Mapping

import numpy as np

from . import gp
from .acq_optimizer import AcqOptConfig, maximize
from .acquisition import AcquisitionConfig, acquisition_function
from .errors import ConfigurationError, NumericalError
from .experiment import Candidate, Experiment, normalize_param_defs

logger = logging.getLogger(__name__)

PENDING_TOL = 1e-9
PENDING_PERTURBATION = 1e-3


def derive_seed(*keys: int) -> int:
    """Deterministic 32-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def random_propose(experiment: Experiment, rng) -> Candidate:
    """Draw every dimension uniformly (numeric ones in warped space)."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return Candidate({name: pdef.sample(rng) for name, pdef in experiment.param_defs.items()})


@dataclasses.dataclass(frozen=True)
class BayesianParams:
    initial_random_count: int = 10
    acquisition: AcquisitionConfig = AcquisitionConfig()
    gp: gp.GPFitConfig = gp.GPFitConfig()
    acq_opt: AcqOptConfig = AcqOptConfig()
    seed: int = 0

    def __post_init__(self):
        if self.initial_random_count < 1:
            raise ConfigurationError("initial_random_count must be >= 1")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any] | None) -> "BayesianParams":
        doc = dict(doc or {})
        unknown = set(doc) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown Bayesian optimizer settings {sorted(unknown)}")
        nested = {"acquisition": AcquisitionConfig, "gp": gp.GPFitConfig, "acq_opt": AcqOptConfig}
        for key, cls_ in nested.items():
            if isinstance(doc.get(key), Mapping):
                doc[key] = cls_.from_dict(doc[key])
        return cls(**doc)


def _training_data(experiment: Experiment):
    X = np.array([experiment.warp(c.params) for c in experiment.finished])
    y = np.array([c.result for c in experiment.finished], dtype=float)
    if not experiment.minimization:
        y = -y
    return X, y


def fit_surrogate(experiment: Experiment, params: BayesianParams, seed: int):
    """Fit the GP to the finished history, standardized for minimization.

    Returns ``(model, incumbent)`` where the incumbent is the best finished
    result in the model's (standardized, minimization) units.
    """
    X, y = _training_data(experiment)
    scale = y.std()
    y = (y - y.mean()) / (scale if scale > 0 else 1.0)
    model = gp.fit(X, y, dataclasses.replace(params.gp, seed=seed))
    return model, float(y.min())


def bo_propose(experiment: Experiment, params: BayesianParams, seed: int | None = None,
               fitted=None) -> Candidate:
    """One model-based proposal: fit, maximize the acquisition, unwarp.

    ``seed`` defaults to one derived from ``params.seed`` and the number of
    finished candidates, so the proposal is a function of the experiment
    state. ``fitted`` may carry a precomputed ``(model, incumbent)``.
    """
    experiment.check_warpable()
    if seed is None:
        seed = derive_seed(params.seed, len(experiment.finished))
    try:
        model, incumbent = fitted or fit_surrogate(experiment, params, seed)
    except NumericalError as exc:
        logger.warning("GP fit failed (%s); falling back to a random proposal", exc)
        cand = random_propose(experiment, np.random.default_rng(seed))
        cand.worker_info = {"warning": f"GP fit failed, random proposal: {exc}"}
        return cand

    # the surrogate always models a minimization target
    acq = dataclasses.replace(params.acquisition, max_flag=0)
    u = acquisition_function(model, incumbent, acq)
    result = maximize(u, model.dim, dataclasses.replace(params.acq_opt, seed=seed), jac=True)
    x = result.x

    for c in experiment.pending:
        if np.all(np.abs(experiment.warp(c.params) - x) <= PENDING_TOL):
            rng = np.random.default_rng(derive_seed(seed, 1))
            x = np.clip(x + rng.uniform(-PENDING_PERTURBATION, PENDING_PERTURBATION, x.size), 0.0, 1.0)
            break
    return Candidate(experiment.unwarp(x))


class Optimizer(ABC):
    """Common interface: propose candidates for an experiment.

    ``force_next`` queues parameter vectors that are handed out before any
    strategy-specific proposal (used for initial samples shared between
    optimizers).
    """

    name = "optimizer"

    def __init__(self, param_defs, params: Mapping[str, Any] | None = None):
        self.param_defs = normalize_param_defs(param_defs)
        self._forced: list[dict[str, Any]] = []

    def force_next(self, params_list):
        self._forced.extend(dict(p) for p in params_list)

    @property
    def forced_remaining(self) -> int:
        return len(self._forced)

    def get_next_candidates(self, experiment: Experiment, count: int = 1) -> list[Candidate]:
        if count < 1:
            raise ConfigurationError("count must be >= 1")
        out = []
        while self._forced and len(out) < count:
            out.append(Candidate(self._forced.pop(0)))
        if len(out) < count:
            out.extend(self._propose(experiment, count - len(out)))
        return out

    @abstractmethod
    def _propose(self, experiment: Experiment, count: int) -> list[Candidate]:
        ...


class RandomSearch(Optimizer):
    name = "random"

    def __init__(self, param_defs, params=None):
        super().__init__(param_defs, params)
        params = dict(params or {})
        unknown = set(params) - {"seed"}
        if unknown:
            raise ConfigurationError(f"unknown random search settings {sorted(unknown)}")
        self.seed = int(params.get("seed", 0))
        self.rng = np.random.default_rng(self.seed)

    def _propose(self, experiment, count):
        return [random_propose(experiment, self.rng) for _ in range(count)]


class BayesianOptimizer(Optimizer):
    """GP surrogate with EI (or PI), one model-based proposal per call.

    Until ``initial_random_count`` results are in, proposals come from the
    same random stream a :class:`RandomSearch` with the same seed would use.
    With ``count > 1`` the extra candidates are random: the surrogate only
    supports one worker at a time.
    """

    name = "bayes"

    def __init__(self, param_defs, params=None):
        super().__init__(param_defs, params)
        self.params = params if isinstance(params, BayesianParams) else BayesianParams.from_dict(params)
        Experiment("_space_check", self.param_defs).check_warpable()
        self.rng = np.random.default_rng(self.params.seed)
        self.last_model = None

    def _propose(self, experiment, count):
        if len(experiment.finished) < self.params.initial_random_count:
            return [random_propose(experiment, self.rng) for _ in range(count)]
        seed = derive_seed(self.params.seed, len(experiment.finished))
        try:
            fitted = fit_surrogate(experiment, self.params, seed)
            self.last_model = fitted[0]
        except NumericalError:
            fitted = None
        out = [bo_propose(experiment, self.params, seed, fitted)]
        out.extend(random_propose(experiment, self.rng) for _ in range(count - 1))
        return out


OPTIMIZERS = {"random": RandomSearch, "bayes": BayesianOptimizer}


def make_optimizer(name: str, param_defs, params=None) -> Optimizer:
    try:
        cls = OPTIMIZERS[name]
    except KeyError:
        raise ConfigurationError(f"unknown optimizer {name!r}; choose from {sorted(OPTIMIZERS)}")
    return cls(param_defs, params)
