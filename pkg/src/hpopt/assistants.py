"""Ask/tell façade over experiments and optimizers.

An :class:`ExperimentAssistant` owns one experiment and its optimizer. A
:class:`LabAssistant` runs several experiments over the same parameter space
side by side and emits comparison data (CSV and SVG).
"""
from __future__ import annotations

import csv
import io
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from . import svgplot
from .errors import ConfigurationError, HpoptError
from .experiment import Candidate, CandidateStatus, Experiment, format_value
from .optimizers import Optimizer, make_optimizer, random_propose

EXPERIMENT_NAME_RE = re.compile(r"^[A-Za-z0-9_-]+$")
WRITE_POLICIES = ("on_update", "on_demand")


def atomic_write(path, text: str):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ExperimentAssistant:
    def __init__(self, experiment: Experiment, optimizer: Optimizer, csv_path=None,
                 write_policy: str = "on_update"):
        if set(experiment.param_defs) != set(optimizer.param_defs):
            raise ConfigurationError("experiment and optimizer disagree on the dimensions")
        if write_policy not in WRITE_POLICIES:
            raise ConfigurationError(f"write_policy must be one of {WRITE_POLICIES}")
        self.experiment = experiment
        self.optimizer = optimizer
        self.csv_path = None if csv_path is None else Path(csv_path)
        self.write_policy = write_policy

    @property
    def name(self) -> str:
        return self.experiment.name

    def get_next_candidate(self) -> Candidate:
        """Ask the optimizer for a candidate and record it as pending."""
        candidate = self.optimizer.get_next_candidates(self.experiment, 1)[0]
        self.experiment.update(candidate, CandidateStatus.PAUSING)
        return candidate

    def tell(self, candidate: Candidate, status=CandidateStatus.FINISHED):
        """Report progress on, or the result of, a candidate."""
        status = CandidateStatus(status)
        self.experiment.update(candidate, status)
        if (status is CandidateStatus.FINISHED and self.write_policy == "on_update"
                and self.csv_path is not None):
            self.write_csv()

    # keep the classic name around for callers used to it
    update = tell

    def best_candidate(self) -> Candidate | None:
        return self.experiment.best

    def best_result_series(self) -> list[tuple[int, float]]:
        return self.experiment.best_result_series()

    def to_csv(self) -> str:
        return self.experiment.to_csv()

    def write_csv(self, path=None) -> Path:
        path = Path(path) if path is not None else self.csv_path
        if path is None:
            raise ConfigurationError("no CSV path configured")
        atomic_write(path, self.to_csv())
        return path


def init_experiment(name: str, optimizer: str, optimizer_params, param_defs,
                    minimization: bool = True, csv_path=None,
                    write_policy: str = "on_update") -> ExperimentAssistant:
    """Create an experiment and its optimizer behind a fresh assistant."""
    if not EXPERIMENT_NAME_RE.match(name or ""):
        raise ConfigurationError(f"experiment name {name!r} must match [A-Za-z0-9_-]+")
    experiment = Experiment(name, param_defs, minimization)
    opt = make_optimizer(optimizer, experiment.param_defs, optimizer_params)
    return ExperimentAssistant(experiment, opt, csv_path, write_policy)


class LabAssistant:
    def __init__(self):
        self.assistants: dict[str, ExperimentAssistant] = {}
        self.shared_initial: list[dict] = []

    def __getitem__(self, name) -> ExperimentAssistant:
        return self.assistants[name]

    def add(self, assistant: ExperimentAssistant) -> ExperimentAssistant:
        if assistant.name in self.assistants:
            raise ConfigurationError(f"experiment {assistant.name!r} already exists")
        self.assistants[assistant.name] = assistant
        return assistant

    def init_experiment(self, name, optimizer, optimizer_params, param_defs,
                        minimization=True, **kwargs) -> ExperimentAssistant:
        return self.add(init_experiment(name, optimizer, optimizer_params, param_defs,
                                        minimization, **kwargs))

    def get_next_candidate(self, name) -> Candidate:
        return self.assistants[name].get_next_candidate()

    def tell(self, name, candidate, status=CandidateStatus.FINISHED):
        self.assistants[name].tell(candidate, status)

    def inject_shared_initial(self, count: int, seed: int):
        """Make the first ``count`` proposals of every experiment identical."""
        if count <= 0:
            return
        if not self.assistants:
            raise ConfigurationError("no experiments")
        first, *others = self.assistants.values()
        for a in others:
            if a.experiment.param_defs != first.experiment.param_defs:
                raise ConfigurationError(
                    f"experiments {first.name!r} and {a.name!r} have different parameter spaces")
        for a in self.assistants.values():
            e = a.experiment
            if e.finished or e.pending or e.working:
                raise ConfigurationError(f"experiment {a.name!r} has already started")
        rng = np.random.default_rng(seed)
        drawn = [random_propose(first.experiment, rng).params for _ in range(count)]
        self.shared_initial = drawn
        for a in self.assistants.values():
            a.optimizer.force_next(drawn)

    def comparison_csv(self) -> str:
        names = list(self.assistants)
        series = {n: self.assistants[n].best_result_series() for n in names}
        steps = max((len(s) for s in series.values()), default=0)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["step"] + names)
        for i in range(steps):
            writer.writerow([i + 1] + [format_value(float(series[n][i][1])) if i < len(series[n]) else ""
                                       for n in names])
        return buf.getvalue()

    def comparison_svg(self, title: str = "best result per step") -> str:
        series = {n: [(float(s), float(v)) for s, v in a.best_result_series()]
                  for n, a in self.assistants.items()}
        return svgplot.line_chart(series, title=title)

    def compare_and_emit(self, out_dir) -> list[Path]:
        """Write per-experiment CSVs plus the combined comparison CSV and SVG."""
        if not self.assistants:
            raise HpoptError("no experiments")
        out_dir = Path(out_dir)
        written = []
        for name, a in self.assistants.items():
            written.append(a.write_csv(out_dir / name / "results.csv"))
        for fname, text in (("comparison.csv", self.comparison_csv()),
                            ("comparison.svg", self.comparison_svg())):
            atomic_write(out_dir / fname, text)
            written.append(out_dir / fname)
        return written
