"""Candidates, experiments and their CSV representation."""
from __future__ import annotations

import csv
import enum
import io
import math
import re
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import (
    ConfigurationError,
    ContractError,
    DataError,
    ParamDomainError,
    UnsupportedConfigurationError,
    ValidationError,
)
from .params import NominalParamDef, ParamDef

NAME_RE = re.compile(r"^[A-Za-z0-9_]+$")
FIXED_COLUMNS = ("step", "id", "status", "result", "cost", "best_result")


class CandidateStatus(str, enum.Enum):
    FINISHED = "finished"
    PAUSING = "pausing"
    WORKING = "working"


@dataclass(eq=False)
class Candidate:
    """One hyperparameter vector, optionally with its evaluation result.

    Identity is the ``id``, not the parameter values: two candidates may
    share the same vector. Experiments assign ids to candidates that arrive
    without one.
    """

    params: dict[str, Any]
    result: float | None = None
    cost: float | None = None
    worker_info: Any = None
    id: str | None = None

    def __post_init__(self):
        self.params = dict(self.params)


def normalize_param_defs(param_defs) -> dict[str, ParamDef]:
    """Accept a mapping or an iterable of ``(name, ParamDef)`` pairs."""
    items = param_defs.items() if isinstance(param_defs, Mapping) else list(param_defs)
    defs: dict[str, ParamDef] = {}
    for name, pdef in items:
        if not isinstance(name, str) or not NAME_RE.match(name):
            raise ConfigurationError(f"dimension name {name!r} must match [A-Za-z0-9_]+")
        if name in defs:
            raise ConfigurationError(f"duplicate dimension name {name!r}")
        if not isinstance(pdef, ParamDef):
            raise ConfigurationError(f"{name!r}: {pdef!r} is not a ParamDef")
        defs[name] = pdef
    if not defs:
        raise ConfigurationError("an experiment needs at least one dimension")
    return defs


class Experiment:
    """Parameter space plus the finished / pending / working candidate lists."""

    def __init__(self, name: str, param_defs, minimization: bool = True):
        self.name = name
        self.param_defs = normalize_param_defs(param_defs)
        self.minimization = bool(minimization)
        self.finished: list[Candidate] = []
        self.pending: list[Candidate] = []
        self.working: list[Candidate] = []
        self.best: Candidate | None = None
        self._next_id = 1

    def __repr__(self):
        return (f"Experiment({self.name!r}, dims={list(self.param_defs)}, "
                f"finished={len(self.finished)}, pending={len(self.pending)}, "
                f"working={len(self.working)})")

    @property
    def dimension_names(self) -> list[str]:
        return list(self.param_defs)

    # -- validation -------------------------------------------------------

    def invalid_dimensions(self, candidate: Candidate) -> list[str]:
        names = set(self.param_defs)
        keys = set(candidate.params)
        bad = sorted(names.symmetric_difference(keys))
        bad += [n for n, d in self.param_defs.items()
                if n in keys and not d.validate(candidate.params[n])]
        return bad

    def validate_candidate(self, candidate: Candidate) -> bool:
        return not self.invalid_dimensions(candidate)

    def better(self, a: float, b: float) -> bool:
        """True if result ``a`` is strictly better than ``b``."""
        return a < b if self.minimization else a > b

    # -- state transitions --------------------------------------------------

    def _assign_id(self, candidate: Candidate):
        if candidate.id is None:
            candidate.id = str(self._next_id)
            self._next_id += 1

    def _detach(self, candidate: Candidate):
        for lst in (self.finished, self.pending, self.working):
            for i, c in enumerate(lst):
                if c is candidate or (c.id is not None and c.id == candidate.id):
                    del lst[i]
                    return

    def _recompute_best(self):
        best = None
        for c in self.finished:
            if best is None or self.better(c.result, best.result):
                best = c
        self.best = best

    def update(self, candidate: Candidate, status=CandidateStatus.FINISHED) -> "Experiment":
        """Move ``candidate`` to the list matching ``status``.

        Candidates that this experiment never produced are admitted as long
        as they fit the parameter space.
        """
        status = CandidateStatus(status)
        bad = self.invalid_dimensions(candidate)
        if bad:
            raise ValidationError(f"candidate invalid in dimensions {bad}", bad)
        if status is CandidateStatus.FINISHED:
            if candidate.result is None:
                raise ContractError("a finished candidate needs a result")
            if not math.isfinite(candidate.result):
                raise ContractError(f"result {candidate.result!r} is not finite")
        if candidate.cost is not None and not candidate.cost >= 0:
            raise ContractError("cost must be non-negative")
        self._assign_id(candidate)
        self._detach(candidate)
        target = {
            CandidateStatus.FINISHED: self.finished,
            CandidateStatus.PAUSING: self.pending,
            CandidateStatus.WORKING: self.working,
        }[status]
        target.append(candidate)
        self._recompute_best()
        return self

    def best_result_series(self) -> list[tuple[int, float]]:
        series, best = [], None
        for step, c in enumerate(self.finished, 1):
            if best is None or self.better(c.result, best):
                best = c.result
            series.append((step, best))
        return series

    # -- warped space -------------------------------------------------------

    def check_warpable(self):
        nominal = [n for n, d in self.param_defs.items() if isinstance(d, NominalParamDef)]
        if nominal:
            raise UnsupportedConfigurationError(
                f"nominal dimensions {nominal} cannot be modelled in warped space")

    def warp(self, params: Mapping[str, Any]) -> np.ndarray:
        out = np.empty(len(self.param_defs))
        for i, (name, pdef) in enumerate(self.param_defs.items()):
            if name not in params:
                raise ParamDomainError(f"dimension {name!r} is missing")
            try:
                out[i] = pdef.warp_in(params[name])
            except ParamDomainError as exc:
                raise ParamDomainError(f"dimension {name!r}: {exc}") from exc
        return out

    def unwarp(self, point) -> dict[str, Any]:
        point = np.clip(np.asarray(point, dtype=float), 0.0, 1.0)
        return {name: pdef.warp_out(float(u))
                for (name, pdef), u in zip(self.param_defs.items(), point)}

    # -- CSV ----------------------------------------------------------------

    def to_csv(self) -> str:
        return to_csv(self)


def format_value(value) -> str:
    """Shortest round-trip text for a CSV cell; integral floats lose '.0'."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        text = repr(float(value))
        return text[:-2] if text.endswith(".0") else text
    return str(value)


def to_csv(experiment: Experiment) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(FIXED_COLUMNS) + experiment.dimension_names)
    series = experiment.best_result_series()
    for (step, best), c in zip(series, experiment.finished):
        writer.writerow(
            [step, c.id, CandidateStatus.FINISHED.value, format_value(float(c.result)),
             format_value(None if c.cost is None else float(c.cost)), format_value(float(best))]
            + [format_value(c.params[n]) for n in experiment.dimension_names]
        )
    return buf.getvalue()


def _parse_cell(pdef: ParamDef, cell: str):
    if hasattr(pdef, "values"):
        for v in pdef.values:
            if format_value(v) == cell:
                return v
        raise DataError(f"{cell!r} is not a value of {pdef!r}")
    return float(cell)


def parse_csv(text: str, param_defs) -> list[dict[str, Any]]:
    """Parse :func:`to_csv` output back into row dicts.

    Each row has the fixed columns (typed) and a ``params`` dict whose
    values are mapped back to the definitions' own tokens.
    """
    defs = normalize_param_defs(param_defs)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV document")
    expected = list(FIXED_COLUMNS) + list(defs)
    if header != expected:
        raise DataError(f"header {header} does not match {expected}")
    rows = []
    for cells in reader:
        if len(cells) != len(header):
            raise DataError(f"row {cells} has {len(cells)} cells, expected {len(header)}")
        rows.append({
            "step": int(cells[0]),
            "id": cells[1],
            "status": cells[2],
            "result": float(cells[3]),
            "cost": float(cells[4]) if cells[4] else None,
            "best_result": float(cells[5]),
            "params": {n: _parse_cell(d, cell) for (n, d), cell in zip(defs.items(), cells[6:])},
        })
    return rows


def experiment_from_csv(name: str, param_defs, text: str, minimization: bool = True) -> Experiment:
    """Rebuild an experiment's finished history from its CSV."""
    exp = Experiment(name, param_defs, minimization)
    for row in parse_csv(text, exp.param_defs):
        exp.update(Candidate(row["params"], row["result"], row["cost"], id=row["id"]))
    ids = [int(c.id) for c in exp.finished if c.id.isdigit()]
    exp._next_id = max(ids, default=0) + 1
    return exp
