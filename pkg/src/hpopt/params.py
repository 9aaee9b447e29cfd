"""Hyperparameter dimension definitions.

Every numeric dimension is represented internally by a warping onto the unit
interval; the surrogate model and the acquisition optimizer only ever see
warped coordinates. Nominal dimensions have no order and no warping.
"""
from __future__ import annotations

import math
import numbers
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ParamDomainError, UnsupportedOperationError

# warp_in clamps inputs this close (relative to the range scale) to a bound
_CLAMP_RTOL = 1e-12


def _cmp(a, b) -> int:
    return (a > b) - (a < b)


def _is_real(value) -> bool:
    return (
        isinstance(value, numbers.Real)
        and not isinstance(value, (bool, np.bool_))
        and math.isfinite(value)
    )


def _check_unit(u) -> float:
    if not _is_real(u) or not 0.0 <= u <= 1.0:
        raise ParamDomainError(f"warped coordinate {u!r} is outside [0, 1]")
    return float(u)


class ParamDef(ABC):
    """Definition of one hyperparameter dimension."""

    @abstractmethod
    def validate(self, value) -> bool:
        """Return True iff ``value`` lies in this dimension's domain."""

    @abstractmethod
    def sample(self, rng: np.random.Generator):
        """Draw one value uniformly (in warped space for numeric dimensions)."""


class ComparableParamDef(ParamDef):
    """A dimension whose values are ordered."""

    @abstractmethod
    def compare_values(self, a, b) -> int:
        """Return -1, 0 or 1 in the manner of the old ``cmp`` builtin."""


def _same_token(a, b) -> bool:
    # keep True from matching 1
    return isinstance(a, bool) == isinstance(b, bool) and a == b


def _contains(values: tuple, value) -> bool:
    try:
        return any(_same_token(v, value) for v in values)
    except (TypeError, ValueError):
        return False


def _check_token_list(values: Sequence, kind: str) -> tuple:
    values = tuple(values)
    if not values:
        raise ConfigurationError(f"{kind} parameter needs at least one value")
    for i, v in enumerate(values):
        if _contains(values[:i], v):
            raise ConfigurationError(f"{kind} parameter has duplicate value {v!r}")
    return values


@dataclass(frozen=True)
class NominalParamDef(ParamDef):
    """Unordered set of opaque tokens."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", _check_token_list(self.values, "nominal"))

    def validate(self, value) -> bool:
        return _contains(self.values, value)

    def sample(self, rng):
        return self.values[int(rng.integers(len(self.values)))]


@dataclass(frozen=True)
class OrdinalParamDef(ComparableParamDef):
    """Ordered tokens; the order is the position in ``values``."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", _check_token_list(self.values, "ordinal"))

    def validate(self, value) -> bool:
        return _contains(self.values, value)

    def index(self, value) -> int:
        if not self.validate(value):
            raise ParamDomainError(f"{value!r} is not one of {list(self.values)}")
        return next(i for i, v in enumerate(self.values) if _same_token(v, value))

    def compare_values(self, a, b) -> int:
        return _cmp(self.index(a), self.index(b))

    def sample(self, rng):
        return self.values[int(rng.integers(len(self.values)))]

    # Ordinal dimensions take part in the surrogate via their index.
    def warp_in(self, value) -> float:
        n = len(self.values)
        return 0.0 if n == 1 else self.index(value) / (n - 1)

    def warp_out(self, u: float):
        u = _check_unit(u)
        return self.values[int(round(u * (len(self.values) - 1)))]


class NumericParamDef(ComparableParamDef):
    """Real-valued dimension defined through a warping onto [0, 1].

    Subclasses provide the raw maps ``_to_unit`` and ``_from_unit``; this class
    adds range checks, clamping of round-off at the bounds, and comparison in
    warped space.
    """

    @property
    def low(self) -> float:
        """Smallest admissible value."""
        return min(self._from_unit(0.0), self._from_unit(1.0))

    @property
    def high(self) -> float:
        """Largest admissible value."""
        return max(self._from_unit(0.0), self._from_unit(1.0))

    @abstractmethod
    def _to_unit(self, value: float) -> float:
        ...

    @abstractmethod
    def _from_unit(self, u: float) -> float:
        ...

    def _tolerance(self) -> float:
        lo, hi = self.low, self.high
        return _CLAMP_RTOL * max(1.0, abs(lo), abs(hi))

    def validate(self, value) -> bool:
        if not _is_real(value):
            return False
        tol = self._tolerance()
        return self.low - tol <= value <= self.high + tol

    def warp_in(self, value) -> float:
        if not self.validate(value):
            raise ParamDomainError(
                f"value {value!r} outside [{self.low!r}, {self.high!r}]"
            )
        value = min(max(float(value), self.low), self.high)
        return min(max(self._to_unit(value), 0.0), 1.0)

    def warp_out(self, u) -> float:
        return self._from_unit(_check_unit(u))

    def compare_values(self, a, b) -> int:
        return _cmp(self.warp_in(a), self.warp_in(b))

    def sample(self, rng) -> float:
        return self.warp_out(float(rng.random()))


@dataclass(frozen=True, eq=False)
class CustomNumericParamDef(NumericParamDef):
    """Numeric dimension with user supplied, mutually inverse warps.

    ``warp_out_fn`` must be monotone on [0, 1]; the admissible range is the
    image of the endpoints.
    """

    warp_in_fn: Callable[[float], float]
    warp_out_fn: Callable[[float], float]

    def _to_unit(self, value):
        return float(self.warp_in_fn(value))

    def _from_unit(self, u):
        return float(self.warp_out_fn(u))


@dataclass(frozen=True)
class MinMaxNumericParamDef(NumericParamDef):
    """Values spread uniformly between ``lower`` and ``upper``."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (_is_real(self.lower) and _is_real(self.upper)):
            raise ConfigurationError("bounds must be finite reals")
        if not self.lower < self.upper:
            raise ConfigurationError(
                f"lower ({self.lower}) must be strictly below upper ({self.upper})"
            )

    @property
    def low(self):
        return float(self.lower)

    @property
    def high(self):
        return float(self.upper)

    def _to_unit(self, value):
        return (value - self.lower) / (self.upper - self.lower)

    def _from_unit(self, u):
        if u == 1.0:
            return float(self.upper)
        return self.lower + u * (self.upper - self.lower)


@dataclass(frozen=True)
class AsymptoticNumericParamDef(NumericParamDef):
    """Values expected close to ``asymptote``, e.g. a learning rate near 0.

    Warped coordinate 0 maps to ``border`` and coordinate 1 to
    ``asymptote + (border - asymptote) * 10**-decades``; in between the
    distance to the asymptote shrinks log-uniformly, so uniform sampling in
    warped space covers every decade equally.

    Values are stored as absolute floats, so with a non-zero asymptote the
    innermost decades are only resolved while ``|border - asymptote| *
    10**-decades`` stays well above the round-off of ``asymptote``.
    """

    asymptote: float
    border: float
    decades: float = 7.0

    def __post_init__(self):
        if not all(_is_real(v) for v in (self.asymptote, self.border, self.decades)):
            raise ConfigurationError("asymptote, border and decades must be finite reals")
        if self.asymptote == self.border:
            raise ConfigurationError("asymptote and border must differ")
        if self.decades <= 0:
            raise ConfigurationError("decades must be positive")

    def _from_unit(self, u):
        if u == 0.0:
            return float(self.border)
        span = self.border - self.asymptote
        return self.asymptote + span * 10.0 ** (-self.decades * u)

    def _to_unit(self, value):
        ratio = (value - self.asymptote) / (self.border - self.asymptote)
        if ratio <= 0.0:
            return 1.0
        return -math.log10(ratio) / self.decades


# ---------------------------------------------------------------------------
# functional interface


def warp_in(pdef: ParamDef, value) -> float:
    if not hasattr(pdef, "warp_in"):
        raise UnsupportedOperationError(f"{type(pdef).__name__} has no warping")
    return pdef.warp_in(value)


def warp_out(pdef: ParamDef, u: float):
    if not hasattr(pdef, "warp_out"):
        raise UnsupportedOperationError(f"{type(pdef).__name__} has no warping")
    return pdef.warp_out(u)


def sample_uniform(pdef: ParamDef, rng: np.random.Generator):
    return pdef.sample(rng)


def validate(pdef: ParamDef, value) -> bool:
    return pdef.validate(value)


def compare_values(pdef: ParamDef, a, b) -> int:
    if not isinstance(pdef, ComparableParamDef):
        raise UnsupportedOperationError(
            f"values of a {type(pdef).__name__} cannot be compared"
        )
    return pdef.compare_values(a, b)


# ---------------------------------------------------------------------------
# JSON documents

_KINDS = {
    "nominal": NominalParamDef,
    "ordinal": OrdinalParamDef,
    "minmax": MinMaxNumericParamDef,
    "asymptotic": AsymptoticNumericParamDef,
}


def param_def_to_dict(name: str, pdef: ParamDef) -> dict[str, Any]:
    """Serialize one named definition to a JSON-compatible dict."""
    if isinstance(pdef, NominalParamDef):
        return {"name": name, "kind": "nominal", "values": list(pdef.values)}
    if isinstance(pdef, OrdinalParamDef):
        return {"name": name, "kind": "ordinal", "values": list(pdef.values)}
    if isinstance(pdef, MinMaxNumericParamDef):
        return {"name": name, "kind": "minmax", "lower": pdef.lower, "upper": pdef.upper}
    if isinstance(pdef, AsymptoticNumericParamDef):
        return {
            "name": name,
            "kind": "asymptotic",
            "asymptote": pdef.asymptote,
            "border": pdef.border,
            "decades": pdef.decades,
        }
    raise UnsupportedOperationError(f"{type(pdef).__name__} is not serializable")


def param_def_from_dict(doc: dict[str, Any]) -> tuple[str, ParamDef]:
    """Inverse of :func:`param_def_to_dict`."""
    try:
        name, kind = doc["name"], doc["kind"]
        cls = _KINDS[kind]
    except KeyError as exc:
        raise ConfigurationError(f"bad parameter document {doc!r}: missing/unknown {exc}")
    if kind in ("nominal", "ordinal"):
        return name, cls(tuple(doc["values"]))
    if kind == "minmax":
        return name, cls(doc["lower"], doc["upper"])
    return name, cls(doc["asymptote"], doc["border"], doc.get("decades", 7.0))
