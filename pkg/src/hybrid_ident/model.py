"""Parameter spaces, experimental data containers and forward models.

The forward models here are synthetic stand-ins: a linear viscoelastic creep
law (``creep3``) and a deliberately sloppy polynomial model (``sloppy4``) whose
"restricted" test cannot separate two of its parameters.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DegenerateWeightError,
    DimensionError,
    ModelDomainError,
    UnknownSensorError,
)


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered parameter names with their box bounds."""

    names: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        lower = _frozen(self.lower).reshape(-1)
        upper = _frozen(self.upper).reshape(-1)
        if not (len(names) == lower.size == upper.size):
            raise DimensionError(
                f"{len(names)} names but {lower.size} lower and {upper.size} upper bounds"
            )
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate parameter names in {names}")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ConfigError("bounds must be finite")
        bad = [n for n, lo, hi in zip(names, lower, upper) if not lo < hi]
        if bad:
            raise ConfigError(f"lower bound must be below upper bound for {bad}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def count(self) -> int:
        return len(self.names)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    def index(self, name: str) -> int:
        return self.names.index(name)

    def with_bounds(self, lower, upper) -> "ParameterSpace":
        return ParameterSpace(self.names, lower, upper)

    def subspace(self, names: Sequence[str]) -> "ParameterSpace":
        idx = [self.index(n) for n in names]
        return ParameterSpace(tuple(names), self.lower[idx], self.upper[idx])


def clamp_to_bounds(theta, space: ParameterSpace) -> np.ndarray:
    """Project ``theta`` componentwise onto the box of ``space``."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (space.count,):
        raise DimensionError(f"expected {space.count} parameters, got shape {theta.shape}")
    return np.clip(theta, space.lower, space.upper)


@dataclass(frozen=True)
class TestDefinition:
    """One experimental test: acquisition instants per sensor plus the loading.

    ``loading`` is passed untouched to the forward model.
    """

    __test__ = False  # keep pytest from collecting this class

    test_id: str
    times: Mapping[str, np.ndarray]
    loading: Mapping = field(default_factory=dict)

    def __post_init__(self):
        times = {}
        for sensor, t in self.times.items():
            t = _frozen(t).reshape(-1)
            if t.size < 2:
                raise DataError(f"test {self.test_id!r}, sensor {sensor!r}: need at least 2 instants")
            if not np.all(np.diff(t) > 0):
                raise DataError(f"test {self.test_id!r}, sensor {sensor!r}: times must be strictly increasing")
            times[str(sensor)] = t
        if not times:
            raise DataError(f"test {self.test_id!r} has no sensors")
        object.__setattr__(self, "test_id", str(self.test_id))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "loading", dict(self.loading))

    @property
    def sensors(self) -> tuple[str, ...]:
        return tuple(self.times)

    def times_for(self, sensor_id: str) -> np.ndarray:
        try:
            return self.times[sensor_id]
        except KeyError:
            raise UnknownSensorError(
                f"test {self.test_id!r} has no sensor {sensor_id!r}"
            ) from None


@dataclass(frozen=True)
class MeasurementSeries:
    sensor_id: str
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values).reshape(-1)
        if values.size == 0:
            raise DataError(f"sensor {self.sensor_id!r}: empty series")
        if not np.all(np.isfinite(values)):
            raise DataError(f"sensor {self.sensor_id!r}: non-finite measurement")
        if not np.any(values != 0.0):
            raise DegenerateWeightError(
                f"sensor {self.sensor_id!r}: all measurements are zero, weight undefined"
            )
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ExperimentSet:
    """Tests and their measured series, keyed by ``(test_id, sensor_id)``."""

    tests: tuple[TestDefinition, ...]
    series: Mapping[tuple[str, str], MeasurementSeries]

    def __post_init__(self):
        tests = tuple(self.tests)
        ids = [t.test_id for t in tests]
        if len(set(ids)) != len(ids):
            raise DataError(f"duplicate test ids in {ids}")
        if not tests:
            raise DataError("experiment set has no tests")
        series = dict(self.series)
        for test in tests:
            for sensor in test.sensors:
                key = (test.test_id, sensor)
                if key not in series:
                    raise DataError(f"no measurements for test {key[0]!r}, sensor {key[1]!r}")
                n_values = series[key].values.size
                n_times = test.times[sensor].size
                if n_values != n_times:
                    raise DataError(
                        f"test {key[0]!r}, sensor {key[1]!r}: {n_values} values for {n_times} instants"
                    )
        object.__setattr__(self, "tests", tests)
        object.__setattr__(self, "series", series)

    def test(self, test_id: str) -> TestDefinition:
        for t in self.tests:
            if t.test_id == test_id:
                return t
        raise DataError(f"unknown test {test_id!r}")

    def pairs(self):
        """Yield ``(test, sensor_id, series)`` in a fixed order."""
        for test in self.tests:
            for sensor in test.sensors:
                yield test, sensor, self.series[(test.test_id, sensor)]

    def subset(self, test_ids: Sequence[str]) -> "ExperimentSet":
        tests = tuple(self.test(t) for t in test_ids)
        keep = {t.test_id for t in tests}
        return ExperimentSet(tests, {k: v for k, v in self.series.items() if k[0] in keep})


class ForwardModel(abc.ABC):
    """Deterministic map from parameters to the predicted series of one sensor."""

    name: str = ""
    parameter_names: tuple[str, ...] = ()
    has_analytic_jacobian = False

    @abc.abstractmethod
    def predict(self, theta, test: TestDefinition, sensor_id: str) -> np.ndarray:
        ...

    def analytic_jacobian(self, theta, test: TestDefinition, sensor_id: str) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no analytic Jacobian")

    def _check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (len(self.parameter_names),):
            raise DimensionError(
                f"{self.name} expects {len(self.parameter_names)} parameters, got shape {theta.shape}"
            )
        return theta


def _stress_steps(loading: Mapping) -> tuple[np.ndarray, np.ndarray]:
    try:
        steps = np.asarray(loading["steps"], dtype=float)
    except KeyError:
        raise ConfigError("creep loading needs 'steps' as [[time, stress], ...]") from None
    if steps.ndim != 2 or steps.shape[1] != 2 or steps.shape[0] == 0:
        raise ConfigError("creep loading 'steps' must be a list of [time, stress] pairs")
    if np.any(np.diff(steps[:, 0]) <= 0):
        raise ConfigError("creep step times must be strictly increasing")
    start = steps[:, 0]
    increments = np.diff(steps[:, 1], prepend=0.0)
    return start, increments


class CreepModel(ForwardModel):
    """Three-parameter linear viscoelastic creep strain under stepped stress.

    For one plateau of stress ``s`` applied at ``t = 0``::

        eps(t) = s/E + s/E_v * (1 - exp(-t/tau))

    Multi-plateau schedules superpose the response to each stress increment,
    starting at the increment's own time. Loading is ``{"steps": [[t0, s0],
    [t1, s1], ...]}``, stress levels held until the next step. An optional
    ``{"gains": {sensor: k}}`` scales the strain seen by a given sensor.
    """

    name = "creep3"
    parameter_names = ("E", "E_v", "tau")
    has_analytic_jacobian = True

    def _parts(self, theta, test, sensor_id):
        theta = self._check_theta(theta)
        if np.any(theta <= 0):
            raise ModelDomainError(f"creep3 parameters must be positive, got {theta}")
        t = test.times_for(sensor_id)
        start, increments = _stress_steps(test.loading)
        gain = float(test.loading.get("gains", {}).get(sensor_id, 1.0))
        # elapsed time since each stress increment, (n_times, n_steps)
        age = t[:, None] - start[None, :]
        active = age >= 0
        age = np.where(active, age, 0.0)
        ds = np.where(active, increments[None, :], 0.0) * gain
        return theta, age, ds

    def predict(self, theta, test, sensor_id):
        (E, E_v, tau), age, ds = self._parts(theta, test, sensor_id)
        return np.sum(ds / E + ds / E_v * -np.expm1(-age / tau), axis=1)

    def analytic_jacobian(self, theta, test, sensor_id):
        (E, E_v, tau), age, ds = self._parts(theta, test, sensor_id)
        decay = np.exp(-age / tau)
        d_E = np.sum(-ds / E**2, axis=1)
        d_Ev = np.sum(-ds / E_v**2 * -np.expm1(-age / tau), axis=1)
        d_tau = np.sum(-ds / E_v * decay * age / tau**2, axis=1)
        return np.column_stack([d_E, d_Ev, d_tau])


class SloppyModel(ForwardModel):
    """Four-parameter model with a non-identifiable ridge on restricted tests.

    ``{"kind": "restricted"}`` gives ``h = a*b*t + c`` (only the product
    ``a*b`` and ``c`` matter). ``{"kind": "redundant"}`` gives
    ``h = a*t**2 + b*t + c + d*sin(t)``.
    """

    name = "sloppy4"
    parameter_names = ("a", "b", "c", "d")
    has_analytic_jacobian = True

    def _kind(self, test):
        kind = test.loading.get("kind")
        if kind not in ("restricted", "redundant"):
            raise ConfigError(f"sloppy4 test {test.test_id!r}: unknown kind {kind!r}")
        return kind

    def predict(self, theta, test, sensor_id):
        a, b, c, d = self._check_theta(theta)
        t = test.times_for(sensor_id)
        if self._kind(test) == "restricted":
            return (a * b) * t + c
        return a * t**2 + b * t + c + d * np.sin(t)

    def analytic_jacobian(self, theta, test, sensor_id):
        a, b, c, d = self._check_theta(theta)
        t = test.times_for(sensor_id)
        one = np.ones_like(t)
        if self._kind(test) == "restricted":
            return np.column_stack([b * t, a * t, one, np.zeros_like(t)])
        return np.column_stack([t**2, t, one, np.sin(t)])


class FrozenModel(ForwardModel):
    """Expose a subset of a model's parameters, holding the others fixed.

    Used for staged identification, where parameters found in an earlier stage
    are frozen while the remaining ones are fitted.
    """

    def __init__(self, base: ForwardModel, fixed: Mapping[str, float]):
        unknown = set(fixed) - set(base.parameter_names)
        if unknown:
            raise ConfigError(f"cannot fix unknown parameters {sorted(unknown)} of {base.name}")
        self.base = base
        self.fixed = {k: float(v) for k, v in fixed.items()}
        self.name = base.name
        self.parameter_names = tuple(n for n in base.parameter_names if n not in self.fixed)
        self.has_analytic_jacobian = base.has_analytic_jacobian
        self._free = [i for i, n in enumerate(base.parameter_names) if n not in self.fixed]
        self._template = np.array([self.fixed.get(n, np.nan) for n in base.parameter_names])

    def full_theta(self, theta) -> np.ndarray:
        full = self._template.copy()
        full[self._free] = self._check_theta(theta)
        return full

    def predict(self, theta, test, sensor_id):
        return self.base.predict(self.full_theta(theta), test, sensor_id)

    def analytic_jacobian(self, theta, test, sensor_id):
        return self.base.analytic_jacobian(self.full_theta(theta), test, sensor_id)[:, self._free]


MODELS = {cls.name: cls for cls in (CreepModel, SloppyModel)}


def get_model(name: str, fixed: Mapping[str, float] | None = None) -> ForwardModel:
    """Look up a registered model by name, optionally freezing some parameters."""
    try:
        model = MODELS[name]()
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; available: {sorted(MODELS)}") from None
    if fixed:
        model = FrozenModel(model, fixed)
    return model
