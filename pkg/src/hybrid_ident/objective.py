"""Weighted least-squares cost over tests and sensors, and the GA fitness.

Each sensor's squared residuals are divided by the square of the largest
measured magnitude, which makes every sensor's contribution dimensionless.
With several tests and sensors the per-sensor costs are averaged over the
sensors of a test and then over the tests.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DegenerateWeightError, DimensionError
from .model import ExperimentSet, ForwardModel, MeasurementSeries, TestDefinition

FITNESS_EPS = 1e-12


def residual(m, h):
    """Measured minus predicted."""
    return m - h


@dataclass(frozen=True)
class SensorWeight:
    chi: float
    weight: float


def sensor_weight(series) -> SensorWeight:
    values = series.values if isinstance(series, MeasurementSeries) else np.asarray(series, float)
    if values.size == 0:
        raise DataError("cannot weight an empty series")
    chi = float(np.max(np.abs(values))) ** 2
    if chi == 0.0:
        raise DegenerateWeightError("all measurements are zero, weight undefined")
    return SensorWeight(chi=chi, weight=1.0 / chi)


def _predict(model, theta, test, sensor_id, n):
    h = np.asarray(model.predict(theta, test, sensor_id), dtype=float)
    if h.shape != (n,):
        raise DimensionError(
            f"model returned shape {h.shape} for test {test.test_id!r}, sensor {sensor_id!r}; expected ({n},)"
        )
    return h


def cost_single(theta, model: ForwardModel, test: TestDefinition, sensor_id: str, series) -> float:
    """Weighted cost of one sensor of one test: ``sum((m - h)**2) / (2 N chi)``."""
    m = series.values if isinstance(series, MeasurementSeries) else np.asarray(series, float)
    n = test.times_for(sensor_id).size
    if m.size != n:
        raise DimensionError(f"{m.size} measurements for {n} acquisition instants")
    h = _predict(model, theta, test, sensor_id, n)
    w = sensor_weight(m)
    r = residual(m, h)
    return float(w.weight * np.dot(r, r) / (2 * n))


@dataclass(frozen=True)
class CostBreakdown:
    total: float
    per_test: dict
    per_sensor: dict
    residual_vector: np.ndarray


class Objective:
    """The multi-test cost bound to a model and dataset.

    Weights are computed once from the measurements. ``residuals`` returns the
    scaled residual vector whose squared norm equals ``cost``; the local solver
    works on it directly.
    """

    def __init__(self, model: ForwardModel, dataset: ExperimentSet):
        self.model = model
        self.dataset = dataset
        n_tests = len(dataset.tests)
        self._blocks = []
        for test, sensor, series in dataset.pairs():
            n = series.values.size
            w = sensor_weight(series)
            # nested averaging: sensors within a test, then tests
            scale = w.weight / (2.0 * n_tests * len(test.sensors) * n)
            self._blocks.append((test, sensor, series.values, w, np.sqrt(scale)))
        self.size = sum(b[2].size for b in self._blocks)

    @property
    def blocks(self):
        return self._blocks

    def predictions(self, theta) -> list[np.ndarray]:
        return [_predict(self.model, theta, t, s, m.size) for t, s, m, _, _ in self._blocks]

    def residuals(self, theta) -> np.ndarray:
        parts = [
            root * residual(m, _predict(self.model, theta, t, s, m.size))
            for t, s, m, _, root in self._blocks
        ]
        return np.concatenate(parts)

    def cost(self, theta) -> float:
        r = self.residuals(theta)
        return float(np.dot(r, r))

    def __call__(self, theta) -> float:
        return self.cost(theta)

    def breakdown(self, theta) -> CostBreakdown:
        n_tests = len(self.dataset.tests)
        per_sensor, per_test, parts = {}, {}, []
        for test, sensor, m, w, root in self._blocks:
            r = residual(m, _predict(self.model, theta, test, sensor, m.size))
            per_sensor[(test.test_id, sensor)] = float(w.weight * np.dot(r, r) / (2 * m.size))
            parts.append(root * r)
        for test in self.dataset.tests:
            sensors = [per_sensor[(test.test_id, s)] for s in test.sensors]
            per_test[test.test_id] = float(np.mean(sensors))
        total = float(np.sum(list(per_test.values())) / n_tests)
        return CostBreakdown(total, per_test, per_sensor, np.concatenate(parts))


def cost_multi(theta, model: ForwardModel, dataset: ExperimentSet) -> CostBreakdown:
    return Objective(model, dataset).breakdown(theta)


def adaptive_fitness(f):
    """GA fitness: reciprocal of the cost, guarded at zero cost."""
    out = 1.0 / (np.asarray(f, dtype=float) + FITNESS_EPS)
    return float(out) if out.ndim == 0 else out
