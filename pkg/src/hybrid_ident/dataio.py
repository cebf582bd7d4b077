"""Reading and writing experimental data, and synthetic data generation.

On disk a dataset is a manifest CSV (``test_id,sensor_id,path``) plus one
``time,value`` CSV per sensor of each test. Paths in the manifest are relative
to the manifest's directory. Loadings are not stored with the data; they come
from the run configuration.
"""
from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError, DegenerateWeightError
from .model import ExperimentSet, ForwardModel, MeasurementSeries, TestDefinition

MANIFEST_HEADER = ["test_id", "sensor_id", "path"]
SERIES_HEADER = ["time", "value"]


def _read_rows(path: Path, header: list[str]):
    if not path.is_file():
        raise DataError(f"missing data file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise DataError(f"{path}:1: expected header {','.join(header)}, got {first}")
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{reader.line_num}: expected {len(header)} fields, got {len(row)}")
            yield reader.line_num, [c.strip() for c in row]


def read_series(path) -> tuple[np.ndarray, np.ndarray]:
    """Parse one ``time,value`` file, checking times increase strictly."""
    path = Path(path)
    times, values = [], []
    for line, (t, v) in _read_rows(path, SERIES_HEADER):
        try:
            t, v = float(t), float(v)
        except ValueError:
            raise DataError(f"{path}:{line}: cannot parse number in {t!r},{v!r}") from None
        if not (np.isfinite(t) and np.isfinite(v)):
            raise DataError(f"{path}:{line}: non-finite entry")
        if times and t <= times[-1]:
            raise DataError(f"{path}:{line}: time {t} does not increase (previous {times[-1]})")
        times.append(t)
        values.append(v)
    if len(times) < 2:
        raise DataError(f"{path}: need at least 2 acquisitions, found {len(times)}")
    return np.array(times), np.array(values)


def load_dataset(manifest, loadings: Mapping[str, Mapping] | None = None) -> ExperimentSet:
    manifest = Path(manifest)
    root = manifest.parent
    loadings = loadings or {}
    order: dict[str, dict] = {}
    series = {}
    for line, (test_id, sensor_id, rel) in _read_rows(manifest, MANIFEST_HEADER):
        if not test_id or not sensor_id or not rel:
            raise DataError(f"{manifest}:{line}: empty field")
        if sensor_id in order.get(test_id, {}):
            raise DataError(f"{manifest}:{line}: duplicate entry for {test_id}/{sensor_id}")
        t, v = read_series(root / rel)
        try:
            series[(test_id, sensor_id)] = MeasurementSeries(sensor_id, v)
        except DegenerateWeightError:
            raise DegenerateWeightError(
                f"test {test_id!r}, sensor {sensor_id!r} ({root / rel}): all values are zero"
            ) from None
        order.setdefault(test_id, {})[sensor_id] = t
    if not order:
        raise DataError(f"{manifest}: no entries")
    tests = tuple(TestDefinition(tid, times, loadings.get(tid, {})) for tid, times in order.items())
    return ExperimentSet(tests, series)


def write_dataset(dataset: ExperimentSet, directory) -> Path:
    """Write ``dataset`` as a manifest plus series files; returns the manifest path.

    Numbers are written with ``repr`` so a reload reproduces them exactly.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = directory / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MANIFEST_HEADER)
        for test, sensor, s in dataset.pairs():
            name = f"{test.test_id}__{sensor}.csv"
            w.writerow([test.test_id, sensor, name])
            with open(directory / name, "w", newline="") as out:
                sw = csv.writer(out)
                sw.writerow(SERIES_HEADER)
                for t, v in zip(test.times[sensor], s.values):
                    sw.writerow([repr(float(t)), repr(float(v))])
    return manifest


def generate_synthetic(model: ForwardModel, truth, tests: Sequence[TestDefinition],
                       noise_std: float = 0.0, seed: int = 0) -> ExperimentSet:
    """Simulate measurements at ``truth``, with optional Gaussian noise.

    The noise standard deviation for a sensor is ``noise_std`` times the largest
    absolute predicted value of that sensor.
    """
    if noise_std < 0:
        raise DataError("noise_std must be non-negative")
    rng = np.random.default_rng(seed)
    series = {}
    for test in tests:
        for sensor in test.sensors:
            h = np.asarray(model.predict(truth, test, sensor), dtype=float)
            if noise_std > 0:
                h = h + rng.normal(0.0, noise_std * np.max(np.abs(h)), size=h.size)
            try:
                series[(test.test_id, sensor)] = MeasurementSeries(sensor, h)
            except DegenerateWeightError:
                raise DegenerateWeightError(
                    f"test {test.test_id!r}, sensor {sensor!r}: prediction is identically zero"
                ) from None
    return ExperimentSet(tuple(tests), series)


def relative_to(base: Path, path) -> Path:
    path = Path(os.path.expanduser(str(path)))
    return path if path.is_absolute() else base / path
