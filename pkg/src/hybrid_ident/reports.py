"""CSV and JSON outputs.

Floats are written with ``repr`` and JSON keys are sorted, so identical runs
produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import ParameterSpace
from .strategy import EnsembleReport, HybridResult, ParameterDistribution, ScatterCloud


def _f(x) -> str:
    return repr(float(x))


def write_scatter(cloud: ScatterCloud, directory) -> list[Path]:
    """One ``value,fitness`` file per parameter, retained points only."""
    directory = Path(directory)
    paths = []
    kept = cloud.retained_genes
    fitness = cloud.fitness[cloud.retained]
    for i, name in enumerate(cloud.space.names):
        path = directory / f"scatter_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["value", "fitness"])
            for v, fa in zip(kept[:, i], fitness):
                w.writerow([_f(v), _f(fa)])
        paths.append(path)
    return paths


def write_classification(classes: list[ParameterDistribution], threshold: float, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "label", "dominant_lower", "dominant_upper", "threshold", "counts"])
        for d in classes:
            lo, hi = d.interval if d.interval else ("", "")
            w.writerow([d.name, d.label.value, lo if lo == "" else _f(lo), hi if hi == "" else _f(hi),
                        _f(threshold), " ".join(str(int(c)) for c in d.counts)])


def write_bounds(initial: ParameterSpace, reduced: ParameterSpace, path):
    """Initial and reduced ranges side by side."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "initial_lower", "initial_upper", "reduced_lower", "reduced_upper"])
        for i, name in enumerate(initial.names):
            w.writerow([name, _f(initial.lower[i]), _f(initial.upper[i]),
                        _f(reduced.lower[i]), _f(reduced.upper[i])])


def write_ensemble(report: EnsembleReport, path):
    """Draw-by-draw solutions followed by Mean and Standard Deviation rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["draw", *report.names, "objective"])
        for k, (theta, cost) in enumerate(zip(report.solutions, report.costs), start=1):
            w.writerow([k, *map(_f, theta), _f(cost)])
        w.writerow(["Mean", *map(_f, report.mean), _f(report.cost_mean)])
        w.writerow(["Standard Deviation", *map(_f, report.std), _f(report.cost_std)])


def ensemble_summary(report: EnsembleReport, **extra) -> dict:
    return {
        "verdict": report.verdict.value,
        "response_dispersion": report.response_dispersion,
        "objective_mean": report.cost_mean,
        "objective_std": report.cost_std,
        "mean": dict(zip(report.names, map(float, report.mean))),
        "std": dict(zip(report.names, map(float, report.std))),
        "best": dict(zip(report.names, map(float, report.best))),
        "failures": [list(f) for f in report.failures],
        **extra,
    }


def write_json(data, path):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_solution(names, result: HybridResult, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "value"])
        for n, v in zip(names, result.theta):
            w.writerow([n, _f(v)])
        w.writerow(["objective", _f(result.cost)])
