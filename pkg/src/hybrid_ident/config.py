"""Run configuration files (TOML).

A minimal file::

    seed = 42
    output = "out"

    [model]
    name = "creep3"

    [parameters]
    names = ["E", "E_v", "tau"]
    lower = [850.0, 1200.0, 0.5]
    upper = [1150.0, 2800.0, 9.5]

    [[tests]]
    id = "creep"
    sensors = ["axial"]
    times = {start = 0.0, stop = 20.0, num = 41}
    loading = {steps = [[0.0, 10.0], [10.0, 0.0]]}

    [data.synthetic]
    truth = {E = 1000.0, E_v = 2000.0, tau = 5.0}
    noise_std = 0.0

Optional tables ``[ga]``, ``[lm]``, ``[strategy]`` and ``[scan]`` override the
solver settings field by field; ``[[stages]]`` describes a staged
identification. ``data.manifest`` points to measured data instead of
``data.synthetic``.
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dataio import generate_synthetic, load_dataset, relative_to
from .errors import ConfigError
from .ga import GaConfig
from .lm import LmConfig
from .model import ExperimentSet, ForwardModel, ParameterSpace, TestDefinition, get_model
from .strategy import ScanConfig, Stage, StrategyConfig


def _times(spec) -> np.ndarray:
    """Acquisition instants from a list, a grid table, or a list of grid tables."""
    if isinstance(spec, Mapping):
        try:
            start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"time grid needs start, stop and num; missing {exc}") from None
        spacing = spec.get("spacing", "linear")
        if spacing == "linear":
            return np.linspace(start, stop, num)
        if spacing == "log":
            return np.geomspace(start, stop, num)
        raise ConfigError(f"unknown time spacing {spacing!r}")
    if isinstance(spec, list) and spec and all(isinstance(s, Mapping) for s in spec):
        return np.unique(np.concatenate([_times(s) for s in spec]))
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    raise ConfigError(f"cannot read acquisition times from {spec!r}")


def _dataclass_from(cls, table: Mapping | None, **defaults):
    table = dict(table or {})
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} settings: {sorted(unknown)}")
    try:
        return cls(**{**defaults, **table})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {cls.__name__} settings: {exc}") from None


def parse_tests(entries) -> list[TestDefinition]:
    tests = []
    for entry in entries or []:
        try:
            test_id = entry["id"]
        except KeyError:
            raise ConfigError("every [[tests]] entry needs an id") from None
        sensors = entry.get("sensors", ["main"])
        sensor_times = entry.get("sensor_times", {})
        if "times" not in entry and set(sensors) - set(sensor_times):
            raise ConfigError(f"test {test_id!r}: no acquisition times")
        times = {s: _times(sensor_times.get(s, entry.get("times"))) for s in sensors}
        try:
            tests.append(TestDefinition(test_id, times, entry.get("loading", {})))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return tests


@dataclass
class RunConfiguration:
    model: ForwardModel
    space: ParameterSpace
    tests: list
    data: Mapping
    seed: int
    output: Path
    base_dir: Path
    ga: GaConfig = field(default_factory=GaConfig)
    lm: LmConfig = field(default_factory=LmConfig)
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    stages: list = field(default_factory=list)
    full_space: ParameterSpace | None = None

    def dataset(self) -> ExperimentSet:
        """Load or synthesize the experimental data described by ``[data]``."""
        if "manifest" in self.data:
            loadings = {t.test_id: t.loading for t in self.tests}
            return load_dataset(relative_to(self.base_dir, self.data["manifest"]), loadings)
        synth = self.data.get("synthetic")
        if synth is None:
            raise ConfigError("[data] needs either manifest or synthetic")
        if not self.tests:
            raise ConfigError("synthetic data needs [[tests]] definitions")
        base = getattr(self.model, "base", self.model)
        truth = synth.get("truth")
        if isinstance(truth, Mapping):
            try:
                truth = [truth[n] for n in base.parameter_names]
            except KeyError as exc:
                raise ConfigError(f"synthetic truth lacks parameter {exc}") from None
        if truth is None or len(truth) != len(base.parameter_names):
            raise ConfigError(f"synthetic truth must give {base.parameter_names}")
        return generate_synthetic(base, np.asarray(truth, float), self.tests,
                                  float(synth.get("noise_std", 0.0)),
                                  int(synth.get("seed", self.seed)))


def load_config(path, output: str | None = None) -> RunConfiguration:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw, path.parent, output)


def parse_config(raw: Mapping[str, Any], base_dir=".", output: str | None = None) -> RunConfiguration:
    base_dir = Path(base_dir)
    if "seed" not in raw:
        raise ConfigError("an explicit integer 'seed' is required")
    seed = raw["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

    model_table = raw.get("model", {})
    if "name" not in model_table:
        raise ConfigError("[model] needs a name")
    fixed = model_table.get("fixed", {})
    model = get_model(model_table["name"], fixed)

    params = raw.get("parameters", {})
    try:
        full = ParameterSpace(tuple(params["names"]), params["lower"], params["upper"])
    except KeyError as exc:
        raise ConfigError(f"[parameters] needs names, lower and upper; missing {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    base = getattr(model, "base", model)
    if set(full.names) - set(base.parameter_names):
        raise ConfigError(f"parameters {full.names} do not belong to model {base.name} {base.parameter_names}")
    missing = set(model.parameter_names) - set(full.names)
    if missing:
        raise ConfigError(f"no bounds for parameters {sorted(missing)}")
    space = full.subspace(model.parameter_names)

    ga = _dataclass_from(GaConfig, raw.get("ga"), seed=seed)
    ga.validate()
    lm = _dataclass_from(LmConfig, raw.get("lm"))
    strategy = _dataclass_from(StrategyConfig, raw.get("strategy"), seed=seed)
    scan_defaults = dict(runs=strategy.runs, seed=seed, population_size=ga.population_size,
                         generations=ga.generations, crossover_prob=ga.crossover_prob)
    scan = _dataclass_from(ScanConfig, raw.get("scan"), **scan_defaults)

    stages = []
    for entry in raw.get("stages", []):
        try:
            stages.append(Stage(entry["name"], tuple(entry["free"]),
                                tuple(entry["tests"]) if "tests" in entry else None,
                                entry.get("fixed", {}), entry.get("method", "ensemble")))
        except KeyError as exc:
            raise ConfigError(f"stage entry lacks {exc}") from None

    # a command-line override is relative to the working directory, a config value to the file
    out = Path(output) if output is not None else relative_to(base_dir, raw.get("output", "output"))
    return RunConfiguration(
        model=model, space=space, tests=parse_tests(raw.get("tests")), data=raw.get("data", {}),
        seed=seed, output=out, base_dir=base_dir,
        ga=ga, lm=lm, strategy=strategy, scan=scan, stages=stages, full_space=full,
    )
