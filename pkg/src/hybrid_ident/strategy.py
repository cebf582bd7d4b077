"""Identification methodology built on the hybrid GA + LM solver.

1. A uniform scan (GA with every gene redrawn each generation) samples the
   domain; the best-fitness fraction of the samples is kept.
2. Each parameter's kept samples are histogrammed and labelled Uniform,
   MultiPeak or Dominant; sparse bins at the domain edges are trimmed away.
3. The hybrid solver is run several times on the reduced domain. The spread of
   the solutions and of their simulated responses decides whether the answer
   is unique, an acceptable low-dispersion set, or whether the domain should
   be shrunk to the extreme values found and the ensemble repeated.
"""
from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, IdentificationError, InsufficientDataError, SolverError
from .ga import GaConfig, GaTrace, Individual, evolve
from .lm import LmConfig, LmTrace, run_lm
from .model import ExperimentSet, ForwardModel, FrozenModel, ParameterSpace
from .objective import Objective, adaptive_fitness

log = logging.getLogger(__name__)


class Label(str, enum.Enum):
    UNIFORM = "Uniform"
    MULTI_PEAK = "MultiPeak"
    DOMINANT = "Dominant"


class Verdict(str, enum.Enum):
    UNIQUE = "UniqueSolution"
    LOW_DISPERSION = "LowDispersionSet"
    REFINE = "RefineDomain"


@dataclass(frozen=True)
class ScanConfig:
    runs: int = 10
    population_size: int | None = None
    generations: int = 30
    crossover_prob: float = 0.8
    quantile: float = 0.9
    seed: int = 0

    def ga_config(self) -> GaConfig:
        # elitism off: re-inserted copies of one point would bias the histograms
        return GaConfig(population_size=self.population_size, generations=self.generations,
                        crossover_prob=self.crossover_prob, mutation_prob=1.0, elitism=False)


@dataclass(frozen=True)
class StrategyConfig:
    """Constants of the methodology; every one of them is a judgement call."""

    runs: int = 10
    seed: int = 0
    bins: int = 20
    uniform_band: float = 0.5
    dominant_mass: float = 0.6
    sparse_fraction: float = 0.1
    min_width_fraction: float = 0.1
    min_retained: int = 50
    unique_tol: float = 1e-3
    dispersion_tol: float = 1e-3
    max_refinements: int = 5

    def __post_init__(self):
        if self.runs < 2:
            raise ConfigError("an ensemble needs at least 2 runs")
        if self.bins < 2:
            raise ConfigError("need at least 2 histogram bins")


@dataclass
class ScatterCloud:
    space: ParameterSpace
    genes: np.ndarray
    costs: np.ndarray
    fitness: np.ndarray
    threshold: float
    retained: np.ndarray  # boolean mask over points

    @property
    def retained_genes(self) -> np.ndarray:
        return self.genes[self.retained]

    @property
    def best(self) -> np.ndarray:
        return self.genes[int(np.argmin(self.costs))]

    def with_threshold(self, threshold: float) -> "ScatterCloud":
        return ScatterCloud(self.space, self.genes, self.costs, self.fitness,
                            threshold, self.fitness >= threshold)


@dataclass(frozen=True)
class ParameterDistribution:
    name: str
    label: Label
    edges: np.ndarray
    counts: np.ndarray
    interval: tuple[float, float] | None = None


def uniform_scan(model: ForwardModel, dataset: ExperimentSet, space: ParameterSpace,
                 scan_config: ScanConfig = ScanConfig(), map_fn: Callable = map,
                 cost_fn: Callable | None = None) -> ScatterCloud:
    """Pool every individual evaluated by ``runs`` GA runs at mutation probability 1.

    The fitness threshold is the ``quantile`` of the pooled fitness values.
    """
    cost_fn = Objective(model, dataset) if cost_fn is None else cost_fn
    ga_config = scan_config.ga_config()
    genes, costs = [], []
    for r in range(scan_config.runs):
        rng = np.random.default_rng([scan_config.seed, 1, r])
        _, trace = evolve(cost_fn, space, ga_config, rng, map_fn)
        genes.append(trace.all_genes)
        costs.append(trace.all_costs)
    genes = np.concatenate(genes)
    costs = np.concatenate(costs)
    fitness = adaptive_fitness(costs)
    threshold = float(np.quantile(fitness, scan_config.quantile))
    return ScatterCloud(space, genes, costs, fitness, threshold, fitness >= threshold)


def _bin_index(x, edges):
    return int(np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(edges) - 2))


def classify_distribution(cloud: ScatterCloud, index: int, bins: int = 20, uniform_band: float = 0.5,
                          dominant_mass: float = 0.6, min_points: int = 50) -> ParameterDistribution:
    """Label one parameter's retained samples.

    Uniform if every bin is within ``uniform_band`` of the mean count; Dominant
    if the heaviest contiguous run of above-mean bins holds at least
    ``dominant_mass`` of the samples; MultiPeak otherwise.
    """
    values = cloud.retained_genes[:, index]
    if values.size < min_points:
        raise InsufficientDataError(
            f"{values.size} retained points for {cloud.space.names[index]!r}; need {min_points}"
        )
    lo, hi = cloud.space.lower[index], cloud.space.upper[index]
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(np.clip(values, lo, hi), bins=edges)
    mean = values.size / bins
    name = cloud.space.names[index]
    if np.all(np.abs(counts - mean) <= uniform_band * mean):
        return ParameterDistribution(name, Label.UNIFORM, edges, counts)

    best_mass, best_run = -1, None
    above = counts > mean
    i = 0
    while i < bins:
        if above[i]:
            j = i
            while j + 1 < bins and above[j + 1]:
                j += 1
            mass = counts[i:j + 1].sum()
            if mass > best_mass:
                best_mass, best_run = mass, (i, j)
            i = j + 1
        else:
            i += 1
    if best_run is not None and best_mass >= dominant_mass * values.size:
        i, j = best_run
        return ParameterDistribution(name, Label.DOMINANT, edges, counts,
                                     (float(edges[i]), float(edges[j + 1])))
    return ParameterDistribution(name, Label.MULTI_PEAK, edges, counts)


def classify_all(cloud: ScatterCloud, config: StrategyConfig = StrategyConfig()) -> list[ParameterDistribution]:
    return [
        classify_distribution(cloud, i, config.bins, config.uniform_band,
                              config.dominant_mass, config.min_retained)
        for i in range(cloud.space.count)
    ]


def reduce_domain(space: ParameterSpace, classes: Sequence[ParameterDistribution], cloud: ScatterCloud,
                  sparse_fraction: float = 0.1, min_width_fraction: float = 0.1) -> ParameterSpace:
    """Trim sparse histogram bins from the edges of non-uniform parameters.

    Trimming stops at the first bin holding at least ``sparse_fraction`` of the
    mean count, and never passes the bin of the best scanned point. The new
    width is kept at or above ``min_width_fraction`` of the old one.
    """
    lower, upper = space.lower.copy(), space.upper.copy()
    best = cloud.best
    for i, dist in enumerate(classes):
        if dist.label is Label.UNIFORM:
            continue
        counts, edges = dist.counts, dist.edges
        cutoff = sparse_fraction * counts.sum() / counts.size
        keep = _bin_index(best[i], edges)
        lo, hi = 0, counts.size - 1
        while lo < keep and counts[lo] < cutoff:
            lo += 1
        while hi > keep and counts[hi] < cutoff:
            hi -= 1
        new_lo, new_hi = edges[lo], edges[hi + 1]
        min_width = min_width_fraction * space.width[i]
        if new_hi - new_lo < min_width:
            centre = 0.5 * (new_lo + new_hi)
            new_lo = min(max(centre - 0.5 * min_width, space.lower[i]), space.upper[i] - min_width)
            new_hi = new_lo + min_width
        lower[i], upper[i] = new_lo, new_hi
    return space.with_bounds(lower, upper)


@dataclass
class HybridResult:
    theta: np.ndarray
    cost: float
    ga_best: Individual
    ga_trace: GaTrace
    lm_trace: LmTrace


def run_hybrid(model: ForwardModel, dataset: ExperimentSet, space: ParameterSpace,
               ga_config: GaConfig = GaConfig(), lm_config: LmConfig = LmConfig(),
               rng: np.random.Generator | None = None, map_fn: Callable = map,
               objective: Objective | None = None) -> HybridResult:
    """GA search followed by LM refinement from the GA's best individual."""
    objective = Objective(model, dataset) if objective is None else objective
    best, ga_trace = evolve(objective, space, ga_config, rng, map_fn)
    theta, lm_trace = run_lm(objective.residuals, best.genes, space, lm_config)
    return HybridResult(theta, lm_trace.cost, best, ga_trace, lm_trace)


def response_dispersion(objective: Objective, thetas) -> float:
    """Largest pairwise weighted RMS difference between simulated responses.

    Each sensor's responses are divided by the square root of its weight
    denominator, so the measure is dimensionless like the cost.
    """
    thetas = np.atleast_2d(thetas)
    scales = [np.sqrt(w.chi) for _, _, _, w, _ in objective.blocks]
    responses = [
        np.concatenate([h / s for h, s in zip(objective.predictions(th), scales)]) for th in thetas
    ]
    worst = 0.0
    for p, q in itertools.combinations(range(len(responses)), 2):
        diff = responses[p] - responses[q]
        worst = max(worst, float(np.sqrt(np.mean(diff * diff))))
    return worst


def _max_relative_distance(thetas) -> float:
    worst = 0.0
    for p, q in itertools.combinations(range(len(thetas)), 2):
        a, b = thetas[p], thetas[q]
        scale = np.maximum(np.abs(a), np.abs(b))
        diff = np.abs(a - b)
        rel = np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0)
        worst = max(worst, float(rel.max()))
    return worst


@dataclass
class EnsembleReport:
    names: tuple[str, ...]
    solutions: np.ndarray  # (n_runs, n_params)
    costs: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    response_dispersion: float
    verdict: Verdict
    space: ParameterSpace
    failures: list = field(default_factory=list)
    results: list = field(default_factory=list)

    @property
    def cost_mean(self) -> float:
        return float(np.mean(self.costs))

    @property
    def cost_std(self) -> float:
        return float(np.std(self.costs, ddof=1))

    @property
    def best(self) -> np.ndarray:
        return self.solutions[int(np.argmin(self.costs))]


def summarize(objective: Objective, space: ParameterSpace, solutions, costs,
              config: StrategyConfig = StrategyConfig()) -> EnsembleReport:
    """Statistics and verdict for a set of identified parameter vectors."""
    solutions = np.asarray(solutions, dtype=float)
    costs = np.asarray(costs, dtype=float)
    if len(solutions) < 2:
        raise InsufficientDataError("need at least 2 solutions to analyse an ensemble")
    dispersion = response_dispersion(objective, solutions)
    if _max_relative_distance(solutions) < config.unique_tol:
        verdict = Verdict.UNIQUE
    elif dispersion < config.dispersion_tol:
        verdict = Verdict.LOW_DISPERSION
    else:
        verdict = Verdict.REFINE
    return EnsembleReport(space.names, solutions, costs, solutions.mean(axis=0),
                          solutions.std(axis=0, ddof=1), dispersion, verdict, space)


def ensemble_analyze(model: ForwardModel, dataset: ExperimentSet, space: ParameterSpace,
                     ga_config: GaConfig = GaConfig(), lm_config: LmConfig = LmConfig(),
                     config: StrategyConfig = StrategyConfig(), runs: int | None = None,
                     round_index: int = 0, map_fn: Callable = map) -> EnsembleReport:
    """Independent seeded hybrid runs and their topological summary.

    Run ``r`` draws from a generator seeded with ``(seed, 2, round_index, r)``.
    """
    runs = config.runs if runs is None else runs
    if runs < 2:
        raise ConfigError("an ensemble needs at least 2 runs")
    objective = Objective(model, dataset)
    results, failures = [], []
    for r in range(runs):
        rng = np.random.default_rng([config.seed, 2, round_index, r])
        try:
            results.append(run_hybrid(model, dataset, space, ga_config, lm_config, rng, map_fn, objective))
        except IdentificationError as exc:
            log.warning("hybrid run %d failed: %s", r, exc)
            failures.append((r, str(exc)))
    if len(results) < 2:
        raise SolverError(f"only {len(results)} of {runs} hybrid runs succeeded")
    report = summarize(objective, space, [h.theta for h in results], [h.cost for h in results], config)
    report.failures = failures
    report.results = results
    return report


def refine_bounds(space: ParameterSpace, solutions) -> ParameterSpace:
    """New bounds from the extreme values of each parameter, nested in ``space``."""
    solutions = np.asarray(solutions, dtype=float)
    lower = np.maximum(solutions.min(axis=0), space.lower)
    upper = np.minimum(solutions.max(axis=0), space.upper)
    pad = 1e-6 * space.width
    flat = upper - lower <= pad
    lower[flat] = np.maximum(lower[flat] - pad[flat], space.lower[flat])
    upper[flat] = np.minimum(upper[flat] + pad[flat], space.upper[flat])
    return space.with_bounds(lower, upper)


@dataclass
class StrategyResult:
    report: EnsembleReport
    history: list
    cloud: ScatterCloud
    classes: list
    reduced_space: ParameterSpace
    inconclusive: bool = False


def _bounds_entry(space):
    return {n: (float(lo), float(hi)) for n, lo, hi in zip(space.names, space.lower, space.upper)}


def strategy_loop(model: ForwardModel, dataset: ExperimentSet, space: ParameterSpace,
                  ga_config: GaConfig = GaConfig(), lm_config: LmConfig = LmConfig(),
                  config: StrategyConfig = StrategyConfig(), scan_config: ScanConfig | None = None,
                  map_fn: Callable = map) -> StrategyResult:
    """Scan, reduce, run ensembles and refine until the verdict is not RefineDomain."""
    if scan_config is None:
        scan_config = ScanConfig(runs=config.runs, seed=config.seed,
                                 population_size=ga_config.population_size,
                                 generations=ga_config.generations,
                                 crossover_prob=ga_config.crossover_prob)
    cloud = uniform_scan(model, dataset, space, scan_config, map_fn)
    classes = classify_all(cloud, config)
    reduced = reduce_domain(space, classes, cloud, config.sparse_fraction, config.min_width_fraction)
    history = [{
        "step": "scan",
        "bounds": _bounds_entry(space),
        "threshold": cloud.threshold,
        "labels": {d.name: d.label.value for d in classes},
        "reduced": _bounds_entry(reduced),
    }]

    current = reduced
    rounds = 0
    while True:
        report = ensemble_analyze(model, dataset, current, ga_config, lm_config, config,
                                  round_index=rounds, map_fn=map_fn)
        history.append({
            "step": "ensemble",
            "round": rounds,
            "bounds": _bounds_entry(current),
            "verdict": report.verdict.value,
            "response_dispersion": report.response_dispersion,
            "mean": report.mean.tolist(),
            "std": report.std.tolist(),
            "cost_mean": report.cost_mean,
            "cost_std": report.cost_std,
        })
        if report.verdict is not Verdict.REFINE:
            return StrategyResult(report, history, cloud, classes, reduced)
        if rounds >= config.max_refinements:
            log.warning("still RefineDomain after %d refinements", rounds)
            return StrategyResult(report, history, cloud, classes, reduced, inconclusive=True)
        current = refine_bounds(current, report.solutions)
        rounds += 1


@dataclass(frozen=True)
class Stage:
    """One step of a staged identification.

    ``free`` parameters are identified on ``tests`` (all tests when None).
    Other parameters take their value from ``fixed`` or, failing that, from the
    best solution of an earlier stage.
    """

    name: str
    free: tuple[str, ...]
    tests: tuple[str, ...] | None = None
    fixed: Mapping[str, float] = field(default_factory=dict)
    method: str = "ensemble"


def run_stages(model: ForwardModel, dataset: ExperimentSet, space: ParameterSpace,
               stages: Sequence[Stage], ga_config: GaConfig = GaConfig(),
               lm_config: LmConfig = LmConfig(), config: StrategyConfig = StrategyConfig(),
               map_fn: Callable = map):
    """Identify parameter groups one stage at a time.

    Returns ``(values, outcomes)``: the identified value of every parameter
    touched so far and a list of ``(stage name, free names, result)``.
    """
    known: dict[str, float] = {}
    outcomes = []
    for stage in stages:
        unknown = set(stage.free) - set(model.parameter_names)
        if unknown:
            raise ConfigError(f"stage {stage.name!r}: unknown parameters {sorted(unknown)}")
        fixed = {**known, **stage.fixed}
        fixed = {k: v for k, v in fixed.items() if k not in stage.free}
        missing = set(model.parameter_names) - set(stage.free) - set(fixed)
        if missing:
            raise ConfigError(f"stage {stage.name!r}: no value for {sorted(missing)}")
        staged_model = FrozenModel(model, fixed) if fixed else model
        sub_space = space.subspace(staged_model.parameter_names)
        data = dataset if stage.tests is None else dataset.subset(stage.tests)
        if stage.method == "ensemble":
            result = ensemble_analyze(staged_model, data, sub_space, ga_config, lm_config, config, map_fn=map_fn)
            best = result.best
        elif stage.method == "pipeline":
            result = strategy_loop(staged_model, data, sub_space, ga_config, lm_config, config, map_fn=map_fn)
            best = result.report.best
        elif stage.method == "hybrid":
            result = run_hybrid(staged_model, data, sub_space, ga_config, lm_config,
                                np.random.default_rng([config.seed, 3, len(outcomes)]), map_fn)
            best = result.theta
        else:
            raise ConfigError(f"unknown stage method {stage.method!r}")
        known.update(stage.fixed)
        known.update(zip(staged_model.parameter_names, map(float, best)))
        outcomes.append((stage.name, staged_model.parameter_names, result))
    return known, outcomes
