"""Real-coded genetic algorithm.

Roulette-wheel selection on the fitness ``1/f``, arithmetic crossover of
couples, per-gene mutation by uniform redraw within the bounds, generational
replacement with optional single-individual elitism and a fixed number of
generations.

All random draws happen in the sequential breeding phase, so cost evaluations
can be farmed out through ``map_fn`` without changing the result for a seed.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, EvaluationError, IdentificationError
from .model import ExperimentSet, ForwardModel, ParameterSpace
from .objective import Objective, adaptive_fitness

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaConfig:
    """GA settings. ``None`` sizes resolve against the parameter count.

    ``population_size`` defaults to ten individuals per parameter and
    ``mutation_prob`` to ``2 / population_size``.
    """

    population_size: int | None = None
    generations: int = 30
    crossover_prob: float = 0.8
    mutation_prob: float | None = None
    elitism: bool = True
    seed: int = 0
    mutation: str = "uniform"
    mutation_scale: float = 0.1

    def resolved(self, n_params: int) -> "GaConfig":
        size = 10 * n_params if self.population_size is None else int(self.population_size)
        pm = 2.0 / size if self.mutation_prob is None else float(self.mutation_prob)
        cfg = replace(self, population_size=size, mutation_prob=pm)
        cfg.validate()
        return cfg

    def validate(self):
        size = self.population_size
        if size is not None and (size < 2 or size % 2):
            raise ConfigError(f"population_size must be even and >= 2, got {size}")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ConfigError(f"crossover_prob must lie in [0, 1], got {self.crossover_prob}")
        if self.mutation_prob is not None and not 0.0 <= self.mutation_prob <= 1.0:
            raise ConfigError(f"mutation_prob must lie in [0, 1], got {self.mutation_prob}")
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        if self.mutation not in ("uniform", "gaussian"):
            raise ConfigError(f"unknown mutation mode {self.mutation!r}")


@dataclass(frozen=True)
class Individual:
    genes: np.ndarray
    cost: float
    fitness: float


@dataclass
class Population:
    genes: np.ndarray  # (size, n_params)
    costs: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.genes.shape[0]

    @property
    def fitness(self) -> np.ndarray:
        if self.costs is None:
            raise EvaluationError("population has not been evaluated")
        return adaptive_fitness(self.costs)

    def best(self) -> Individual:
        i = int(np.argmin(self.costs))
        return Individual(self.genes[i].copy(), float(self.costs[i]), float(self.fitness[i]))


@dataclass
class GaTrace:
    """Per-generation summary plus every individual evaluated."""

    best_cost: list = field(default_factory=list)
    mean_cost: list = field(default_factory=list)
    best_genes: list = field(default_factory=list)
    genes: list = field(default_factory=list)
    costs: list = field(default_factory=list)

    def record(self, pop: Population):
        i = int(np.argmin(pop.costs))
        finite = pop.costs[np.isfinite(pop.costs)]
        self.best_cost.append(float(pop.costs[i]))
        self.mean_cost.append(float(finite.mean()) if finite.size else float("inf"))
        self.best_genes.append(pop.genes[i].copy())
        self.genes.append(pop.genes.copy())
        self.costs.append(pop.costs.copy())

    @property
    def all_genes(self) -> np.ndarray:
        return np.concatenate(self.genes)

    @property
    def all_costs(self) -> np.ndarray:
        return np.concatenate(self.costs)

    def write_csv(self, path, names):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["generation", "best_cost", "mean_cost", *names])
            for g, (b, m, genes) in enumerate(zip(self.best_cost, self.mean_cost, self.best_genes)):
                w.writerow([g, repr(b), repr(m), *(repr(float(x)) for x in genes)])


def init_population(space: ParameterSpace, config: GaConfig, rng: np.random.Generator) -> Population:
    config = config.resolved(space.count)
    genes = rng.uniform(space.lower, space.upper, size=(config.population_size, space.count))
    return Population(genes)


def select_parents(population, rng: np.random.Generator) -> np.ndarray:
    """Roulette-wheel draw of ``size`` parents, returned as ``(size // 2, 2)`` couples.

    ``population`` may be a :class:`Population` or a fitness array.
    """
    fitness = population.fitness if isinstance(population, Population) else np.asarray(population, float)
    if not np.all(np.isfinite(fitness)) or np.any(fitness < 0):
        raise EvaluationError("fitness values must be finite and non-negative")
    total = fitness.sum()
    if total <= 0:
        raise EvaluationError("every individual failed evaluation")
    n = fitness.size
    idx = rng.choice(n, size=n - n % 2, replace=True, p=fitness / total)
    return idx.reshape(-1, 2)


def _two_sum(a, b):
    """Rounded sum and its exact rounding error."""
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def blend(x1, x2, a: float):
    """Arithmetic crossover of two parents with mixing coefficient ``a``.

    The second child absorbs the rounding error of the pair, so ``y1 + y2``
    equals ``x1 + x2`` to within one ulp of the larger parent. Children are
    clipped to the parents' interval to keep bound closure exact.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    y1 = a * x1 + (1.0 - a) * x2
    y2 = (1.0 - a) * x1 + a * x2
    s, e = _two_sum(x1, x2)
    t, f = _two_sum(y1, y2)
    y2 = y2 + ((s - t) + (e - f))
    lo, hi = np.minimum(x1, x2), np.maximum(x1, x2)
    return np.clip(y1, lo, hi), np.clip(y2, lo, hi)


def crossover(x1, x2, rng: np.random.Generator, crossover_prob: float):
    """Cross a couple with probability ``crossover_prob``; otherwise copy it.

    A single coefficient is drawn per couple.
    """
    x1 = np.asarray(getattr(x1, "genes", x1), dtype=float)
    x2 = np.asarray(getattr(x2, "genes", x2), dtype=float)
    if x1.shape != x2.shape:
        raise ValueError("parents must have the same number of genes")
    if rng.random() < crossover_prob:
        return blend(x1, x2, rng.random())
    return x1.copy(), x2.copy()


def mutate(genes, space: ParameterSpace, mutation_prob: float, rng: np.random.Generator,
           mode: str = "uniform", scale: float = 0.1) -> np.ndarray:
    """Redraw each gene independently with probability ``mutation_prob``.

    ``mode="uniform"`` redraws from the full bound interval, so
    ``mutation_prob=1`` samples the domain uniformly. ``mode="gaussian"``
    perturbs by ``scale`` times the interval width and clips to the bounds.
    """
    genes = np.array(getattr(genes, "genes", genes), dtype=float)
    hit = rng.random(genes.size) < mutation_prob
    if mode == "uniform":
        fresh = rng.uniform(space.lower, space.upper)
    elif mode == "gaussian":
        fresh = np.clip(genes + rng.normal(0.0, scale * space.width), space.lower, space.upper)
    else:
        raise ConfigError(f"unknown mutation mode {mode!r}")
    genes[hit] = fresh[hit]
    return genes


def _safe_cost(cost_fn: Callable, genes) -> float:
    try:
        with np.errstate(all="ignore"):
            c = float(cost_fn(genes))
    except (IdentificationError, ArithmeticError, ValueError) as exc:
        log.debug("evaluation failed at %s: %s", genes, exc)
        return float("inf")
    return c if np.isfinite(c) else float("inf")


def evaluate(cost_fn: Callable, genes: np.ndarray, map_fn: Callable = map) -> np.ndarray:
    """Cost of every row of ``genes``; failures become ``+inf``."""
    return np.fromiter(map_fn(lambda g: _safe_cost(cost_fn, g), list(genes)), dtype=float, count=len(genes))


def evolve(cost_fn: Callable, space: ParameterSpace, config: GaConfig,
           rng: np.random.Generator | None = None, map_fn: Callable = map):
    """Run the generational loop on an arbitrary cost function.

    Returns the best individual ever evaluated and the trace.
    """
    config = config.resolved(space.count)
    rng = np.random.default_rng(config.seed) if rng is None else rng
    pop = init_population(space, config, rng)
    pop.costs = evaluate(cost_fn, pop.genes, map_fn)
    trace = GaTrace()
    trace.record(pop)
    best = pop.best()

    for _ in range(config.generations):
        couples = select_parents(pop, rng)
        children = np.empty_like(pop.genes)
        for k, (i, j) in enumerate(couples):
            y1, y2 = crossover(pop.genes[i], pop.genes[j], rng, config.crossover_prob)
            children[2 * k] = mutate(y1, space, config.mutation_prob, rng,
                                     config.mutation, config.mutation_scale)
            children[2 * k + 1] = mutate(y2, space, config.mutation_prob, rng,
                                         config.mutation, config.mutation_scale)
        costs = evaluate(cost_fn, children, map_fn)
        if config.elitism and best.cost < costs.min():
            worst = int(np.argmax(costs))
            children[worst] = best.genes
            costs[worst] = best.cost
        pop = Population(children, costs)
        trace.record(pop)
        if pop.costs.min() < best.cost:
            best = pop.best()
    return best, trace


def run_ga(model: ForwardModel, dataset: ExperimentSet, space: ParameterSpace, config: GaConfig,
           rng: np.random.Generator | None = None, map_fn: Callable = map):
    return evolve(Objective(model, dataset), space, config, rng, map_fn)
