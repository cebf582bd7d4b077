"""
The real-coded genetic algorithm
================================

Roulette-wheel selection on 1/f, arithmetic crossover, uniform-redraw mutation
and elitism. The GA explores; it is not expected to converge tightly.
"""
import numpy as np

from hybrid_ident import GaConfig, ParameterSpace
from hybrid_ident.ga import crossover, evolve, mutate, select_parents

rng = np.random.default_rng(0)

# Selection is proportional to fitness: with fitness (3, 1) the first
# individual is drawn three times out of four
picks = np.concatenate([select_parents(np.array([3.0, 1.0]), rng).ravel() for _ in range(20000)])
print("share of first individual:", np.mean(picks == 0))

# Crossover mixes a couple with one coefficient; the children stay between
# the parents and keep their sum
x1, x2 = np.array([0.1, 5.0]), np.array([0.9, 1.0])
y1, y2 = crossover(x1, x2, rng, crossover_prob=1.0)
print("children:", y1, y2, "sum kept:", y1 + y2, x1 + x2)

# Mutation redraws genes within the bounds; probability 1 samples the domain uniformly
space = ParameterSpace(("x", "y"), [0.0, 0.0], [1.0, 10.0])
print("mutated:", mutate([0.5, 5.0], space, 1.0, rng))


# The Rosenbrock valley on a box: the GA gets close to (1, 1) but not onto it
def rosenbrock(theta):
    x, y = theta
    return (1 - x) ** 2 + 100 * (y - x * x) ** 2


space = ParameterSpace(("x", "y"), [-2.0, -1.0], [2.0, 3.0])
best, trace = evolve(rosenbrock, space, GaConfig(population_size=40, generations=60), rng)
print("best genes:", best.genes, "cost:", best.cost)
for g in (0, 10, 30, 60):
    print(f"generation {g:2d}: best {trace.best_cost[g]:.4g}, mean {trace.mean_cost[g]:.4g}")
