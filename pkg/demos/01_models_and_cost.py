"""
Forward models and the weighted cost
====================================

Two synthetic forward models ship with the package: a three-parameter creep
law and a four-parameter "sloppy" model whose identifiability depends on the
experiment. The cost compares measurements with predictions sensor by sensor,
each sensor scaled by its largest measured value.
"""
import numpy as np

from hybrid_ident import CreepModel, SloppyModel, TestDefinition
from hybrid_ident.dataio import generate_synthetic
from hybrid_ident.objective import Objective, adaptive_fitness, sensor_weight

# A creep test: load to 10 at t = 0, unload at t = 10, two strain gauges.
# The hoop gauge reads -0.4 times the axial strain.
t = np.linspace(0.0, 30.0, 31)
test = TestDefinition("creep", {"axial": t, "hoop": t},
                      {"steps": [[0.0, 10.0], [10.0, 0.0]], "gains": {"hoop": -0.4}})
truth = np.array([1000.0, 2000.0, 5.0])  # E, E_v, tau
model = CreepModel()
eps = model.predict(truth, test, "axial")
print("axial strain at t = 0, 5, 10, 20:", eps[[0, 5, 10, 20]])

# Noise-free data reproduce the truth exactly, so the cost vanishes there
data = generate_synthetic(model, truth, [test])
objective = Objective(model, data)
print("cost at truth:", objective.cost(truth))
for factor in (1.01, 1.1, 1.5):
    theta = truth * [factor, 1.0, 1.0]
    print(f"cost with E x {factor}: {objective.cost(theta):.3e}")

# Each sensor is divided by its largest squared measurement, so the hoop gauge
# weighs as much as the axial one even though its readings are smaller
for key, series in data.series.items():
    print(key, "chi =", sensor_weight(series).chi)

# The breakdown shows per-sensor and per-test contributions
br = objective.breakdown(truth * [1.1, 0.9, 1.0])
print("per sensor:", br.per_sensor)
print("total:", br.total, "= sum of squared residual vector:", br.residual_vector @ br.residual_vector)

# The GA works with fitness 1/f, guarded at f = 0
print("fitness of f = 0, 1e-6, 1:", adaptive_fitness(np.array([0.0, 1e-6, 1.0])))

# The sloppy model: a "restricted" test only sees the product a*b and c,
# a "redundant" test sees every parameter
ts = np.linspace(0.5, 5.0, 10)
restricted = TestDefinition("linear", {"y": ts}, {"kind": "restricted"})
sloppy = SloppyModel()
print("restricted, (2, 3, 1, 0):", sloppy.predict([2, 3, 1, 0], restricted, "y")[:3])
print("restricted, (6, 1, 1, 9):", sloppy.predict([6, 1, 1, 9], restricted, "y")[:3])
