"""
Levenberg-Marquardt with bounds
===============================

The local solver works on the residual vector whose squared norm is the cost.
Its damped system is rescaled to a unit diagonal, so the damping factor does
not depend on parameter units.
"""
import numpy as np

from hybrid_ident import CreepModel, LmConfig, ParameterSpace, TestDefinition, run_lm
from hybrid_ident.dataio import generate_synthetic
from hybrid_ident.lm import fd_jacobian, normalized_step
from hybrid_ident.objective import Objective

# On an affine residual the first step at small damping is the least-squares solution
A = np.array([[1.0, 2.0], [3.0, -1.0], [0.5, 0.5]])
x_true = np.array([0.7, -1.2])
space = ParameterSpace(("u", "v"), [-10.0, -10.0], [10.0, 10.0])
theta, trace = run_lm(lambda x: A @ x - A @ x_true, np.array([9.0, 9.0]), space, LmConfig(lambda0=1e-12))
print("solution:", theta, "stopped on:", trace.reason, "after", len(trace.rows), "trials")

# The normalized step for H = diag(4, 25), g = (2, 5) without damping
print("step:", normalized_step(np.array([2.0, 5.0]), np.diag([4.0, 25.0]), 0.0))

# Fit the creep law from a start 20% off
t = np.concatenate([np.geomspace(0.01, 1.0, 6), np.linspace(1.5, 30.0, 20)])
test = TestDefinition("creep", {"axial": t}, {"steps": [[0.0, 10.0], [15.0, 0.0]]})
truth = np.array([1000.0, 2000.0, 5.0])
data = generate_synthetic(CreepModel(), truth, [test])
objective = Objective(CreepModel(), data)
box = ParameterSpace(("E", "E_v", "tau"), [500.0, 1000.0, 1.0], [1500.0, 3000.0, 9.0])
theta, trace = run_lm(objective.residuals, truth * [1.2, 0.8, 1.2], box)
print("identified:", theta, "cost:", trace.cost, "reason:", trace.reason)
for k, f, lam, step, ok in trace.rows[:6]:
    print(f"  trial {k}: cost {f:.3e}, lambda {lam:.0e}, {'accepted' if ok else 'rejected'}")

# The finite-difference Jacobian agrees with the closed form
model = CreepModel()
num = fd_jacobian(lambda th: model.predict(th, test, "axial"), truth, box)
ana = model.analytic_jacobian(truth, test, "axial")
print("max column-scaled FD error:", np.max(np.abs(num - ana) / np.abs(ana).max(axis=0)))
