"""Box-constrained Levenberg-Marquardt on a residual vector.

The damped Gauss-Newton system is rescaled to a unit-diagonal Hessian before
solving, so the damping factor is independent of parameter units. Trial points
are projected onto the bounds. Damping follows the classic multiply/divide
rule: divide after an accepted step, multiply and retry with the same Jacobian
after a rejected one.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, IdentificationError, PreconditionError, SolverError
from .model import ParameterSpace, clamp_to_bounds

FROZEN_DIAGONAL = 1e-30


@dataclass(frozen=True)
class LmConfig:
    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 10.0
    lambda_max: float = 1e10
    max_iterations: int = 200
    fd_relative_step: float = 1e-6
    cost_tol: float = 1e-12
    step_tol: float = 1e-10

    def __post_init__(self):
        values = [self.lambda0, self.lambda_max, self.max_iterations,
                  self.fd_relative_step, self.cost_tol, self.step_tol]
        if any(v <= 0 for v in values):
            raise ConfigError("LM settings must all be positive")
        if self.lambda_up <= 1 or self.lambda_down <= 1:
            raise ConfigError("lambda_up and lambda_down must exceed 1")


@dataclass
class LmState:
    theta: np.ndarray
    cost: float
    gradient: np.ndarray
    hessian_approx: np.ndarray
    lam: float
    iteration: int


@dataclass
class LmTrace:
    """One row per trial step: ``(k, cost, lambda, step_norm, accepted)``.

    ``cost`` is the current cost after the trial is accepted or rejected.
    """

    rows: list = field(default_factory=list)
    reason: str = ""
    theta: np.ndarray | None = None
    cost: float = float("nan")
    state: LmState | None = None
    n_accepted: int = 0

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "cost", "lambda", "step_norm", "accepted"])
            for k, f, lam, step, ok in self.rows:
                w.writerow([k, repr(f), repr(lam), repr(step), int(ok)])


def fd_jacobian(residual_fn: Callable, theta, space: ParameterSpace,
                fd_relative_step: float = 1e-6, r0=None) -> np.ndarray:
    """Forward-difference Jacobian of ``residual_fn`` at ``theta``.

    The step for parameter ``i`` is ``fd_relative_step * max(|theta_i|,
    1e-3 * width_i)``; a backward difference is taken when the forward point
    would leave the upper bound.
    """
    theta = np.asarray(theta, dtype=float)
    try:
        r0 = np.asarray(residual_fn(theta), dtype=float) if r0 is None else np.asarray(r0, float)
    except (IdentificationError, ArithmeticError, ValueError) as exc:
        raise SolverError(f"residual evaluation failed at {theta}: {exc}") from exc
    jac = np.empty((r0.size, theta.size))
    for i in range(theta.size):
        h = fd_relative_step * max(abs(theta[i]), 1e-3 * space.width[i])
        if theta[i] + h > space.upper[i]:
            h = -h
        shifted = theta.copy()
        shifted[i] += h
        h = shifted[i] - theta[i]  # exactly representable step
        try:
            ri = np.asarray(residual_fn(shifted), dtype=float)
        except (IdentificationError, ArithmeticError, ValueError) as exc:
            raise SolverError(f"residual evaluation failed at {shifted}: {exc}") from exc
        jac[:, i] = (ri - r0) / h
    return jac


def normalized_step(gradient, hessian, lam: float) -> np.ndarray:
    """Damped step solved on the unit-diagonal rescaling of the system.

    Coordinates whose Hessian diagonal vanishes are frozen at a zero step.
    """
    g = np.asarray(gradient, dtype=float)
    H = np.asarray(hessian, dtype=float)
    diag = np.diag(H)
    active = diag > FROZEN_DIAGONAL
    step = np.zeros_like(g)
    if not active.any():
        return step
    s = np.sqrt(diag[active])
    g_n = g[active] / s
    H_n = H[np.ix_(active, active)] / np.outer(s, s)
    A = H_n + lam * np.eye(s.size)
    try:
        d = np.linalg.solve(A, -g_n)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular damped system at lambda={lam:g}") from exc
    if not np.all(np.isfinite(d)):
        raise SolverError(f"non-finite step at lambda={lam:g}")
    step[active] = d / s
    return step


def run_lm(residual_fn: Callable, theta0, space: ParameterSpace, config: LmConfig = LmConfig(),
           jacobian_fn: Callable | None = None):
    """Minimize ``sum(residual_fn(theta)**2)`` within the bounds of ``space``.

    Returns ``(theta, trace)``; ``theta`` is the best point visited and
    ``trace.reason`` names the stopping rule that fired.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    if theta.shape != (space.count,):
        raise PreconditionError(f"start point has shape {theta.shape}, expected ({space.count},)")
    if not space.contains(theta):
        raise PreconditionError(f"start point {theta} lies outside the bounds")
    trace = LmTrace()

    def evaluate(x):
        with np.errstate(all="ignore"):
            r = np.asarray(residual_fn(x), dtype=float)
        if not np.all(np.isfinite(r)):
            raise ArithmeticError("non-finite residuals")
        return r

    try:
        r = evaluate(theta)
    except (IdentificationError, ArithmeticError, ValueError) as exc:
        raise SolverError(f"residual evaluation failed at start point: {exc}", trace) from exc
    cost = float(r @ r)
    lam = config.lambda0
    k = 0
    failures = 0
    state = None

    while True:
        if cost == 0.0:
            trace.reason = "zero cost"
            break
        if k >= config.max_iterations:
            trace.reason = "max iterations"
            break
        if jacobian_fn is None:
            J = fd_jacobian(residual_fn, theta, space, config.fd_relative_step, r0=r)
        else:
            J = np.asarray(jacobian_fn(theta), dtype=float)
        g = J.T @ r
        H = J.T @ J
        state = LmState(theta.copy(), cost, g, H, lam, k)

        accepted = False
        while not accepted:
            if k >= config.max_iterations:
                trace.reason = "max iterations"
                break
            k += 1
            try:
                step = normalized_step(g, H, lam)
            except SolverError:
                step = None
            if step is not None:
                trial = clamp_to_bounds(theta + step, space)
                move = float(np.linalg.norm(trial - theta))
                if move / max(float(np.linalg.norm(theta)), 1.0) < config.step_tol:
                    trace.reason = "step tolerance"
                    break
                try:
                    r_trial = evaluate(trial)
                    failures = 0
                except (IdentificationError, ArithmeticError, ValueError):
                    r_trial = None
                    failures += 1
            else:
                move, r_trial = float("nan"), None

            if r_trial is not None and float(r_trial @ r_trial) < cost:
                cost_trial = float(r_trial @ r_trial)
                decrease = (cost - cost_trial) / cost
                theta, r, cost = trial, r_trial, cost_trial
                lam /= config.lambda_down
                accepted = True
                trace.n_accepted += 1
                trace.rows.append((k, cost, lam, move, True))
                if decrease < config.cost_tol:
                    trace.reason = "cost tolerance"
            else:
                lam *= config.lambda_up
                trace.rows.append((k, cost, lam, move, False))
                if lam > config.lambda_max:
                    trace.reason = "lambda limit"
                    break
        if not accepted or trace.reason:
            break

    if failures and trace.reason == "lambda limit" and trace.n_accepted == 0:
        trace.theta, trace.cost = theta, cost
        raise SolverError("residual evaluation failed persistently", trace)
    trace.theta, trace.cost, trace.state = theta, cost, state
    return theta, trace
