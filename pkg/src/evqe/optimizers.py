"""Derivative-free minimizers: Nelder-Mead for exact objectives, SPSA for noisy ones.

Both return the best point ever evaluated, so a call never reports a value
worse than anything it has seen.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import OptimizerError


class Objective:
    """Wraps a cost function, counts calls and remembers the best evaluation."""

    def __init__(self, fn: Callable[[np.ndarray], float], arity: int):
        self.fn = fn
        self.arity = arity
        self.evaluations = 0
        self.best_value = math.inf
        self.best_params: np.ndarray | None = None

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        self.evaluations += 1
        value = float(self.fn(x))
        if not math.isfinite(value):
            raise OptimizerError(f"objective returned {value} at evaluation {self.evaluations} (x={x.tolist()})")
        if value < self.best_value:
            self.best_value = value
            self.best_params = x.copy()
        return value


@dataclass
class OptResult:
    best_params: np.ndarray
    best_value: float
    evaluations: int
    converged: bool
    iterations: int = 0


def _as_objective(obj, x0) -> Objective:
    if isinstance(obj, Objective):
        return obj
    return Objective(obj, len(x0))


def nelder_mead(obj, x0, max_iter: int = 200, tol: float = 1e-10, step: float = 0.1,
                xtol: float = 1e-8) -> OptResult:
    """Simplex search with reflection 1, expansion 2, contraction 0.5 and shrink 0.5.

    The initial simplex is ``x0`` plus ``step`` along each coordinate. Stops when
    the spread of simplex values drops below ``tol`` while the simplex itself is
    narrower than ``xtol`` (a flat spread alone can straddle a minimum), or after
    ``max_iter`` iterations.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    n = len(x0)
    if n < 1:
        raise ValueError("nelder_mead needs at least one parameter")
    objective = _as_objective(obj, x0)
    start = objective.evaluations

    simplex = np.vstack([x0, x0 + step * np.eye(n)])
    values = np.array([objective(x) for x in simplex])
    converged = False
    it = 0
    while True:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        if values[-1] - values[0] < tol and np.abs(simplex[1:] - simplex[0]).max() <= xtol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        centroid = simplex[:-1].sum(axis=0) / n
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = objective(xr)
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = objective(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
                fc = objective(xc)
                accept = fc <= fr
            else:
                xc = centroid + 0.5 * (worst - centroid)
                fc = objective(xc)
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                best = simplex[0]
                simplex[1:] = best + 0.5 * (simplex[1:] - best)
                values[1:] = [objective(x) for x in simplex[1:]]

    return OptResult(
        best_params=objective.best_params.copy(),
        best_value=objective.best_value,
        evaluations=objective.evaluations - start,
        converged=converged,
        iterations=it,
    )


@dataclass(frozen=True)
class SpsaGains:
    a: float = 0.2
    c: float = 0.1
    A: float | None = None  # defaults to max_iter / 10
    alpha: float = 0.602
    gamma: float = 0.101


def spsa(obj, x0, max_iter: int = 100, gains: SpsaGains | None = None,
         rng: np.random.Generator | None = None, f0: float | None = None) -> OptResult:
    """Simultaneous perturbation stochastic approximation.

    Uses exactly ``2 * max_iter`` evaluations at ``x_k +/- c_k * delta`` plus one
    at the final iterate. The returned point is the best of those; if ``f0`` (a
    known value at ``x0``) beats them all, ``x0`` is returned instead.
    """
    x = np.asarray(x0, dtype=float).ravel().copy()
    if len(x) < 1:
        raise ValueError("spsa needs at least one parameter")
    gains = gains or SpsaGains()
    big_a = gains.A if gains.A is not None else max_iter / 10
    rng = rng if rng is not None else np.random.default_rng()
    objective = _as_objective(obj, x)
    start = objective.evaluations
    if f0 is not None:
        objective.best_value, objective.best_params = float(f0), x.copy()

    for k in range(max_iter):
        ak = gains.a / (k + 1 + big_a) ** gains.alpha
        ck = gains.c / (k + 1) ** gains.gamma
        delta = rng.choice((-1.0, 1.0), size=len(x))
        fp = objective(x + ck * delta)
        fm = objective(x - ck * delta)
        grad = (fp - fm) / (2.0 * ck) * delta
        x = x - ak * grad
    objective(x)

    return OptResult(
        best_params=objective.best_params.copy(),
        best_value=objective.best_value,
        evaluations=objective.evaluations - start,
        converged=True,
        iterations=max_iter,
    )


OPTIMIZERS = ("nelder_mead", "spsa")


def minimize(fn, x0, method: str = "nelder_mead", max_iter: int = 100,
             rng: np.random.Generator | None = None, f0: float | None = None,
             tol: float = 1e-10) -> OptResult:
    if method == "nelder_mead":
        return nelder_mead(fn, x0, max_iter=max_iter, tol=tol)
    if method == "spsa":
        return spsa(fn, x0, max_iter=max_iter, rng=rng, f0=f0)
    raise ValueError(f"unknown optimizer {method!r}; expected one of {OPTIMIZERS}")
