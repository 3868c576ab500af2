"""Estimator-style wrappers around the solvers.

``fit(objective, feasible_set)`` runs the solver and stores ``solution_``,
``value_`` and ``trace_``; hyperparameters live in ``__init__`` so that
``get_params`` / ``set_params`` and ``sklearn.base.clone`` work as usual.
There is no data matrix: the "data" is the objective oracle.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import offline, online
from .exceptions import ArgumentError
from .feasible import FeasibleSet
from .numerics import RngStream
from .objectives import Objective

__all__ = [
    "BoostingGradientAscent",
    "GradientAscent",
    "ContinuousGreedy",
    "StochasticContinuousGreedy",
    "BoostingFrankWolfe",
    "OnlineBoostingGradientAscent",
]


def _check_problem(objective, feasible_set):
    if not isinstance(objective, Objective):
        raise ArgumentError(f"expected an Objective, got {type(objective).__name__}")
    if not isinstance(feasible_set, FeasibleSet):
        raise ArgumentError(f"expected a FeasibleSet, got {type(feasible_set).__name__}")
    if objective.meta.n != feasible_set.n:
        raise ArgumentError("objective and feasible set dimensions differ")


class _OfflineSolver(BaseEstimator):
    _runner = None

    def __init__(self, T=100, batch=1, c=1.0, gamma=None, eta=None, start="origin-projected", random_state=0):
        self.T = T
        self.batch = batch
        self.c = c
        self.gamma = gamma
        self.eta = eta
        self.start = start
        self.random_state = random_state

    def _config(self):
        return offline.OfflineConfig(
            T=self.T, batch=self.batch, c=self.c, gamma=self.gamma,
            eta_override=self.eta, start=self.start,
        )

    def fit(self, objective, feasible_set):
        _check_problem(objective, feasible_set)
        runner = type(self)._runner
        self.trace_ = runner(objective, feasible_set, self._config(), RngStream(self.random_state))
        self.solution_ = self.trace_.chosen_point
        self.value_ = objective.value(self.solution_)
        return self

    def score(self, objective):
        """Objective value of the fitted solution."""
        check_is_fitted(self, "solution_")
        return objective.value(self.solution_)


class BoostingGradientAscent(_OfflineSolver):
    """Projected ascent on the boosted surrogate; ``eta=None`` uses the theory schedule."""

    _runner = staticmethod(offline.run_bga)


class GradientAscent(_OfflineSolver):
    """Projected stochastic gradient ascent on ``f`` with ``eta_t = 1 / sqrt(t)``."""

    _runner = staticmethod(offline.run_ga)


class ContinuousGreedy(_OfflineSolver):
    _runner = staticmethod(offline.run_cg)


class StochasticContinuousGreedy(_OfflineSolver):
    _runner = staticmethod(offline.run_scg)


class BoostingFrankWolfe(_OfflineSolver):
    _runner = staticmethod(offline.run_bfw)

    def __init__(self, T=100, batch=1, c=1.0, gamma=None, eta=None, start="origin-projected",
                 random_state=0, delta=1.0, v0="zero"):
        super().__init__(T=T, batch=batch, c=c, gamma=gamma, eta=eta, start=start, random_state=random_state)
        self.delta = delta
        self.v0 = v0

    def _config(self):
        return offline.OfflineConfig(
            T=self.T, batch=self.batch, c=self.c, gamma=self.gamma, eta_override=self.eta,
            start=self.start, delta_bfw=self.delta, v0=self.v0,
        )


class OnlineBoostingGradientAscent(BaseEstimator):
    """Online boosted ascent under a delay schedule; ``fit`` plays the whole sequence."""

    def __init__(self, batch=1, step="theory", grad_bound=None, eta=None, random_state=0):
        self.batch = batch
        self.step = step
        self.grad_bound = grad_bound
        self.eta = eta
        self.random_state = random_state

    def fit(self, objectives, feasible_set, schedule=None):
        objectives = list(objectives)
        if not objectives:
            raise ArgumentError("need at least one objective")
        for f in objectives:
            _check_problem(f, feasible_set)
        T = len(objectives)
        schedule = online.build_schedule("none", T) if schedule is None else schedule
        cfg = online.OnlineConfig(
            T=T, batch=self.batch, step=self.step, grad_bound=self.grad_bound, eta_override=self.eta
        )
        self.trace_ = online.run_obga(objectives, feasible_set, schedule, cfg, RngStream(self.random_state))
        self.actions_ = self.trace_.actions
        self.cum_reward_ = float(self.trace_.rewards.sum())
        return self

    def regret(self, objectives, x_star, alpha=None):
        """Cumulative alpha-regret curve against ``x_star`` (default alpha ``1 - e^{-gamma}``)."""
        check_is_fitted(self, "trace_")
        objectives = list(objectives)
        if alpha is None:
            alpha = -math.expm1(-objectives[0].meta.gamma)
        return online.eval_alpha_regret(self.trace_, objectives, alpha, np.asarray(x_star, dtype=float))
