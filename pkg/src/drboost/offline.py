"""Offline stochastic solvers over a convex feasible set.

Boosting gradient ascent (projected ascent on the surrogate ``F``), boosting
Frank-Wolfe with momentum, and three baselines: projected gradient ascent on
``f``, continuous greedy and stochastic continuous greedy.

Every solver returns an ``OfflineTrace``.  ``iterates`` holds ``x_1`` (the
start) through ``x_{T+1}``; ``values[t - 1]`` is ``f`` at the point produced by
iteration ``t``.  Randomized output selection picks ``x_l`` for ``l`` in
``1..T`` with probability ``weights[l - 1] / sum(weights)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .boosting import BoostConfig, boost_constants, boost_grad
from .exceptions import ArgumentError, ConvergenceError
from .numerics import as_stream
from .objectives import noisy_grad
from .validation import check_gamma, check_int, check_real, check_vector

__all__ = [
    "OfflineConfig",
    "OfflineTrace",
    "run_bga",
    "run_ga",
    "run_cg",
    "run_scg",
    "run_bfw",
    "select_index",
    "bga_steps",
    "bfw_rho",
]


@dataclass(frozen=True)
class OfflineConfig:
    """Solver settings.

    ``start`` is ``"origin-projected"`` (projection of 0 onto the set), or an
    explicit feasible point.  ``gamma=None`` takes the objective's own gamma.
    ``v0`` selects the initial momentum of boosting Frank-Wolfe: ``"zero"``
    or ``"start"`` (the start point itself).
    """

    T: int = 100
    batch: int = 1
    c: float = 1.0
    gamma: float | None = None
    eta_override: float | None = None
    delta_bfw: float = 1.0
    start: object = "origin-projected"
    v0: str = "zero"

    def __post_init__(self):
        check_int(self.T, "T", low=1)
        check_int(self.batch, "batch", low=1)
        check_real(self.c, "c", low=0.0, low_open=True)
        if self.gamma is not None:
            check_gamma(self.gamma)
        if self.eta_override is not None:
            check_real(self.eta_override, "eta_override", low=0.0, low_open=True)
        check_real(self.delta_bfw, "delta_bfw", low=0.0, low_open=True)
        if isinstance(self.start, str):
            if self.start != "origin-projected":
                raise ArgumentError(f"unknown start {self.start!r}")
        else:
            object.__setattr__(self, "start", check_vector(self.start, name="start"))
        if self.v0 not in ("zero", "start"):
            raise ArgumentError(f"v0 must be 'zero' or 'start', got {self.v0!r}")


@dataclass
class OfflineTrace:
    solver: str
    values: np.ndarray
    iterates: np.ndarray
    weights: np.ndarray
    chosen_index: int
    chosen_point: np.ndarray
    wallclock_ns: np.ndarray
    seed: int | None
    steps: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def T(self):
        return self.values.shape[0]

    @property
    def total_weight(self):
        return float(self.weights.sum())

    @property
    def final_value(self):
        return float(self.values[-1])


def select_index(weights, rng):
    """Draw ``l`` in ``1..len(weights)`` with probability proportional to the weight."""
    w = check_vector(weights, name="weights")
    if np.any(w < 0):
        raise ArgumentError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise ArgumentError("weights must not all be zero")
    cdf = np.cumsum(w) / total
    cdf[-1] = 1.0
    p = float(as_stream(rng).uniform01())
    idx = int(np.searchsorted(cdf, p, side="right"))
    return min(idx, w.shape[0] - 1) + 1


def _start_point(fset, cfg):
    if isinstance(cfg.start, str):
        return fset.project(np.zeros(fset.n))
    x = cfg.start
    if x.shape[0] != fset.n:
        raise ArgumentError(f"start must have length {fset.n}")
    return x.copy()


def _project(fset, y, t):
    try:
        return fset.project(y)
    except ConvergenceError as err:
        err.index = t
        raise


def _gamma(obj, cfg):
    return obj.meta.gamma if cfg.gamma is None else cfg.gamma


def bga_steps(obj, fset, cfg):
    """Step sizes ``1 / (sigma_gamma sqrt(t) / diam + L_gamma)`` for ``t = 1..T``."""
    if cfg.eta_override is not None:
        return np.full(cfg.T, float(cfg.eta_override))
    meta = obj.meta
    if cfg.gamma is not None and cfg.gamma != meta.gamma:
        meta = type(meta)(n=meta.n, a=meta.a, L=meta.L, gamma=cfg.gamma, sigma=meta.sigma)
    k = boost_constants(meta, cfg.c)
    diam = fset.diam_bound
    t = np.arange(1, cfg.T + 1, dtype=np.float64)
    denom = k.sigma_gamma * np.sqrt(t) / diam + k.L_gamma
    if np.any(denom <= 0):
        raise ArgumentError("step size undefined: sigma_gamma and L_gamma are both zero")
    return 1.0 / denom


def _tau(obj, cfg):
    meta = obj.meta
    gamma = _gamma(obj, cfg)
    return max(1.0 / gamma, meta.L * meta.radius**2 / cfg.c)


def _finish(solver, obj, iterates, weights, rng, clock, steps, chosen=None):
    values = np.array([obj.value(x) for x in iterates[1:]])
    if chosen is None:
        chosen = select_index(weights, rng)
        point = iterates[chosen - 1].copy()
    else:
        point = iterates[-1].copy()
    return OfflineTrace(
        solver=solver,
        values=values,
        iterates=iterates,
        weights=weights,
        chosen_index=chosen,
        chosen_point=point,
        wallclock_ns=np.asarray(clock, dtype=np.int64),
        seed=getattr(rng, "seed", None),
        steps=np.asarray(steps, dtype=np.float64),
    )


def run_bga(obj, fset, cfg, rng):
    """Boosting gradient ascent: projected ascent with the boosted gradient estimator.

    ``x_{t+1} = P(x_t + eta_t * grad_F_estimate(x_t))``.  The output index is
    drawn with weights 1 for ``t < T`` and ``1 + ln(tau)`` for ``t = T``.
    """
    rng = as_stream(rng)
    gamma = _gamma(obj, cfg)
    bcfg = BoostConfig(gamma=gamma, batch=cfg.batch, c=cfg.c)
    eta = bga_steps(obj, fset, cfg)
    T = cfg.T
    x = _start_point(fset, cfg)
    iterates = np.empty((T + 1, x.shape[0]))
    iterates[0] = x
    clock = []
    for t in range(1, T + 1):
        t0 = time.perf_counter_ns()
        g = boost_grad(obj, x, bcfg, rng)
        x = _project(fset, x + eta[t - 1] * g, t)
        iterates[t] = x
        clock.append(time.perf_counter_ns() - t0)
    weights = np.ones(T)
    weights[-1] = 1.0 + math.log(_tau(obj, cfg))
    return _finish("BGA", obj, iterates, weights, rng, clock, eta)


def run_ga(obj, fset, cfg, rng):
    """Projected stochastic gradient ascent on ``f`` with ``eta_t = 1 / sqrt(t)``; outputs the last iterate."""
    rng = as_stream(rng)
    T = cfg.T
    x = _start_point(fset, cfg)
    iterates = np.empty((T + 1, x.shape[0]))
    iterates[0] = x
    t_idx = np.arange(1, T + 1, dtype=np.float64)
    eta = np.full(T, cfg.eta_override) if cfg.eta_override is not None else 1.0 / np.sqrt(t_idx)
    clock = []
    for t in range(1, T + 1):
        t0 = time.perf_counter_ns()
        g = noisy_grad(obj, x, cfg.batch, rng)
        x = _project(fset, x + eta[t - 1] * g, t)
        iterates[t] = x
        clock.append(time.perf_counter_ns() - t0)
    weights = np.zeros(T)
    weights[-1] = 1.0
    return _finish("GA", obj, iterates, weights, rng, clock, eta, chosen=T)


def _greedy(solver, obj, fset, cfg, direction):
    # Continuous greedy skeleton: x grows from the origin by lmo(d_t) / T.
    # The iterate itself is kept exact; the recorded point is its projection,
    # which is the identity on down-closed sets and on the final iterate.
    T = cfg.T
    n = fset.n
    x = np.zeros(n)
    iterates = np.empty((T + 1, n))
    iterates[0] = fset.project(x) if not fset.down_closed else x
    clock = []
    for t in range(1, T + 1):
        t0 = time.perf_counter_ns()
        d = direction(t, x)
        x = x + fset.lmo(d) / T
        iterates[t] = x if (fset.down_closed and fset.contains(x, 1e-9)) else _project(fset, x, t)
        clock.append(time.perf_counter_ns() - t0)
    weights = np.zeros(T)
    weights[-1] = 1.0
    return _finish(solver, obj, iterates, weights, None, clock, np.full(T, 1.0 / T), chosen=T)


def run_cg(obj, fset, cfg, rng=None):
    """Continuous greedy with exact gradients: ``x_{t+1} = x_t + lmo(grad f(x_t)) / T`` from 0."""
    return _greedy("CG", obj, fset, cfg, lambda t, x: obj.grad(x))


def scg_rho(t):
    return 1.0 / (t + 3.0) ** (2.0 / 3.0)


def run_scg(obj, fset, cfg, rng):
    """Stochastic continuous greedy: greedy steps along a momentum average of noisy gradients."""
    rng = as_stream(rng)
    state = {"d": np.zeros(fset.n)}

    def direction(t, x):
        rho = scg_rho(t)
        state["d"] = (1.0 - rho) * state["d"] + rho * noisy_grad(obj, x, cfg.batch, rng)
        return state["d"]

    trace = _greedy("SCG", obj, fset, cfg, direction)
    trace.seed = rng.seed
    return trace


def bfw_rho(t, delta):
    """Momentum weight ``2 / (t + 3)^{2 / (3 (1 + delta))}``, capped at 1."""
    return min(1.0, 2.0 / (t + 3.0) ** (2.0 / (3.0 * (1.0 + delta))))


def run_bfw(obj, fset, cfg, rng):
    """Boosting Frank-Wolfe: momentum on the boosted gradient, fixed step ``T^{-1/(1+delta)}``.

    Iterates are convex combinations of the start and LMO vertices, so they
    stay feasible without projection.
    """
    rng = as_stream(rng)
    gamma = _gamma(obj, cfg)
    bcfg = BoostConfig(gamma=gamma, batch=cfg.batch, c=cfg.c)
    T, delta = cfg.T, cfg.delta_bfw
    eta = float(cfg.eta_override) if cfg.eta_override is not None else T ** (-1.0 / (1.0 + delta))
    x = _start_point(fset, cfg)
    v = x.copy() if cfg.v0 == "start" else np.zeros_like(x)
    iterates = np.empty((T + 1, x.shape[0]))
    iterates[0] = x
    clock = []
    for t in range(1, T + 1):
        t0 = time.perf_counter_ns()
        rho = bfw_rho(t, delta)
        v = (1.0 - rho) * v + rho * boost_grad(obj, x, bcfg, rng)
        s = fset.lmo(v)
        x = (1.0 - eta) * x + eta * s
        iterates[t] = x
        clock.append(time.perf_counter_ns() - t0)
    weights = np.full(T, eta)
    weights[-1] = (1.0 + math.log(_tau(obj, cfg))) / eta
    return _finish("BFW", obj, iterates, weights, rng, clock, np.full(T, eta))
