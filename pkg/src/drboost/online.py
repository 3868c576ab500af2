"""Online maximization with delayed stochastic gradient feedback.

Each round ``t`` the learner plays ``x_t`` and collects ``f_t(x_t)``.  The
gradient feedback for round ``t`` arrives at the end of round
``t + d_t - 1``; feedback that would arrive after the horizon is dropped.

Solvers: boosted online gradient ascent (feedback is the boosted estimator of
``grad F_t``), plain delayed online gradient ascent, and the Meta-Frank-Wolfe
family built from ``K`` online linear-reward oracles.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .boosting import BoostConfig, boost_grad, boost_scale, grad_F_ref
from .exceptions import ArgumentError, ConvergenceError
from .numerics import as_stream
from .objectives import mean_objective, noisy_grad
from .offline import bfw_rho, scg_rho
from .validation import check_gamma, check_int, check_real, check_vector

__all__ = [
    "DelaySchedule",
    "build_schedule",
    "OnlineConfig",
    "OnlineTrace",
    "run_obga",
    "run_oga",
    "run_meta_fw",
    "estimate_grad_bound",
    "approx_hindsight_opt",
    "eval_alpha_regret",
]


@dataclass(frozen=True)
class DelaySchedule:
    """Per-round delays with the derived arrival buckets.

    ``buckets[t - 1]`` lists (1-based, ascending) the rounds whose feedback
    arrives at the end of round ``t``.
    """

    T: int
    d: np.ndarray
    buckets: tuple
    D: int
    dropped: tuple

    @classmethod
    def from_delays(cls, delays):
        d = np.asarray(delays)
        if d.ndim != 1 or d.shape[0] < 1:
            raise ArgumentError("delays must be a non-empty 1-D sequence")
        if not np.issubdtype(d.dtype, np.integer):
            if not np.all(np.isfinite(d)) or np.any(d != np.round(d)):
                raise ArgumentError("delays must be integers")
        d = d.astype(np.int64)
        if np.any(d < 1):
            raise ArgumentError("delays must be >= 1")
        T = int(d.shape[0])
        buckets = [[] for _ in range(T)]
        dropped = []
        for u in range(1, T + 1):
            arrive = u + int(d[u - 1]) - 1
            if arrive > T:
                dropped.append(u)
            else:
                buckets[arrive - 1].append(u)
        d.setflags(write=False)
        return cls(T=T, d=d, buckets=tuple(tuple(b) for b in buckets), D=int(d.sum()), dropped=tuple(dropped))


def build_schedule(kind, T, rng=None, lo=1, hi=5, delays=None):
    """Delay schedule of kind ``"none"`` (all 1), ``"uniform"`` on ``{lo..hi}``, or ``"explicit"``."""
    T = check_int(T, "T", low=1)
    if kind == "none":
        return DelaySchedule.from_delays(np.ones(T, dtype=np.int64))
    if kind == "uniform":
        lo = check_int(lo, "lo", low=1)
        hi = check_int(hi, "hi", low=lo)
        return DelaySchedule.from_delays(as_stream(rng).integers(lo, hi, T))
    if kind == "explicit":
        if delays is None or len(delays) != T:
            raise ArgumentError(f"explicit delays must have length T={T}")
        return DelaySchedule.from_delays(delays)
    raise ArgumentError(f"unknown delay kind {kind!r}")


@dataclass(frozen=True)
class OnlineConfig:
    """``step`` is ``"theory"`` (``diam / (G_F sqrt(D))``) or ``"sqrtT"`` (``1 / sqrt(T)``)."""

    T: int = 100
    batch: int = 1
    grad_bound: float | None = None
    K: int = 1
    gamma: float | None = None
    step: str = "theory"
    eta_override: float | None = None
    bound_samples: int = 100

    def __post_init__(self):
        check_int(self.T, "T", low=1)
        check_int(self.batch, "batch", low=1)
        check_int(self.K, "K", low=1)
        check_int(self.bound_samples, "bound_samples", low=1)
        if self.grad_bound is not None:
            check_real(self.grad_bound, "grad_bound", low=0.0, low_open=True)
        if self.gamma is not None:
            check_gamma(self.gamma)
        if self.step not in ("theory", "sqrtT"):
            raise ArgumentError(f"step must be 'theory' or 'sqrtT', got {self.step!r}")
        if self.eta_override is not None:
            check_real(self.eta_override, "eta_override", low=0.0, low_open=True)


@dataclass
class OnlineTrace:
    solver: str
    actions: np.ndarray
    rewards: np.ndarray
    arrived: tuple
    eta: float
    seed: int | None
    grad_bound: float | None = None
    meta: dict = field(default_factory=dict)
    wallclock_ns: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def cum_rewards(self):
        return np.cumsum(self.rewards)

    @property
    def T(self):
        return self.rewards.shape[0]


def _check_inputs(objs, fset, sched, cfg):
    objs = list(objs)
    if len(objs) != cfg.T or sched.T != cfg.T:
        raise ArgumentError(f"need {cfg.T} objectives and a schedule of horizon {cfg.T}")
    if objs[0].meta.n != fset.n:
        raise ArgumentError("objective and feasible set dimensions differ")
    return objs


def _project(fset, y, t):
    try:
        return fset.project(y)
    except ConvergenceError as err:
        err.index = t
        raise


def _safeguard(fset, x, t):
    return x if fset.contains(x, 1e-9) else _project(fset, x, t)


def estimate_grad_bound(obj, fset, batch, samples, rng):
    """1.2 times the largest norm of ``samples`` noisy gradients at random feasible points."""
    rng = as_stream(rng)
    best = 0.0
    for _ in range(samples):
        x = fset.sample(rng)
        best = max(best, float(np.linalg.norm(noisy_grad(obj, x, batch, rng))))
    return 1.2 * best


def _delayed_ascent(solver, objs, fset, sched, cfg, rng, feedback, eta, extra):
    T = cfg.T
    x = fset.project(np.zeros(fset.n))
    actions = np.empty((T, fset.n))
    rewards = np.empty(T)
    pending = {}
    clock = np.zeros(T, dtype=np.int64)
    for t in range(1, T + 1):
        t0 = time.perf_counter_ns()
        actions[t - 1] = x
        rewards[t - 1] = objs[t - 1].value(x)
        pending[t] = feedback(objs[t - 1], x)
        step = np.zeros(fset.n)
        for s in sched.buckets[t - 1]:
            step += pending.pop(s)
        if sched.buckets[t - 1]:
            x = _project(fset, x + eta * step, t)
        clock[t - 1] = time.perf_counter_ns() - t0
    return OnlineTrace(solver, actions, rewards, sched.buckets, float(eta), rng.seed, meta=extra, wallclock_ns=clock)


def run_obga(objs, fset, sched, cfg, rng):
    """Boosted delayed online gradient ascent.

    Feedback for round ``t`` is ``scale * noisy_grad(f_t, z_t x_t)``; all
    feedback arriving in a round is applied in one projected step.  The
    default step ``diam / (G_F sqrt(D))`` uses ``G_F = scale * G``, where
    ``G`` comes from the config or is estimated before round 1 from ``f_1``
    on a child stream, leaving the main stream untouched.
    """
    objs = _check_inputs(objs, fset, sched, cfg)
    rng = as_stream(rng)
    gamma = objs[0].meta.gamma if cfg.gamma is None else cfg.gamma
    bcfg = BoostConfig(gamma=gamma, batch=cfg.batch)
    G = cfg.grad_bound
    if G is None:
        G = estimate_grad_bound(objs[0], fset, cfg.batch, cfg.bound_samples, rng.child(1))
    G_F = boost_scale(gamma) * G
    if cfg.eta_override is not None:
        eta = cfg.eta_override
    elif cfg.step == "sqrtT":
        eta = 1.0 / math.sqrt(cfg.T)
    else:
        eta = fset.diam_bound / (G_F * math.sqrt(sched.D))
    trace = _delayed_ascent(
        "OBGA", objs, fset, sched, cfg, rng,
        lambda f, x: boost_grad(f, x, bcfg, rng), eta, {"G": G, "G_F": G_F, "D": sched.D},
    )
    trace.grad_bound = G
    return trace


def run_oga(objs, fset, sched, cfg, rng):
    """Delayed online gradient ascent on the raw noisy gradients, step ``1 / sqrt(T)``."""
    objs = _check_inputs(objs, fset, sched, cfg)
    rng = as_stream(rng)
    eta = cfg.eta_override if cfg.eta_override is not None else 1.0 / math.sqrt(cfg.T)
    return _delayed_ascent(
        "OGA", objs, fset, sched, cfg, rng,
        lambda f, x: noisy_grad(f, x, cfg.batch, rng), eta, {"D": sched.D},
    )


def run_meta_fw(objs, fset, sched, cfg, rng, variance_reduced=False):
    """Meta-Frank-Wolfe with ``K`` online gradient-ascent oracles (step ``1 / sqrt(T)``).

    Round ``t`` builds ``x^(k) = x^(k-1) + v^(k) / K`` from ``x^(0) = P(0)``,
    where ``v^(k)`` is oracle ``k``'s current action, and plays ``x^(K)``
    (projected back if round-off or a non-down-closed set pushes it out).
    Oracle ``k`` is rewarded linearly by the gradient at ``x^(k-1)``, the
    point its action extends; the raw noisy gradient, or in the
    variance-reduced variant a running average across ``k`` with weight
    ``1 / (k + 3)^{2/3}``.  Under delays the gradients are stored and every
    oracle is updated when the feedback arrives, rounds in index order and
    oracles ``k = 1..K`` in sequence.
    """
    objs = _check_inputs(objs, fset, sched, cfg)
    rng = as_stream(rng)
    T, K, n = cfg.T, cfg.K, fset.n
    eta = cfg.eta_override if cfg.eta_override is not None else 1.0 / math.sqrt(T)
    base = fset.project(np.zeros(n))
    oracles = np.tile(base, (K, 1))
    actions = np.empty((T, n))
    rewards = np.empty(T)
    pending = {}
    clock = np.zeros(T, dtype=np.int64)
    for t in range(1, T + 1):
        t0 = time.perf_counter_ns()
        f = objs[t - 1]
        x = base.copy()
        grads = np.empty((K, n))
        d = np.zeros(n)
        for k in range(K):
            g = noisy_grad(f, x, cfg.batch, rng)
            if variance_reduced:
                rho = scg_rho(k + 1)
                d = (1.0 - rho) * d + rho * g
                g = d
            grads[k] = g
            x = x + oracles[k] / K
        x = _safeguard(fset, x, t)
        actions[t - 1] = x
        rewards[t - 1] = f.value(x)
        pending[t] = grads
        for s in sched.buckets[t - 1]:
            G = pending.pop(s)
            for k in range(K):
                oracles[k] = _project(fset, oracles[k] + eta * G[k], t)
        clock[t - 1] = time.perf_counter_ns() - t0
    name = "Meta-FW-VR" if variance_reduced else "Meta-FW"
    return OnlineTrace(name, actions, rewards, sched.buckets, float(eta), rng.seed, meta={"K": K}, wallclock_ns=clock)


def approx_hindsight_opt(objs, fset, iters=200, gamma=None, polish=200):
    """Approximate maximizer of ``sum_t f_t`` over the feasible set.

    Runs deterministic boosting Frank-Wolfe on the average objective, with
    ``grad F`` by quadrature and step ``t^{-1/2}``.  At iterations 1, 2, 4,
    8, ... the best Frank-Wolfe point so far is polished by up to ``polish``
    steps of projected gradient ascent on the average ``f``.  The best point
    seen by exact ``sum_t f_t`` is returned with its value.  Nothing depends
    on ``iters`` except where the run stops, so the value never decreases as
    ``iters`` grows.
    """
    objs = list(objs)
    iters = check_int(iters, "iters", low=1)
    polish = check_int(polish, "polish", low=0)
    avg = mean_objective(objs)
    gamma = avg.meta.gamma if gamma is None else check_gamma(gamma)

    def total(x):
        return float(sum(f.value(x) for f in objs))

    step = 1.0 / max(avg.meta.L, 1e-12)

    def polished(x, best):
        bx, bv = best
        for _ in range(polish):
            y = fset.project(x + step * avg.grad(x))
            if np.linalg.norm(y - x) <= 1e-12:
                break
            x = y
            val = total(x)
            if val > bv:
                bx, bv = x.copy(), val
        return bx, bv

    x = fset.project(np.zeros(fset.n))
    fw_x, fw_v = x.copy(), total(x)
    best = (fw_x, fw_v)
    v = np.zeros(fset.n)
    for t in range(1, iters + 1):
        rho = bfw_rho(t, 1.0)
        v = (1.0 - rho) * v + rho * grad_F_ref(avg, x, gamma)
        eta = t ** -0.5
        x = (1.0 - eta) * x + eta * fset.lmo(v)
        val = total(x)
        if val > fw_v:
            fw_x, fw_v = x.copy(), val
        if fw_v > best[1]:
            best = (fw_x, fw_v)
        if t & (t - 1) == 0:
            best = polished(fw_x.copy(), best)
    return best[0].copy(), best[1]


def eval_alpha_regret(trace, objs, alpha, x_star):
    """Cumulative alpha-regret ``alpha sum f_t(x*) - sum f_t(x_t)`` after each round."""
    alpha = check_real(alpha, "alpha", low=0.0, high=1.0, low_open=True)
    objs = list(objs)
    x_star = check_vector(x_star, objs[0].meta.n, "x_star")
    best = np.array([f.value(x_star) for f in objs[: trace.T]])
    got = np.array([f.value(x) for f, x in zip(objs, trace.actions)])
    return np.cumsum(alpha * best - got)
