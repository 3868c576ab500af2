"""Objective oracles with exact and noisy gradients, plus the two test problems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ArgumentError, DomainError
from .numerics import as_stream, spectral_norm
from .validation import (
    check_gamma,
    check_int,
    check_matrix,
    check_real,
    check_symmetric,
    check_vector,
)

_BOX_SLACK = 1e-7


@dataclass(frozen=True)
class ObjectiveMeta:
    """Constants of an objective on the box ``X = prod [0, a_i]``."""

    n: int
    a: np.ndarray
    L: float
    gamma: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        a = check_vector(self.a, self.n, "a")
        if np.any(a <= 0):
            raise ArgumentError("domain upper bounds must be positive")
        object.__setattr__(self, "a", a)
        check_real(self.L, "L", low=0.0)
        check_gamma(self.gamma)
        check_real(self.sigma, "sigma", low=0.0)

    @property
    def radius(self):
        """r(X) = ||a||."""
        return float(np.linalg.norm(self.a))


class Objective:
    """Base class: exact value/gradient plus a Gaussian-noise gradient oracle.

    Subclasses implement ``_value`` and ``_grad``; the public methods validate
    the point first.  ``noise_delta`` is the per-coordinate standard deviation
    of the additive gradient noise.
    """

    meta: ObjectiveMeta
    noise_delta: float = 0.0
    check_domain: bool = False

    def _point(self, x):
        x = check_vector(x, self.meta.n)
        if self.check_domain and (np.any(x < -_BOX_SLACK) or np.any(x > self.meta.a + _BOX_SLACK)):
            raise DomainError("point lies outside the domain box")
        return x

    def value(self, x):
        return float(self._value(self._point(x)))

    def grad(self, x):
        return self._grad(self._point(x))

    def noisy_grad(self, x, rng, batch=1):
        return noisy_grad(self, x, batch, rng)

    def _value(self, x):
        raise NotImplementedError

    def _grad(self, x):
        raise NotImplementedError


def noisy_grad(obj, x, batch, rng):
    """Mean of ``batch`` draws of ``grad(x) + delta * g`` with ``g ~ N(0, I)``."""
    batch = check_int(batch, "batch", low=1)
    g = obj.grad(x)
    if obj.noise_delta == 0.0:
        return g
    rng = as_stream(rng)
    noise = rng.gaussian((batch, g.shape[0]))
    return g + obj.noise_delta * noise.mean(axis=0)


class FunctionObjective(Objective):
    """Objective from plain callables; used for fixtures and custom problems."""

    def __init__(self, value, grad, meta, noise_delta=0.0, check_domain=False):
        self._f = value
        self._g = grad
        self.meta = meta
        self.noise_delta = check_real(noise_delta, "noise_delta", low=0.0)
        self.check_domain = check_domain

    def _value(self, x):
        return self._f(x)

    def _grad(self, x):
        return np.asarray(self._g(x), dtype=np.float64)


def _special_case_hessian_bound(k):
    # Entrywise majorant of |Hessian| over [0,1]^n: 1 inside the first block,
    # 2 on the coupling with the last coordinate.  ||H|| <= || |H| || <= ||M||.
    n = 2 * k + 1
    M = np.zeros((n, n))
    M[:k, :k] = 1.0
    np.fill_diagonal(M, 0.0)
    M[:k, n - 1] = 2.0
    M[n - 1, :k] = 2.0
    return M


class SpecialCaseObjective(Objective):
    """Set-cover style function with a poor local maximum.

    ``f(x) = k + 1 - (1 - x_n) prod_{i<=k}(1 - x_i) - (1 - x_n)(k - sum_{i<=k} x_i)
    + sum_{k<i<=2k} x_i`` on ``[0, 1]^(2k+1)``, where ``x_n`` is the last coordinate.
    On ``{x : sum x = k}`` the point ``x_loc = (1,...,1, 0,...,0)`` is a local
    maximum with value ``k + 1``; the global maximum is ``2k + 1``.
    """

    check_domain = True

    def __init__(self, k, noise_delta=1.0):
        self.k = check_int(k, "k", low=1)
        self.noise_delta = check_real(noise_delta, "noise_delta", low=0.0)
        n = 2 * self.k + 1
        L = spectral_norm(_special_case_hessian_bound(self.k))
        self.meta = ObjectiveMeta(
            n=n, a=np.ones(n), L=L, gamma=1.0, sigma=self.noise_delta * np.sqrt(n)
        )

    @property
    def x_loc(self):
        x = np.zeros(self.meta.n)
        x[: self.k] = 1.0
        return x

    @property
    def x_opt(self):
        x = np.zeros(self.meta.n)
        x[self.k :] = 1.0
        return x

    def _value(self, x):
        k = self.k
        head, last = x[:k], x[-1]
        return (
            k + 1
            - (1.0 - last) * np.prod(1.0 - head)
            - (1.0 - last) * (k - head.sum())
            + x[k : 2 * k].sum()
        )

    def _grad(self, x):
        k = self.k
        head, last = x[:k], x[-1]
        one_minus = 1.0 - head
        g = np.empty_like(x)
        # prod over j != i from prefix and suffix products, so x_i = 1 is safe
        prefix = np.ones(k)
        suffix = np.ones(k)
        if k > 1:
            prefix[1:] = np.cumprod(one_minus[:-1])
            suffix[:-1] = np.cumprod(one_minus[:0:-1])[::-1]
        g[:k] = (1.0 - last) * (prefix * suffix + 1.0)
        g[k : 2 * k] = 1.0
        g[-1] = prefix[-1] * one_minus[-1] + (k - head.sum())
        return g


def special_case_eval(k, x):
    obj = SpecialCaseObjective(k, noise_delta=0.0)
    return obj.value(x), obj.grad(x)


class QuadraticObjective(Objective):
    """Monotone DR-submodular quadratic ``f(x) = 0.5 x'Hx + h'x`` with ``h = -H u``.

    ``H`` is symmetric with nonpositive entries, so the gradient ``H (x - u)``
    is nonnegative on ``[0, u]``.  The packing constraint data ``A``, ``b``
    travel with the problem so a feasible set can be built from it.
    """

    def __init__(self, H, A=None, b=None, u=None, noise_delta=5.0):
        H = check_symmetric(H, "H")
        if np.any(H > 0):
            raise ArgumentError("H must have nonpositive entries")
        n = H.shape[0]
        self.H = H
        self.u = np.ones(n) if u is None else check_vector(u, n, "u")
        self.A = None if A is None else check_matrix(A, (None, n), "A")
        if b is None and self.A is not None:
            b = np.ones(self.A.shape[0])
        self.b = None if b is None else check_vector(b, None if self.A is None else self.A.shape[0], "b")
        self.h = -H.T @ self.u
        self.noise_delta = check_real(noise_delta, "noise_delta", low=0.0)
        self.meta = ObjectiveMeta(
            n=n, a=self.u, L=spectral_norm(H), gamma=1.0, sigma=self.noise_delta * np.sqrt(n)
        )

    def _value(self, x):
        return 0.5 * x @ self.H @ x + self.h @ x

    def _grad(self, x):
        return self.H @ x + self.h


def qp_eval(problem, x):
    return problem.value(x), problem.grad(x)


def _symmetric_uniform(rng, n, low, high):
    H = np.zeros((n, n))
    rows, cols = np.tril_indices(n)
    H[rows, cols] = rng.uniform(low, high, rows.shape[0])
    return np.tril(H) + np.tril(H, -1).T


def qp_generate(n, m, seed, noise_delta=5.0):
    """Random instance: symmetric ``H ~ U[-1, 0]``, ``A ~ U[0, 1]``, ``b = u = 1``.

    The lower triangle (with diagonal) of ``H`` is drawn row-major and mirrored,
    then ``A`` is drawn row-major from the same stream.
    """
    n = check_int(n, "n", low=1)
    m = check_int(m, "m", low=1)
    rng = as_stream(seed)
    H = _symmetric_uniform(rng, n, -1.0, 0.0)
    A = rng.uniform(0.0, 1.0, (m, n))
    return QuadraticObjective(H, A, np.ones(m), np.ones(n), noise_delta=noise_delta)


def online_qp_sequence(T, n, m, seed, noise_delta=5.0):
    """``T`` quadratic objectives with independent ``H_t`` and one shared ``A``."""
    T = check_int(T, "T", low=1)
    rng = as_stream(seed)
    A = rng.uniform(0.0, 1.0, (check_int(m, "m", low=1), check_int(n, "n", low=1)))
    return [
        QuadraticObjective(_symmetric_uniform(rng, n, -1.0, 0.0), A, np.ones(m), np.ones(n), noise_delta)
        for _ in range(T)
    ]


class MeanObjective(Objective):
    """Average of a sequence of objectives over the same box (noise-free)."""

    def __init__(self, objs):
        objs = list(objs)
        if not objs:
            raise ArgumentError("need at least one objective")
        self.objs = objs
        first = objs[0].meta
        self.meta = ObjectiveMeta(
            n=first.n, a=first.a, L=max(o.meta.L for o in objs),
            gamma=min(o.meta.gamma for o in objs), sigma=0.0,
        )
        self.noise_delta = 0.0

    def _value(self, x):
        return sum(o.value(x) for o in self.objs) / len(self.objs)

    def _grad(self, x):
        return sum(o.grad(x) for o in self.objs) / len(self.objs)


def mean_objective(objs):
    """Average objective; quadratics collapse to a single quadratic."""
    objs = list(objs)
    if objs and all(isinstance(o, QuadraticObjective) for o in objs):
        H = sum(o.H for o in objs) / len(objs)
        H = 0.5 * (H + H.T)
        first = objs[0]
        return QuadraticObjective(H, first.A, first.b, first.u, noise_delta=0.0)
    return MeanObjective(objs)


@dataclass
class Violation:
    kind: str  # "dr" or "lemma"
    x: np.ndarray
    y: np.ndarray
    component: int | None
    slack: float


@dataclass
class StructureReport:
    trials: int
    violations: list = field(default_factory=list)
    gamma_estimate: float = 1.0

    @property
    def ok(self):
        return not self.violations


def verify_structure(obj, gamma, trials=1000, tol=1e-9, rng=0):
    """Sample random pairs in the domain box and check the weak-DR inequalities.

    Checks, for ``x <= y``, that ``grad f(x) >= gamma grad f(y) - tol``, and for
    arbitrary pairs that ``<y - x, grad f(x)> >= gamma f(x v y) + f(x ^ y)/gamma
    - (gamma + 1/gamma) f(x) - tol``.  Violations are returned, not raised.
    The report also carries the smallest observed ratio
    ``grad f(x)_i / grad f(y)_i`` over ordered pairs, a rough estimate of gamma
    that the solvers never use.
    """
    gamma = check_gamma(gamma)
    trials = check_int(trials, "trials", low=1)
    rng = as_stream(rng)
    a = obj.meta.a
    report = StructureReport(trials=trials)
    ratio = np.inf
    for _ in range(trials):
        p = rng.uniform01(a.shape[0]) * a
        q = rng.uniform01(a.shape[0]) * a
        lo, hi = np.minimum(p, q), np.maximum(p, q)
        g_lo, g_hi = obj.grad(lo), obj.grad(hi)
        slack = g_lo - gamma * g_hi + tol
        for i in np.flatnonzero(slack < 0):
            report.violations.append(Violation("dr", lo, hi, int(i), float(slack[i])))
        pos = g_hi > 1e-12
        if np.any(pos):
            ratio = min(ratio, float(np.min(g_lo[pos] / g_hi[pos])))

        fx = obj.value(p)
        lhs = (q - p) @ obj.grad(p)
        rhs = gamma * obj.value(hi) + obj.value(lo) / gamma - (gamma + 1.0 / gamma) * fx
        if lhs < rhs - tol:
            report.violations.append(Violation("lemma", p, q, None, float(lhs - rhs)))
    report.gamma_estimate = float(min(1.0, ratio)) if np.isfinite(ratio) else 1.0
    return report
