"""Convex feasible sets with Euclidean projection and linear maximization oracles.

Three kinds are supported: the box ``[0, u]``, the cardinality polytope
``{x in [0, 1]^n : sum x = k}`` and the packing polytope
``{x : A x <= b, 0 <= x <= u}`` with ``b >= 0``.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._qp import project_halfspaces
from .exceptions import ArgumentError, ConvergenceError, InfeasibleError
from .numerics import as_stream
from .simplex import linprog_max
from .validation import check_int, check_matrix, check_real, check_vector

__all__ = [
    "FeasibleSet",
    "Box",
    "Cardinality",
    "Polytope",
    "project_cardinality",
    "lmo_cardinality",
    "project_polytope",
    "lmo_polytope",
    "set_geometry",
]


def project_cardinality(y, k, tol=1e-12):
    """Project ``y`` onto ``{x in [0, 1]^n : sum x = k}``.

    The solution is ``clip(y - mu, 0, 1)`` for the scalar ``mu`` solving
    ``sum clip(y - mu, 0, 1) = k``.  ``mu`` is bracketed and bisected; once
    the free coordinates are identified it is recomputed in closed form,
    which makes the map idempotent to rounding error.
    """
    y = check_vector(y, name="y")
    n = y.shape[0]
    k = check_real(k, "k")
    if k < 0 or k > n:
        raise InfeasibleError(f"cardinality k={k} outside [0, {n}]")
    if k == 0:
        return np.zeros(n)
    if k == n:
        return np.ones(n)

    def total(mu):
        return np.clip(y - mu, 0.0, 1.0).sum()

    lo, hi = float(y.min()) - 1.0, float(y.max())  # total(lo) = n, total(hi) = 0
    mu = 0.5 * (lo + hi)
    for _ in range(200):
        mu = 0.5 * (lo + hi)
        s = total(mu)
        if abs(s - k) <= tol:
            break
        if s > k:
            lo = mu
        else:
            hi = mu
        if hi - lo <= 1e-15 * max(1.0, abs(mu)):
            break

    x = np.clip(y - mu, 0.0, 1.0)
    free = (x > 0.0) & (x < 1.0)
    if np.any(free):
        exact = (y[free].sum() + np.count_nonzero(x >= 1.0) - k) / np.count_nonzero(free)
        x2 = np.clip(y - exact, 0.0, 1.0)
        if np.array_equal((x2 > 0.0) & (x2 < 1.0), free) and abs(x2.sum() - k) <= abs(x.sum() - k):
            x = x2
    return x


def lmo_cardinality(v, k):
    """``argmax <v, s>`` over the cardinality polytope; ties go to the lowest index."""
    v = check_vector(v, name="v")
    n = v.shape[0]
    k = check_real(k, "k")
    if k < 0 or k > n:
        raise InfeasibleError(f"cardinality k={k} outside [0, {n}]")
    order = np.argsort(-v, kind="stable")
    s = np.zeros(n)
    whole = int(math.floor(k))
    s[order[:whole]] = 1.0
    if whole < n and k > whole:
        s[order[whole]] = k - whole
    return s


def project_polytope(y, A, b, u, tol=1e-8, max_sweeps=10_000, method="active-set"):
    """Project ``y`` onto ``{A x <= b} cap [0, u]``.

    ``method="active-set"`` (default) solves the projection QP exactly with a
    dual active-set method and falls back to Dykstra if that fails.
    ``method="dykstra"`` runs Dykstra's algorithm: one sweep visits each
    halfspace and then the box, keeping a correction vector per set so the
    limit is the projection and not just some feasible point.  Sweeps run in
    growing chunks; after each chunk the active set read off the iterate is
    solved exactly and returned once the KKT conditions certify it.  Dykstra
    also stops when a sweep changes the corrections by at most ``tol``, and
    raises ``ConvergenceError`` (carrying the best iterate) after
    ``max_sweeps`` sweeps.

    Because ``b >= 0`` the origin is feasible, so residual round-off
    violations are removed by shrinking the point toward 0, which leaves the
    box constraints intact.
    """
    y = check_vector(y, name="y")
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if method not in ("active-set", "dykstra"):
        raise ArgumentError(f"unknown projection method {method!r}")
    n = A.shape[1]

    x = np.clip(y, 0.0, u)
    if np.all(A @ x <= b):
        # already inside after clipping: the box projection is the answer
        return x
    if method == "active-set":
        C = np.vstack([-A, -np.eye(n), np.eye(n)])
        d = np.concatenate([-b, -u, np.zeros(n)])
        try:
            return _shrink_feasible(np.clip(project_halfspaces(y, C, d), 0.0, u), A, b)
        except (InfeasibleError, RuntimeError, np.linalg.LinAlgError):
            pass
    return _project_dykstra(y, A, b, u, tol, max_sweeps)


def _project_dykstra(y, A, b, u, tol, max_sweeps):
    m, n = A.shape
    row_sq = np.einsum("ij,ij->i", A, A)
    x = y.copy()
    corr = np.zeros((m + 1, n))
    done, chunk, change = 0, 8, np.inf
    while done < max_sweeps:
        sweeps = min(chunk, max_sweeps - done)
        change, converged = _dykstra_sweeps(x, corr, A, b, u, row_sq, tol, sweeps)
        done += sweeps
        polished = _kkt_polish(y, x, corr, A, b, u)
        if polished is not None:
            return polished
        if converged:
            return _shrink_feasible(np.clip(x, 0.0, u), A, b)
        chunk *= 2
    raise ConvergenceError(
        f"projection did not reach tol={tol} after {done} Dykstra sweeps",
        best=_shrink_feasible(np.clip(x, 0.0, u), A, b), residual=change,
    )


@njit(cache=True)
def _dykstra_sweeps(x, corr, A, b, u, row_sq, tol, sweeps):
    # Updates x and corr in place.  Converged when a sweep changes the
    # correction vectors by at most tol in total.
    m, n = A.shape
    z = np.empty(n)
    change = np.inf
    for _ in range(sweeps):
        change = 0.0
        for i in range(m):
            viol = -b[i]
            for j in range(n):
                z[j] = x[j] + corr[i, j]
                viol += A[i, j] * z[j]
            step = viol / row_sq[i] if (viol > 0.0 and row_sq[i] > 0.0) else 0.0
            for j in range(n):
                x[j] = z[j] - step * A[i, j]
                c = z[j] - x[j]
                change += (c - corr[i, j]) ** 2
                corr[i, j] = c
        for j in range(n):
            z[j] = x[j] + corr[m, j]
            x[j] = min(u[j], max(0.0, z[j]))
            c = z[j] - x[j]
            change += (c - corr[m, j]) ** 2
            corr[m, j] = c
        change = np.sqrt(change)
        if change <= tol:
            return change, True
    return change, False


def _solve_active(y, A, b, u, rows, lower, upper):
    fixed = lower | upper
    free = ~fixed
    out = np.where(upper, u, np.where(lower, 0.0, y))
    lam = np.zeros(rows.size)
    if rows.size and np.any(free):
        AF = A[rows][:, free]
        rhs = b[rows] - A[rows][:, fixed] @ out[fixed]
        lam, *_ = np.linalg.lstsq(AF @ AF.T, AF @ y[free] - rhs, rcond=None)
        out[free] = y[free] - AF.T @ lam
    return out, lam


def _kkt_polish(y, x, corr, A, b, u, eps=1e-10, max_rounds=4):
    """Exact projection found by active-set correction from Dykstra's iterate.

    Starts from the active set read off ``x`` and the corrections, then for a
    bounded number of rounds drops constraints with wrong-sign multipliers and
    adds violated ones.  Returns None unless the KKT conditions certify the
    result, in which case the caller keeps sweeping.
    """
    tol = eps * (1.0 + float(np.abs(y).max()))
    lower = x <= 0.0
    upper = x >= u
    rows_mask = (np.abs(corr[:-1]).max(axis=1) > 0.0) | (A @ x >= b - tol)
    for _ in range(max_rounds):
        rows = np.flatnonzero(rows_mask)
        out, lam = _solve_active(y, A, b, u, rows, lower, upper)
        grad = out - y
        if rows.size:
            grad = grad + A[rows].T @ lam
        changed = False
        neg = lam < -tol
        if np.any(neg):
            rows_mask[rows[neg]] = False
            changed = True
        # box multipliers: lower needs grad >= 0, upper needs grad <= 0
        bad_low = lower & (grad < -tol)
        bad_up = upper & (grad > tol)
        if np.any(bad_low | bad_up):
            lower &= ~bad_low
            upper &= ~bad_up
            changed = True
        if changed:
            continue
        below, above = out < -tol, out > u + tol
        Ax = A @ out
        viol_rows = (Ax > b + tol) & ~rows_mask
        if np.any(below | above) or np.any(viol_rows):
            lower |= below
            upper |= above
            rows_mask |= viol_rows
            continue
        # full certificate: feasibility of every row (active rows included,
        # since a rank-deficient solve may miss them), stationarity on free
        # coordinates and complementary slackness of the row multipliers
        free = ~(lower | upper)
        if np.any(Ax > b + tol) or np.any(np.abs(grad[free]) > tol):
            return None
        if rows.size and np.any(np.abs(lam * (Ax[rows] - b[rows])) > tol):
            return None
        return _shrink_feasible(np.clip(out, 0.0, u), A, b)
    return None


def _shrink_feasible(x, A, b):
    Ax = A @ x
    over = Ax > b
    if np.any(over):
        x = x * float(np.min(b[over] / Ax[over]))
    return x


def lmo_polytope(v, A, b, u):
    """``argmax <v, s>`` over ``{A s <= b, 0 <= s <= u}`` by two-phase simplex."""
    v = check_vector(v, name="v")
    n = v.shape[0]
    A_ub = np.vstack([A, np.eye(n)])
    b_ub = np.concatenate([b, u])
    s = linprog_max(v, A_ub, b_ub)
    # clean pivoting round-off so the vertex is feasible
    s = np.clip(s, 0.0, u)
    return _shrink_feasible(s, A, b)


class FeasibleSet:
    """Common interface: ``project``, ``lmo``, ``contains``, ``sample`` and bounds."""

    kind = "abstract"
    n: int

    def project(self, y):
        raise NotImplementedError

    def lmo(self, v):
        raise NotImplementedError

    def violation(self, x):
        raise NotImplementedError

    def contains(self, x, tol=1e-8):
        return self.violation(x) <= tol

    def sample(self, rng):
        raise NotImplementedError

    @property
    def diam_bound(self):
        return set_geometry(self)[0]

    @property
    def radius_bound(self):
        return set_geometry(self)[1]

    @property
    def down_closed(self):
        return True

    def start_point(self):
        """Projection of the origin, the default solver start."""
        return self.project(np.zeros(self.n))


class Box(FeasibleSet):
    kind = "box"

    def __init__(self, u):
        self.u = check_vector(u, name="u")
        if np.any(self.u <= 0):
            raise ArgumentError("box upper bounds must be positive")
        self.n = self.u.shape[0]

    def project(self, y):
        return np.clip(check_vector(y, self.n, "y"), 0.0, self.u)

    def lmo(self, v):
        v = check_vector(v, self.n, "v")
        return np.where(v > 0, self.u, 0.0)

    def violation(self, x):
        x = check_vector(x, self.n)
        return float(max(0.0, np.max(-x), np.max(x - self.u)))

    def sample(self, rng):
        return as_stream(rng).uniform01(self.n) * self.u

    def __repr__(self):
        return f"Box(n={self.n})"


class Cardinality(FeasibleSet):
    kind = "cardinality"

    def __init__(self, n, k, tol=1e-12):
        self.n = check_int(n, "n", low=1)
        self.k = check_real(k, "k")
        if not 0 <= self.k <= self.n:
            raise InfeasibleError(f"cardinality k={k} outside [0, {n}]")
        self.tol = tol

    def project(self, y):
        return project_cardinality(check_vector(y, self.n, "y"), self.k, self.tol)

    def lmo(self, v):
        return lmo_cardinality(check_vector(v, self.n, "v"), self.k)

    def violation(self, x):
        x = check_vector(x, self.n)
        return float(max(0.0, np.max(-x), np.max(x - 1.0), abs(x.sum() - self.k)))

    def sample(self, rng):
        return self.project(as_stream(rng).uniform(-0.5, 1.5, self.n))

    @property
    def down_closed(self):
        return self.k == 0

    def __repr__(self):
        return f"Cardinality(n={self.n}, k={self.k})"


class Polytope(FeasibleSet):
    kind = "polytope"

    def __init__(self, A, b, u=None, tol=1e-8, max_sweeps=10_000, method="active-set"):
        self.A = check_matrix(A, name="A")
        self.n = self.A.shape[1]
        self.b = check_vector(b, self.A.shape[0], "b")
        if np.any(self.b < 0):
            raise InfeasibleError("packing polytope needs b >= 0")
        self.u = np.ones(self.n) if u is None else check_vector(u, self.n, "u")
        if np.any(self.u <= 0):
            raise ArgumentError("box upper bounds must be positive")
        self.tol = tol
        self.max_sweeps = max_sweeps
        self.method = method

    @classmethod
    def from_problem(cls, problem, **kwargs):
        return cls(problem.A, problem.b, problem.u, **kwargs)

    def project(self, y):
        return project_polytope(
            check_vector(y, self.n, "y"), self.A, self.b, self.u, self.tol, self.max_sweeps, self.method
        )

    def lmo(self, v):
        return lmo_polytope(check_vector(v, self.n, "v"), self.A, self.b, self.u)

    def violation(self, x):
        x = check_vector(x, self.n)
        return float(max(0.0, np.max(-x), np.max(x - self.u), np.max(self.A @ x - self.b)))

    def sample(self, rng):
        rng = as_stream(rng)
        x = rng.uniform01(self.n) * self.u
        x = _shrink_feasible(x, self.A, self.b)
        return x * rng.uniform01()

    def __repr__(self):
        return f"Polytope(n={self.n}, m={self.A.shape[0]})"


def set_geometry(fset):
    """Return ``(diam_bound, radius_bound)``; upper bounds where exact values are awkward."""
    if isinstance(fset, Box):
        r = float(np.linalg.norm(fset.u))
        return r, r
    if isinstance(fset, Cardinality):
        n, k = fset.n, fset.k
        whole = math.floor(k)
        radius = math.sqrt(whole + (k - whole) ** 2)
        if k == whole:
            diam = math.sqrt(2 * min(whole, n - whole))
        else:
            diam = math.sqrt(n)
        return diam, radius
    if isinstance(fset, Polytope):
        r = float(np.linalg.norm(fset.u))
        return r, r
    raise ArgumentError(f"unknown feasible set {fset!r}")
