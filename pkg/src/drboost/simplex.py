"""Dense two-phase simplex with Bland's rule, for small LPs.

Solves ``max c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``.  Meant for
the linear maximization oracle over packing polytopes of a few dozen
variables, where a dense tableau is cheap and Bland's rule guarantees
termination.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ArgumentError, InfeasibleError

_EPS = 1e-11


class UnboundedError(ArgumentError):
    pass


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    pivot_row = T[row]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, pivot_row)
    basis[row] = col


def _run(T, basis, ncols):
    """Maximize the objective stored in the last row (as reduced costs ``-c``).

    ``T[-1, j] < 0`` means column ``j`` improves the objective.  Only the
    first ``ncols`` columns may enter.
    """
    m = T.shape[0] - 1
    max_pivots = 50_000
    for _ in range(max_pivots):
        obj = T[-1, :ncols]
        candidates = np.flatnonzero(obj < -_EPS)
        if candidates.size == 0:
            return
        col = int(candidates[0])  # Bland: lowest index enters
        column = T[:m, col]
        pos = column > _EPS
        if not np.any(pos):
            raise UnboundedError("linear program is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + _EPS * max(1.0, abs(best)))
        # Bland: among ties, leave the basic variable with the lowest index
        row = int(ties[np.argmin(np.asarray(basis)[ties])])
        _pivot(T, basis, row, col)
    raise RuntimeError("simplex pivot budget exhausted")


def linprog_max(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None):
    """Return an optimal basic solution ``x`` of the LP (see module docstring)."""
    c = np.asarray(c, dtype=np.float64)
    n = c.shape[0]
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=np.float64)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=np.float64)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # columns: x (n) | slacks (m_ub) | artificials (as needed) | rhs
    rows = np.zeros((m, n + m_ub))
    rhs = np.concatenate([b_ub, b_eq])
    rows[:m_ub, :n] = A_ub
    rows[:m_ub, n : n + m_ub] = np.eye(m_ub)
    rows[m_ub:, :n] = A_eq
    neg = rhs < 0
    rows[neg] *= -1.0
    rhs = np.abs(rhs)

    needs_art = [i for i in range(m) if i >= m_ub or neg[i]]
    n_art = len(needs_art)
    ncols = n + m_ub + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[:m, : n + m_ub] = rows
    T[:m, -1] = rhs
    basis = [0] * m
    for i in range(m_ub):
        basis[i] = n + i
    for j, i in enumerate(needs_art):
        T[i, n + m_ub + j] = 1.0
        basis[i] = n + m_ub + j

    if n_art:
        # phase 1: maximize -(sum of artificials)
        T[-1, n + m_ub : ncols] = 1.0
        for i in needs_art:
            T[-1] -= T[i]
        _run(T, basis, ncols)
        if -T[-1, -1] > 1e-9 * max(1.0, np.abs(rhs).max(initial=0.0)):
            raise InfeasibleError("linear program is infeasible")
        # drive remaining artificials out of the basis
        for i in range(m):
            if basis[i] >= n + m_ub:
                nz = np.flatnonzero(np.abs(T[i, : n + m_ub]) > 1e-9)
                if nz.size:
                    _pivot(T, basis, i, int(nz[0]))
        keep = [i for i in range(m) if basis[i] < n + m_ub]
        body = np.hstack([T[keep, : n + m_ub], T[keep, -1:]])
        T = np.vstack([body, np.zeros((1, n + m_ub + 1))])
        basis = [basis[i] for i in keep]
        ncols = n + m_ub

    # phase 2
    T[-1, :] = 0.0
    T[-1, :n] = -c
    for i, bv in enumerate(basis):
        if T[-1, bv] != 0.0:
            T[-1] -= T[-1, bv] * T[i]
    _run(T, basis, ncols)

    x = np.zeros(ncols)
    for i, bv in enumerate(basis):
        x[bv] = T[i, -1]
    return x[:n]
