"""Goldfarb-Idnani dual active-set method for Euclidean projection.

Solves ``min 0.5 ||x - y||^2  s.t.  C x >= d`` exactly (up to rounding) in a
finite number of steps.  Starts from the unconstrained minimizer ``y`` and
repeatedly adds the most violated constraint, dropping active constraints
whose multipliers would turn negative.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .exceptions import InfeasibleError

# status codes returned by the compiled kernel
_OK, _EMPTY, _BUDGET = 0, 1, 2


@njit(cache=True)
def _gi_kernel(y, C, d, tol, max_iter):
    p, n = C.shape
    x = y.copy()
    active = np.empty(n + 1, dtype=np.int64)
    mult = np.empty(n + 1)
    na = 0
    for _ in range(max_iter):
        slack = C @ x - d
        viol = int(np.argmin(slack))
        if slack[viol] >= -tol:
            return x, _OK
        c_p = C[viol].copy()
        u_p = 0.0
        added = False
        while not added:
            if na > 0:
                N = np.empty((n, na))
                for j in range(na):
                    N[:, j] = C[active[j]]
                # the active normals stay linearly independent, so the
                # normal equations are nonsingular
                r = np.linalg.solve(N.T @ N, N.T @ c_p)
                z = c_p - N @ r
            else:
                r = np.zeros(0)
                z = c_p.copy()
            # partial step limit: an active multiplier hits zero
            t1 = np.inf
            k = -1
            for j in range(na):
                if r[j] > 1e-14:
                    ratio = mult[j] / r[j]
                    if ratio < t1:
                        t1 = ratio
                        k = j
            zc = z @ c_p
            t2 = np.inf
            if zc > 1e-14 * (c_p @ c_p):
                t2 = -(c_p @ x - d[viol]) / zc
            t = min(t1, t2)
            if not np.isfinite(t):
                return x, _EMPTY
            if np.isfinite(t2):
                x = x + t * z
            for j in range(na):
                mult[j] -= t * r[j]
            u_p += t
            if t2 <= t1:
                if na == n + 1:
                    return x, _BUDGET
                active[na] = viol
                mult[na] = u_p
                na += 1
                added = True
            else:
                for j in range(k, na - 1):
                    active[j] = active[j + 1]
                    mult[j] = mult[j + 1]
                na -= 1
    return x, _BUDGET


def project_halfspaces(y, C, d, eps=1e-12, max_iter=None):
    y = np.ascontiguousarray(y, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    d = np.ascontiguousarray(d, dtype=np.float64)
    p, n = C.shape
    scale = 1.0 + float(np.abs(y).max(initial=0.0)) + float(np.abs(d).max(initial=0.0))
    max_iter = 10 * (p + n) if max_iter is None else max_iter
    x, status = _gi_kernel(y, C, d, eps * scale, max_iter)
    if status == _EMPTY:
        raise InfeasibleError("projection target set is empty")
    if status == _BUDGET:
        raise RuntimeError("active-set projection did not terminate")
    return x
