"""Low-level numerics: seeded random streams, spectral norm, quadrature, box clipping."""

from __future__ import annotations

import numpy as np

from .exceptions import ArgumentError
from .validation import check_int, check_real, check_symmetric, check_vector

__all__ = [
    "RngStream",
    "as_stream",
    "clip_box",
    "spectral_norm",
    "gauss_legendre01",
    "composite_gauss_legendre01",
]


class RngStream:
    """Single-owner seeded random stream.

    Backed by numpy's PCG64 bit generator (128-bit LCG state, XSL-RR output).
    Uniform doubles use the top 53 bits of each 64-bit output,
    ``(next_uint64 >> 11) * 2**-53``, so ``uniform01`` lies in ``[0, 1)``.
    Gaussians use numpy's ziggurat sampler on the same bit stream.  Equal
    seeds therefore give equal sequences on every platform numpy supports.
    """

    def __init__(self, seed=0):
        self.seed = check_int(seed, "seed", low=0, high=2**64 - 1)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform01(self, size=None):
        return self._gen.random(size)

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size)

    def gaussian(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, low, high, size=None):
        """Integers in the closed range ``[low, high]``."""
        return self._gen.integers(low, high, size=size, endpoint=True)

    def child(self, *key):
        """Independent stream derived deterministically from this seed and ``key``."""
        ss = np.random.SeedSequence([self.seed, *[int(k) for k in key]])
        out = RngStream.__new__(RngStream)
        out.seed = self.seed
        out._gen = np.random.Generator(np.random.PCG64(ss))
        return out

    def __repr__(self):
        return f"RngStream(seed={self.seed})"


def as_stream(rng):
    """Accept an ``RngStream``, an integer seed, or ``None`` (seed 0)."""
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    return RngStream(rng)


def _bound(value, n, name):
    if np.ndim(value) == 0:
        return np.full(n, float(value))
    return check_vector(value, n, name)


def clip_box(v, lo, hi):
    """Componentwise ``min(hi, max(lo, v))``; ``lo``/``hi`` may be scalars."""
    v = check_vector(v, name="v")
    lo = _bound(lo, v.shape[0], "lo")
    hi = _bound(hi, v.shape[0], "hi")
    if np.any(lo > hi):
        raise ArgumentError("clip_box requires lo <= hi componentwise")
    return np.minimum(hi, np.maximum(lo, v))


def _restart_vector(n, attempt):
    # Deterministic, non-degenerate start vectors for restarts.
    i = np.arange(1, n + 1, dtype=np.float64)
    v = np.cos(i * (attempt + 1) * 0.7390851332151607) + 1.0 / (i + attempt)
    return v / np.linalg.norm(v)


def spectral_norm(M, tol=1e-10, max_iter=10_000):
    """Largest absolute eigenvalue of a symmetric matrix by power iteration.

    The estimate is ``||M v||`` for the current unit iterate ``v``; it is a
    Rayleigh quotient of ``M @ M`` and so never exceeds the true value, and it
    also converges when the dominant eigenvalues are ``+l`` and ``-l``.  The
    start vector is the normalized all-ones vector.  If the iterate collapses
    (start orthogonal to the dominant eigenspace) the iteration restarts from
    a different deterministic vector.
    """
    M = check_symmetric(M)
    tol = check_real(tol, "tol", low=0.0, low_open=True)
    n = M.shape[0]
    fro = float(np.linalg.norm(M)) if n else 0.0
    if fro == 0.0:
        return 0.0

    v = np.ones(n) / np.sqrt(n)
    best = prev = 0.0
    attempt = 0
    for _ in range(max_iter):
        w = M @ v
        lam = float(np.linalg.norm(w))
        if lam <= 1e-14 * fro:
            attempt += 1
            v = _restart_vector(n, attempt)
            prev = 0.0
            continue
        best = max(best, lam)
        if abs(lam - prev) <= tol * lam:
            break
        prev = lam
        v = w / lam
    return best


def gauss_legendre01(m):
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]`` (weights sum to 1)."""
    m = check_int(m, "m", low=1, high=64)
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def composite_gauss_legendre01(panels=8, order=8):
    """Nodes/weights for ``panels`` equal subintervals of ``[0, 1]``, ``order`` nodes each."""
    panels = check_int(panels, "panels", low=1)
    nodes, weights = gauss_legendre01(order)
    left = np.arange(panels, dtype=np.float64) / panels
    z = (left[:, None] + nodes[None, :] / panels).ravel()
    w = np.tile(weights / panels, panels)
    return z, w
