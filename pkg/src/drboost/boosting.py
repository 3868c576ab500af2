"""Non-oblivious surrogate ``F`` of a weakly DR-submodular ``f``.

``grad F(x) = int_0^1 e^{gamma (z - 1)} grad f(z x) dz``.  Stationary points of
``F`` are ``(1 - e^{-gamma})``-approximate maximizers of ``f``, so ascent on
``F`` avoids the poor local optima that plain gradient ascent gets stuck in.
This module provides the one-sample unbiased estimator of ``grad F``, the
quadrature references for ``F`` and ``grad F``, and the derived constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_stream, composite_gauss_legendre01
from .objectives import ObjectiveMeta
from .validation import check_gamma, check_int, check_real, check_vector

__all__ = [
    "BoostConfig",
    "BoostConstants",
    "boost_scale",
    "sample_z",
    "boost_grad",
    "boost_grad_draws",
    "grad_F_ref",
    "value_F_ref",
    "boost_constants",
]

_SMALL_GAMMA = 1e-4


@dataclass(frozen=True)
class BoostConfig:
    gamma: float = 1.0
    batch: int = 1
    c: float = 1.0
    quad_panels: int = 8
    quad_order: int = 8

    def __post_init__(self):
        check_gamma(self.gamma)
        check_int(self.batch, "batch", low=1)
        check_real(self.c, "c", low=0.0, low_open=True)
        check_int(self.quad_panels, "quad_panels", low=1)
        check_int(self.quad_order, "quad_order", low=1, high=64)


@dataclass(frozen=True)
class BoostConstants:
    """Smoothness ``L_gamma``, estimator variance bound, ``tau`` and the estimator scale."""

    L_gamma: float
    sigma_gamma_sq: float
    tau: float
    scale: float

    @property
    def sigma_gamma(self):
        return math.sqrt(self.sigma_gamma_sq)


def boost_scale(gamma):
    """``(1 - e^{-gamma}) / gamma``, the integral of the weight over ``[0, 1]``."""
    gamma = check_gamma(gamma)
    return -math.expm1(-gamma) / gamma


def _z_from_uniform(gamma, p):
    # Inverse CDF of the density gamma e^{gamma(z-1)} / (1 - e^{-gamma}):
    # z = 1 + log(p (1 - e^{-gamma}) + e^{-gamma}) / gamma, rewritten so that
    # the log argument is formed as 1 + expm1(-gamma) (1 - p).
    if gamma < 1e-8:
        return p
    z = 1.0 + math.log1p(math.expm1(-gamma) * (1.0 - p)) / gamma
    return min(1.0, max(0.0, z))


def sample_z(gamma, rng):
    """One draw of ``Z`` on ``[0, 1]`` by exact inverse-CDF sampling (one uniform)."""
    gamma = check_gamma(gamma)
    rng = as_stream(rng)
    return _z_from_uniform(gamma, float(rng.uniform01()))


def boost_grad_draws(obj, x, gamma, num, rng):
    """``num`` independent single-sample estimates of ``grad F(x)``, one per row.

    Row ``i`` is ``scale * (grad f(z_i x) + delta * g_i)``.  Each row draws its
    ``z_i`` first and then its gradient noise from the same stream.
    """
    x = obj._point(x)
    gamma = check_gamma(gamma)
    num = check_int(num, "num", low=1)
    rng = as_stream(rng)
    uniform, gaussian, grad = rng.uniform01, rng.gaussian, obj._grad
    delta = obj.noise_delta
    n = x.shape[0]
    out = np.empty((num, n))
    # z * x stays in the domain box, so the raw gradient is called directly
    for i in range(num):
        z = _z_from_uniform(gamma, uniform())
        out[i] = grad(z * x)
        if delta != 0.0:
            out[i] += delta * gaussian(n)
    out *= -math.expm1(-gamma) / gamma
    return out


def boost_grad(obj, x, cfg, rng):
    """Unbiased stochastic estimate of ``grad F(x)``: the mean of ``cfg.batch`` draws.

    A batch of ``B`` replays exactly as ``B`` single-draw calls on the same stream.
    """
    return boost_grad_draws(obj, x, cfg.gamma, cfg.batch, rng).mean(axis=0)


def grad_F_ref(obj, x, gamma, panels=8, order=8):
    """``grad F(x)`` by composite Gauss-Legendre quadrature with exact gradients."""
    gamma = check_gamma(gamma)
    x = check_vector(x, obj.meta.n)
    z, w = composite_gauss_legendre01(panels, order)
    weights = w * np.exp(gamma * (z - 1.0))
    out = np.zeros_like(x)
    for zi, wi in zip(z, weights):
        out += wi * obj.grad(zi * x)
    return out


def value_F_ref(obj, x, gamma, panels=8, order=8):
    """``F(x) = int_0^1 e^{gamma (z - 1)} f(z x) / z dz`` by quadrature.

    The integrand's ``f(z x) / z`` has the removable value ``<x, grad f(0)>``
    at ``z = 0``.  The objective is measured relative to ``f(0)`` (the test
    problems have ``f(0) = 0``, where this changes nothing).
    """
    gamma = check_gamma(gamma)
    x = check_vector(x, obj.meta.n)
    z, w = composite_gauss_legendre01(panels, order)
    f0 = obj.value(np.zeros_like(x))
    total = 0.0
    for zi, wi in zip(z, w):
        if zi == 0.0:
            g = float(x @ obj.grad(np.zeros_like(x)))
        else:
            g = (obj.value(zi * x) - f0) / zi
        total += wi * math.exp(gamma * (zi - 1.0)) * g
    return total


def boost_constants(meta: ObjectiveMeta, c=1.0, radius=None):
    """Closed-form constants for an objective with smoothness ``L`` and noise ``sigma``.

    ``radius`` defaults to ``r(X) = ||a||`` of the domain box.
    """
    c = check_real(c, "c", low=0.0, low_open=True)
    gamma, L, sigma = meta.gamma, meta.L, meta.sigma
    r = meta.radius if radius is None else check_real(radius, "radius", low=0.0)
    r2 = r * r
    if gamma < _SMALL_GAMMA:
        lg_factor = 0.5 - gamma / 6.0
        s1 = 1.0 - gamma
        s2 = 2.0 / 3.0 - 2.0 * gamma / 3.0
    else:
        lg_factor = (gamma + math.expm1(-gamma)) / (gamma * gamma)
        s1 = (math.expm1(-gamma) / gamma) ** 2
        s2 = -math.expm1(-2.0 * gamma) / (3.0 * gamma)
    L_gamma = L * lg_factor
    sigma_sq = 2.0 * s1 * sigma * sigma + 2.0 * L * L * r2 * s2
    tau = max(1.0 / gamma, L * r2 / c)
    return BoostConstants(L_gamma=L_gamma, sigma_gamma_sq=sigma_sq, tau=tau, scale=boost_scale(gamma))
