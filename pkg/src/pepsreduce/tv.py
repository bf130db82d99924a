"""Total-variation bounds between perturbed Gaussians, with numeric checks."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .errors import ConfigInvalid


def tv_bound_scale(M: int, eps_scale: float) -> float:
    """``2 M eps``: bound on TV between ``N(0, (1-eps)^2 sigma^2)^M`` and ``N(0, sigma^2)^M``."""
    if M < 1 or not 0 <= eps_scale < 1:
        raise ConfigInvalid("need M >= 1 and 0 <= eps < 1")
    return 2 * M * eps_scale


def tv_bound_shift(v: Sequence[float], sigma: float) -> float:
    """``||v||_1 / sigma``: bound on TV between ``N(v, sigma^2 I)`` and ``N(0, sigma^2 I)``."""
    if sigma <= 0:
        raise ConfigInvalid("sigma must be positive")
    return float(np.sum(np.abs(np.asarray(v, dtype=float)))) / sigma


def blend_tv_bound(D: int, d: int, N: int, eps) -> float:
    """``6 D^4 d N eps``: scale part ``4 D^4 d N eps`` plus shift part ``2 D^4 d N eps``."""
    M = D ** 4 * d * N
    return 4 * M * float(eps) + 2 * M * float(eps)


def _tv_quad(f, g, breakpoints, span: float) -> float:
    """``1/2 int |f - g|`` split at the density crossings."""
    pts = sorted([-span] + list(breakpoints) + [span])
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(lambda x: abs(f(x) - g(x)), a, b, limit=200, epsabs=1e-13, epsrel=1e-11)[0]
    return 0.5 * total


def tv_numeric_scale(eps_scale: float, sigma: float = 1.0) -> float:
    """TV between ``N(0, ((1-eps) sigma)^2)`` and ``N(0, sigma^2)`` by quadrature."""
    s1, s2 = (1 - eps_scale) * sigma, sigma
    if eps_scale == 0:
        return 0.0
    x = _crossing_scale(s1, s2)
    return _tv_quad(norm(0, s1).pdf, norm(0, s2).pdf, [-x, x], 40 * s2)


def _crossing_scale(s1: float, s2: float) -> float:
    return math.sqrt(2 * s1 * s1 * s2 * s2 * math.log(s2 / s1) / (s2 * s2 - s1 * s1))


def tv_closed_scale(eps_scale: float, sigma: float = 1.0) -> float:
    """The same TV from normal CDFs at the two density crossings."""
    if eps_scale == 0:
        return 0.0
    s1, s2 = (1 - eps_scale) * sigma, sigma
    x = _crossing_scale(s1, s2)
    return (2 * norm.cdf(x / s1) - 1) - (2 * norm.cdf(x / s2) - 1)


def tv_numeric_shift(v: float, sigma: float = 1.0) -> float:
    """TV between ``N(v, sigma^2)`` and ``N(0, sigma^2)`` by quadrature."""
    if v == 0:
        return 0.0
    return _tv_quad(norm(v, sigma).pdf, norm(0, sigma).pdf, [v / 2], 40 * sigma + abs(v))


def tv_closed_shift(v: float, sigma: float = 1.0) -> float:
    return 2 * norm.cdf(abs(v) / (2 * sigma)) - 1
