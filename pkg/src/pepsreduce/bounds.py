"""Extrapolation bounds for the noisy reduction, with outward rounding.

Everything is evaluated in ``mpmath.iv`` interval arithmetic and the upper
endpoint is returned, so a returned bound is never smaller than the true
value of the formula.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import iv
from mpmath.libmp import mpf_atan

from .errors import ConfigInvalid, NonPositiveEpsilon, PointOutsideRadius

_PREC = 160


class _precision:
    """Temporarily raise the interval context's working precision."""

    def __enter__(self):
        self.saved = iv.prec
        iv.prec = _PREC

    def __exit__(self, *exc):
        iv.prec = self.saved


def _iv(x):
    if isinstance(x, Fraction):
        return iv.mpf(x.numerator) / iv.mpf(x.denominator)
    if isinstance(x, mpmath.mpf):
        return iv.mpf(x)
    return iv.mpf(x)


def _upper(x) -> mpmath.mpf:
    """Upper endpoint, copied without rounding."""
    return mpmath.mp.make_mpf(x._mpi_[1])


def _lower(x) -> mpmath.mpf:
    return mpmath.mp.make_mpf(x._mpi_[0])


def _iv_atan(x):
    """Interval arctangent from directed-rounded endpoints, widened by a few ulps."""
    lo = mpmath.mp.make_mpf(mpf_atan(x._mpi_[0], _PREC + 10, "f"))
    hi = mpmath.mp.make_mpf(mpf_atan(x._mpi_[1], _PREC + 10, "c"))
    slack = mpmath.ldexp(1, -_PREC)
    return iv.mpf([lo, hi]) * (1 + iv.mpf([-slack, slack]))


def _outward(fn):
    def wrapper(*args, **kwargs):
        with _precision():
            return fn(*args, **kwargs)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    wrapper.__wrapped__ = fn
    return wrapper


@_outward
def paturi_bound(delta, r: int, eps) -> mpmath.mpf:
    """Upper bound ``delta * exp(2 r (1 + 1/eps))`` on ``|p(1)|`` when ``|p| <= delta`` on ``[-eps, eps]``."""
    if eps <= 0:
        raise NonPositiveEpsilon("eps must be positive")
    if delta < 0 or r < 0:
        raise ConfigInvalid("delta and r must be non-negative")
    e = _iv(eps)
    return _upper(_iv(delta) * iv.exp(2 * r * (1 + 1 / e)))


def rakhmanov_radius(k: int, r: int) -> mpmath.mpf:
    """``sqrt(1 - r**2 / k**2)``, rounded to nearest; the exact square is :func:`rakhmanov_radius_squared`."""
    return mpmath.sqrt(mpmath.mpf(k * k - r * r) / (k * k))


def rakhmanov_radius_squared(k: int, r: int) -> Fraction:
    return 1 - Fraction(r * r, k * k)


@_outward
def rakhmanov_bound(k: int, r: int, x, C=1) -> mpmath.mpf:
    """``C log(pi / arctan((k/r) sqrt(R**2 - x**2)))`` for ``|x| < R``.

    Bounds a degree-``r`` polynomial that is at most 1 in modulus on the
    ``k`` grid points ``-1 + (2j - 1)/k``.  ``C`` is a free constant.
    """
    if not k > r >= 1:
        raise ConfigInvalid("need k > r >= 1")
    gap = rakhmanov_radius_squared(k, r) - Fraction(x) ** 2
    if gap <= 0:
        raise PointOutsideRadius(f"|x| = {abs(float(x))} is not inside the radius {float(rakhmanov_radius(k, r))}")
    val = _iv(Fraction(C)) * iv.log(iv.pi / _iv_atan(iv.mpf(k) / r * iv.sqrt(_iv(gap))))
    return _upper(val)


def grid_points(k: int) -> list[Fraction]:
    """The ``k`` equidistant points ``-1 + (2j - 1)/k`` in ``(-1, 1)``."""
    return [Fraction(-k + 2 * j - 1, k) for j in range(1, k + 1)]


@dataclass(frozen=True)
class NoisyCertificate:
    """Pieces of the composed bound on ``|q~(1) - q(1)|``.

    The ``r + 1`` equidistant points of ``[0, eps]`` are mapped affinely onto
    the grid ``-1 + (2j - 1)/k`` with ``k = r + 1``:
    ``x = (t - eps/2) * 2r / ((r + 1) eps)``.  On ``|x| <= R/2`` the error
    polynomial is at most ``noise * rakhmanov_factor``; in ``t`` units that
    is the disc of radius ``rho`` around ``center = eps/2``.  Re-centring
    with ``u = (t - center)/(1 - center)`` keeps ``t = 1`` at ``u = 1`` and
    gives the Paturi radius ``eps_prime = rho / (1 - center)``.  Real and
    imaginary parts are bounded separately, hence the final ``sqrt(2)``.
    """

    noise: mpmath.mpf
    rakhmanov_factor: mpmath.mpf
    radius_x: mpmath.mpf
    rho: mpmath.mpf
    center: Fraction
    eps_prime: mpmath.mpf
    bound: mpmath.mpf

    def to_json(self) -> dict:
        return {
            "noise": mpmath.nstr(self.noise, 12),
            "rakhmanov_factor": mpmath.nstr(self.rakhmanov_factor, 12),
            "radius_x": mpmath.nstr(self.radius_x, 12),
            "rho": mpmath.nstr(self.rho, 12),
            "center": str(self.center),
            "eps_prime": mpmath.nstr(self.eps_prime, 12),
            "bound": mpmath.nstr(self.bound, 12),
        }


@_outward
def noisy_certificate(noise, r: int, eps, C=1) -> NoisyCertificate:
    """Composed Rakhmanov-then-Paturi bound for ``r + 1`` samples on ``[0, eps]``.

    ``noise`` bounds the modulus of each oracle error.
    """
    if eps <= 0:
        raise NonPositiveEpsilon("eps must be positive")
    if r < 1:
        raise ConfigInvalid("the noisy certificate needs r >= 1")
    eps = Fraction(eps)
    k = r + 1
    R2 = _iv(rakhmanov_radius_squared(k, r))
    R = iv.sqrt(R2)
    # worst point of |x| <= R/2 is the edge, where sqrt(R^2 - x^2) = (sqrt(3)/2) R
    inner = iv.mpf(k) / r * iv.sqrt(3) / 2 * R
    factor = _iv(Fraction(C)) * iv.log(iv.pi / _iv_atan(inner))
    delta = _iv(noise) * factor
    # rho is a lower bound on the disc radius: use the lower endpoint
    rho_iv = R / 2 * _iv(Fraction(r + 1, 2 * r) * eps)
    center = eps / 2
    rho_low = _lower(rho_iv)
    eps_prime_low = _lower(iv.mpf(rho_low) / _iv(1 - center))
    total = iv.sqrt(2) * delta * iv.exp(2 * r * (1 + 1 / iv.mpf(eps_prime_low)))
    return NoisyCertificate(
        noise=_upper(_iv(noise)),
        rakhmanov_factor=_upper(factor),
        radius_x=_lower(R / 2),
        rho=rho_low,
        center=center,
        eps_prime=eps_prime_low,
        bound=_upper(total),
    )


def mpf_to_fraction(x: mpmath.mpf) -> Fraction:
    """Exact value of a binary mpf."""
    man, exp = x.man_exp
    return Fraction(man) * Fraction(2) ** exp


def lebesgue_function(nodes, xs) -> np.ndarray:
    """``sum_j |l_j(x)|`` for the Lagrange basis on ``nodes`` (float64)."""
    nodes = np.asarray(nodes, dtype=float)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = np.zeros_like(xs)
    for j, xj in enumerate(nodes):
        others = np.delete(nodes, j)
        out += np.abs(np.prod((xs[:, None] - others[None, :]) / (xj - others[None, :]), axis=1))
    return out
