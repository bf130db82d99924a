"""Instance generators shared by the unit and acceptance tests."""
from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from pepsreduce.exact import QI, ComplexRational, PrimeField
from pepsreduce.interpolation import ExactPolynomial, SampleSet
from pepsreduce.peps import LatticeSpec, PepsData


def random_peps(w, h, d=2, D=2, seed=0, lo=-3, hi=3, den=1):
    rng = np.random.default_rng(seed)
    lat = LatticeSpec(w, h)
    shapes = [lat.tensor_shape(v, d, D) for v in range(lat.N)]
    re = [np.array([int(x) for x in rng.integers(lo, hi + 1, size=s).reshape(-1)], dtype=object).reshape(s)
          for s in shapes]
    im = [np.array([int(x) for x in rng.integers(lo, hi + 1, size=s).reshape(-1)], dtype=object).reshape(s)
          for s in shapes]
    return PepsData.from_scaled(lat, d, D, re, im, den)


def random_scalar(field, rng: random.Random):
    if field == QI:
        return ComplexRational(Fraction(rng.randint(-99, 99), rng.randint(1, 9)),
                               Fraction(rng.randint(-99, 99), rng.randint(1, 9)))
    return field(rng.randrange(field.modulus))


def nonzero_scalar(field, rng: random.Random):
    while True:
        x = random_scalar(field, rng)
        if x:
            return x


def abscissae(field, k: int, rng: random.Random):
    """``k`` distinct random abscissae; random rather than equidistant so that
    adversarial words have no accidental symmetric coincidences."""
    if field == QI:
        seen: set[Fraction] = set()
        while len(seen) < k:
            seen.add(Fraction(rng.randint(-10 ** 4, 10 ** 4), rng.randint(1, 97)))
        return [QI(t) for t in rng.sample(sorted(seen), k)]
    return [field(t) for t in rng.sample(range(field.modulus), k)]


def adversarial_feasible(k: int, r: int) -> bool:
    """Whether a word at distance ``floor((k-r)/2) + 1`` from two codewords exists."""
    e = (k - r) // 2 + 1
    return k >= r + 2 and 2 * e <= k


def bw_instance(field, k: int, r: int, e: int, rng: random.Random, adversarial: bool = False):
    """Samples of a random degree-``r`` polynomial with ``e`` corrupted values.

    With ``adversarial`` the corrupted values come from a second polynomial
    ``g`` that agrees with the truth on ``k - 2e`` further points, so both
    ``q`` and ``g`` sit at distance exactly ``e`` from the received word
    (needs ``2e <= k`` and ``k - 2e <= r``).
    Returns ``(samples, truth)``.
    """
    coeffs = [random_scalar(field, rng) for _ in range(r)] + [nonzero_scalar(field, rng)]
    truth = ExactPolynomial(coeffs, field)
    ts = abscissae(field, k, rng)
    ys = [truth(t) for t in ts]
    bad = rng.sample(range(k), e)
    if adversarial:
        rest = [i for i in range(k) if i not in set(bad)]
        shared = rng.sample(rest, k - 2 * e)
        bump = ExactPolynomial([nonzero_scalar(field, rng)], field)
        for i in shared:
            bump = bump * ExactPolynomial([-ts[i], field.one()], field)
        g = truth + bump
        for i in bad:
            ys[i] = g(ts[i])
    else:
        for i in bad:
            ys[i] = ys[i] + nonzero_scalar(field, rng)
    return SampleSet(zip(ts, ys)), truth


F_BW = PrimeField(2 ** 31 - 1)
