"""Simulated oracles that are right only some of the time."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigInvalid
from .exact import ComplexRational, PrimeFieldElement

MODES = ("always-correct", "iid-failure", "adversarial-subset", "additive-noise")
WRONG_RULES = ("offset", "zero", "negate")

# failures over Q(i) add (a + b i) / 2**_OFFSET_BITS with |a|, |b| < 2**_OFFSET_BITS
_OFFSET_BITS = 16


@dataclass(frozen=True)
class OraclePolicy:
    """How a simulated oracle misbehaves.

    ``failure_rate`` is the per-query failure probability for
    ``iid-failure`` and the corrupted fraction per call for
    ``adversarial-subset``.  ``noise_bits`` sets the additive-noise modulus
    ``2**-noise_bits``.
    """

    mode: str = "always-correct"
    failure_rate: float = 0.0
    wrong_rule: str = "offset"
    noise_bits: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigInvalid(f"unknown oracle mode {self.mode!r}")
        if not 0 <= self.failure_rate <= 1:
            raise ConfigInvalid("failure rate must lie in [0, 1]")
        if self.wrong_rule not in WRONG_RULES:
            raise ConfigInvalid(f"unknown wrong-value rule {self.wrong_rule!r}")
        if self.mode == "additive-noise" and (self.noise_bits is None or self.noise_bits < 1):
            raise ConfigInvalid("additive-noise needs noise_bits >= 1")

    @classmethod
    def iid(cls, p: float) -> "OraclePolicy":
        return cls("iid-failure", failure_rate=p)

    @classmethod
    def noisy(cls, bits: int) -> "OraclePolicy":
        return cls("additive-noise", noise_bits=bits)


def _nonzero_offset(value, rng: np.random.Generator):
    if isinstance(value, PrimeFieldElement):
        return PrimeFieldElement._raw(int(rng.integers(1, value.modulus)), value.modulus)
    bound = 1 << _OFFSET_BITS
    while True:
        a, b = (int(x) for x in rng.integers(-bound + 1, bound, size=2))
        if a or b:
            return ComplexRational.from_parts(a, b, bound)


def _wrong(value, rule: str, rng: np.random.Generator):
    if rule == "zero" and value:
        return value * 0
    if rule == "negate" and value:
        return -value
    return value + _nonzero_offset(value, rng)


def _noise(value, bits: int, rng: np.random.Generator):
    """Dyadic complex noise with modulus at most ``2**-bits``."""
    extra = 32
    # |re|, |im| <= 2**-(bits+1) keeps the modulus below 2**-bits
    lim = 1 << extra
    a, b = (int(x) for x in rng.integers(-lim, lim + 1, size=2))
    return value + ComplexRational.from_parts(a, b, 1 << (bits + 1 + extra))


class FaultyOracle:
    """Callable on a list of instances, returning one answer per instance.

    After each call ``last_correct`` holds one flag per answer telling
    whether it equals the engine's exact value.
    """

    def __init__(self, engine: Callable[[Sequence], list], policy: OraclePolicy, rng: np.random.Generator):
        self.engine = engine
        self.policy = policy
        self.rng = rng
        self.last_correct: list[bool] = []
        self.queries = 0
        self.failures = 0

    def __call__(self, instances: Sequence) -> list:
        truth = list(self.engine(list(instances)))
        n = len(truth)
        pol, rng = self.policy, self.rng
        if pol.mode == "always-correct":
            out = truth
        elif pol.mode == "additive-noise":
            out = [_noise(v, pol.noise_bits, rng) for v in truth]
        else:
            if pol.mode == "iid-failure":
                bad = rng.random(n) < pol.failure_rate
            else:
                bad = np.zeros(n, dtype=bool)
                bad[rng.choice(n, size=int(round(pol.failure_rate * n)), replace=False)] = True
            out = [_wrong(v, pol.wrong_rule, rng) if b else v for v, b in zip(truth, bad)]
        self.last_correct = [a == b for a, b in zip(out, truth)]
        self.queries += n
        self.failures += n - sum(self.last_correct)
        return out


def make_faulty_oracle(engine: Callable[[Sequence], list], policy: OraclePolicy,
                       rng: np.random.Generator) -> FaultyOracle:
    return FaultyOracle(engine, policy, rng)
