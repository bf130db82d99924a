"""Worst-to-average-case reductions along the blend path ``R(t) = tP + (1-t)Q``.

The target ``P`` sits at ``t = 1`` and the random instance ``Q`` at ``t = 0``.
Queries are made at points in ``[0, eps]``, where ``R(t)`` is statistically
close to a fresh random instance, and the value at ``t = 1`` is recovered
from the degree-``2N`` structure of ``t -> <psi(t)|psi(t)>``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from .bounds import noisy_certificate
from .errors import (
    AllRepeatsFailedDecoding,
    ConfigInvalid,
    DecodingFailure,
    DegenerateSystem,
    MajorityTie,
    ShapeMismatch,
    ZeroDenominatorAtOne,
)
from .exact import QI, ComplexRational, scalar_to_json
from .interpolation import (
    ExactPolynomial,
    SampleSet,
    berlekamp_welch,
    reconstruct_rational,
    vandermonde_interpolate,
)
from .peps import LatticeSpec, LocalObservable, PepsData

VARIANTS = ("exact", "noisy", "uev", "nev")

Oracle = Callable[[Sequence], list]


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class DistributionSpec:
    """Entry distribution for random PEPS data.

    ``gaussian``: complex normal with ``E|z|^2 = sigma^2`` (independent real
    and imaginary parts of variance ``sigma^2 / 2``).  ``uniform``: real and
    imaginary parts uniform on ``[-sigma, sigma]``.  Samples are snapped to
    multiples of ``2**-bits``.
    """

    kind: str = "gaussian"
    sigma: Fraction = Fraction(1)
    bits: int = 53
    translation_invariant: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sigma", Fraction(self.sigma))
        if self.kind not in ("gaussian", "uniform"):
            raise ConfigInvalid(f"unknown distribution kind {self.kind!r}")
        if self.sigma <= 0:
            raise ConfigInvalid("sigma must be positive")
        if self.bits < 1:
            raise ConfigInvalid("bits must be positive")


def _draw_numerators(spec: DistributionSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` integers ``m`` so that the samples are ``m / 2**bits``."""
    sigma = float(spec.sigma)
    if spec.kind == "gaussian":
        # inverse-CDF transform of uniform dyadics in (0, 1)
        ubits = 52
        u = (rng.integers(0, 1 << ubits, size=count, dtype=np.int64) + 0.5) / float(1 << ubits)
        vals = ndtri(u) * (sigma / math.sqrt(2.0))
    else:
        vals = rng.uniform(-sigma, sigma, size=count)
    scaled = np.rint(np.ldexp(vals, spec.bits))  # rint rounds half to even
    return np.array([int(v) for v in scaled], dtype=object)


def sample_peps_data(template, spec: DistributionSpec, rng: np.random.Generator) -> PepsData:
    """Random PEPS data shaped like ``template`` (a PepsData or ``(lattice, d, D)``).

    With ``spec.translation_invariant`` one tensor is drawn per vertex degree
    and reused at every vertex of that degree.
    """
    if isinstance(template, PepsData):
        lattice, d, D = template.lattice, template.d, template.D
    else:
        lattice, d, D = template
    shapes = [lattice.tensor_shape(v, d, D) for v in range(lattice.N)]
    if spec.translation_invariant:
        first_of: dict[int, int] = {}
        for v in range(lattice.N):
            first_of.setdefault(lattice.degree(v), v)
        owners = sorted(first_of.values())
    else:
        owners = list(range(lattice.N))
    sizes = [math.prod(shapes[v]) for v in owners]
    total = sum(sizes)
    nums = _draw_numerators(spec, 2 * total, rng)
    re_by_owner, im_by_owner = {}, {}
    pos = 0
    for v, n in zip(owners, sizes):
        re_by_owner[v] = nums[pos:pos + n].reshape(shapes[v])
        im_by_owner[v] = nums[total + pos:total + pos + n].reshape(shapes[v])
        pos += n
    re, im = [], []
    for v in range(lattice.N):
        owner = v if not spec.translation_invariant else first_of[lattice.degree(v)]
        re.append(re_by_owner[owner])
        im.append(im_by_owner[owner])
    return PepsData.from_scaled(lattice, d, D, re, im, 1 << spec.bits, spec.translation_invariant)


# ---------------------------------------------------------------------------
# blend path


@dataclass(frozen=True)
class BlendPath:
    """Target ``P`` (at ``t = 1``) and random ``Q`` (at ``t = 0``)."""

    target: PepsData
    random: PepsData

    def __post_init__(self):
        if not self.target.same_shape(self.random):
            raise ShapeMismatch("target and random data differ in shape")

    @property
    def translation_invariant(self) -> bool:
        return self.target.translation_invariant and self.random.translation_invariant

    def with_random(self, Q: PepsData) -> "BlendPath":
        return BlendPath(self.target, Q)


def blend(path: BlendPath, t) -> PepsData:
    """``t P + (1 - t) Q`` vertex by vertex, exactly."""
    t = QI(t) if path.target.field == QI else path.target.field(t)
    return path.target.combine(t, path.random, 1 - t)


def epsilon_for(D: int, d: int, N: int) -> tuple[Fraction, Fraction]:
    """``(delta, eps)`` with ``delta = 1/(12N)`` and ``eps = delta / (6 D^4 d N)``."""
    if min(D, d, N) < 1:
        raise ConfigInvalid("D, d and N must be positive")
    delta = Fraction(1, 12 * N)
    return delta, delta / (6 * D ** 4 * d * N)


def choose_sample_points(variant: str, k: int, eps) -> list[Fraction]:
    """Query abscissae in ``[0, eps]``.

    ``noisy``: ``k`` equidistant points including both ends (``k = r + 1``).
    Others: ``t_i = i eps / k`` for ``i = 1..k``, so ``t = 0`` is never queried.
    """
    eps = Fraction(eps)
    if k < 1:
        raise ConfigInvalid("k must be positive")
    if eps <= 0:
        raise ConfigInvalid("eps must be positive")
    if variant == "noisy":
        if k == 1:
            return [Fraction(0)]
        return [eps * j / (k - 1) for j in range(k)]
    if variant not in VARIANTS:
        raise ConfigInvalid(f"unknown variant {variant!r}")
    return [eps * i / k for i in range(1, k + 1)]


# ---------------------------------------------------------------------------
# configuration and reports


@dataclass(frozen=True)
class ReductionConfig:
    """Knobs of a reduction run; ``None`` fields are filled by :meth:`resolve`.

    Defaults: ``k = 10 r`` for the exact and UEV variants, ``k = r + 1`` for
    the noisy variant, ``k = 2r + 1`` for NEV; ``eps`` from
    :func:`epsilon_for`; 25 repeats.
    """

    variant: str = "exact"
    k: int | None = None
    eps: Fraction | None = None
    repeats: int = 25
    delta: Fraction | None = None
    noise_bits: int | None = None
    rakhmanov_constant: Fraction = Fraction(1)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigInvalid(f"unknown variant {self.variant!r}")
        if self.repeats < 1:
            raise ConfigInvalid("repeats must be positive")
        if self.eps is not None:
            object.__setattr__(self, "eps", Fraction(self.eps))
            if self.eps <= 0:
                raise ConfigInvalid("eps must be positive")

    def resolve(self, N: int, D: int, d: int) -> "ReductionConfig":
        r = 2 * N
        delta, eps = epsilon_for(D, d, N)
        k = self.k
        if k is None:
            k = {"exact": 10 * r, "uev": 10 * r, "noisy": r + 1, "nev": 2 * r + 1}[self.variant]
        if self.variant in ("exact", "uev") and k <= r:
            raise ConfigInvalid(f"k = {k} must exceed r = {r}")
        if self.variant == "noisy" and k != r + 1:
            raise ConfigInvalid(f"the noisy variant queries exactly r + 1 = {r + 1} points")
        if self.variant == "nev" and k < 2 * r + 1:
            raise ConfigInvalid(f"NEV needs at least 2r + 1 = {2 * r + 1} points")
        return replace(self, k=k, eps=self.eps if self.eps is not None else eps,
                       delta=self.delta if self.delta is not None else delta)


@dataclass
class RepeatRecord:
    seed: int | None
    points: list
    answers: list
    correct: int | None
    recovered: object = None  # ExactPolynomial | RationalFunction
    value: object = None
    error: str | None = None


@dataclass
class ReductionReport:
    variant: str
    k: int
    eps: Fraction
    degree: int
    repeats: list[RepeatRecord] = field(default_factory=list)
    value: object = None
    success: bool = False
    tally: dict = field(default_factory=dict)
    bound: object = None
    diagnostics: dict = field(default_factory=dict)
    truth: object = None

    @property
    def correct_counts(self) -> list:
        return [rep.correct for rep in self.repeats]

    def to_json(self, include_answers: bool = False) -> dict:
        reps = []
        for rep in self.repeats:
            item = {
                "seed": rep.seed,
                "correct": rep.correct,
                "value": None if rep.value is None else scalar_to_json(rep.value),
                "error": rep.error,
                "recovered": None if rep.recovered is None else rep.recovered.to_json(),
            }
            if include_answers:
                item["points"] = [str(t) for t in rep.points]
                item["answers"] = [scalar_to_json(a) for a in rep.answers]
            reps.append(item)
        return {
            "variant": self.variant,
            "k": self.k,
            "eps": str(self.eps),
            "degree": self.degree,
            "success": self.success,
            "value": None if self.value is None else scalar_to_json(self.value),
            "truth": None if self.truth is None else scalar_to_json(self.truth),
            "bound": None if self.bound is None else str(self.bound),
            "diagnostics": self.diagnostics,
            "repeats": reps,
        }


def majority_vote(values: Sequence, report: ReductionReport | None = None):
    """Most frequent value among the successful repeats (``None`` entries skipped).

    Raises :class:`AllRepeatsFailedDecoding` with no successes and
    :class:`MajorityTie` when the top count is shared.
    """
    counts = Counter(v for v in values if v is not None)
    if report is not None:
        report.tally = {str(v): c for v, c in counts.items()}
    if not counts:
        raise AllRepeatsFailedDecoding("every repeat failed to decode", report)
    ranked = counts.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        raise MajorityTie(f"{ranked[0][1]}-way tie between candidate values", report)
    return ranked[0][0]


# ---------------------------------------------------------------------------
# reductions


def _count_correct(oracle) -> int | None:
    flags = getattr(oracle, "last_correct", None)
    return None if flags is None else int(sum(bool(f) for f in flags))


def _paths(path: BlendPath, repeats: int, dist: DistributionSpec | None, rng: np.random.Generator | None):
    """``(path, seed)`` per repeat: the given path first, then fresh ``Q`` draws when possible.

    Each fresh ``Q`` comes from its own generator seeded from ``rng``; the
    seed is recorded so a single repeat can be replayed.
    """
    yield path, None
    if dist is not None and path.target.translation_invariant and not dist.translation_invariant:
        dist = replace(dist, translation_invariant=True)
    for _ in range(repeats - 1):
        if dist is None or rng is None:
            yield path, None
        else:
            seed = int(rng.integers(0, 2 ** 63))
            yield path.with_random(sample_peps_data(path.target, dist, np.random.default_rng(seed))), seed


def _decode_repeats(variant, path, oracle, cfg, dist, rng, decode) -> ReductionReport:
    N = path.target.N
    cfg = cfg.resolve(N, path.target.D, path.target.d)
    r = 2 * N
    ts = choose_sample_points(variant, cfg.k, cfg.eps)
    report = ReductionReport(variant=variant, k=cfg.k, eps=cfg.eps, degree=r)
    values = []
    for rep_path, seed in _paths(path, cfg.repeats, dist, rng):
        instances = [blend(rep_path, t) for t in ts]
        answers = list(oracle(instances))
        record = RepeatRecord(seed=seed, points=ts, answers=answers, correct=_count_correct(oracle))
        try:
            record.recovered, record.value = decode(SampleSet(zip(ts, answers)), r)
        except (DecodingFailure, DegenerateSystem, ZeroDenominatorAtOne) as exc:
            record.error = f"{type(exc).__name__}: {exc}"
        report.repeats.append(record)
        values.append(record.value)
    report.value = majority_vote(values, report)
    report.success = True
    return report


def _bw_decode(samples: SampleSet, r: int):
    poly = berlekamp_welch(samples, r)
    return poly, poly(1)


def _rational_decode(samples: SampleSet, r: int):
    rat = reconstruct_rational(samples, r)
    return rat, rat.at_one()


def reduce_exact(path: BlendPath, oracle: Oracle, cfg: ReductionConfig | None = None, *,
                 dist: DistributionSpec | None = None, rng: np.random.Generator | None = None,
                 return_report: bool = False):
    """Recover ``<psi(1)|psi(1)>`` from a partially faulty norm oracle.

    Each repeat queries ``k`` blend points, Berlekamp-Welch decodes the
    degree-``2N`` polynomial and evaluates it at ``t = 1``; the majority over
    repeats is returned.  When ``dist`` and ``rng`` are given every repeat
    after the first uses a fresh ``Q``.
    """
    cfg = cfg or ReductionConfig("exact")
    report = _decode_repeats("exact", path, oracle, replace(cfg, variant="exact"), dist, rng, _bw_decode)
    return report if return_report else report.value


def reduce_uev(path: BlendPath, observable: LocalObservable, oracle: Oracle, cfg: ReductionConfig | None = None,
               *, dist=None, rng=None, return_report: bool = False):
    """As :func:`reduce_exact` for ``<psi(t)|A|psi(t)>`` (the oracle evaluates ``A``)."""
    observable.check_against(path.target)
    cfg = cfg or ReductionConfig("uev")
    report = _decode_repeats("uev", path, oracle, replace(cfg, variant="uev"), dist, rng, _bw_decode)
    report.diagnostics["observable"] = observable.to_json()
    return report if return_report else report.value


def reduce_nev(path: BlendPath, observable: LocalObservable, oracle: Oracle, cfg: ReductionConfig | None = None,
               *, dist=None, rng=None, return_report: bool = False):
    """Recover the normalised expectation at ``t = 1`` by rational reconstruction.

    A repeat only yields the right value when all of its ``k >= 4N + 1``
    answers are correct; repeats are combined by majority vote.
    """
    observable.check_against(path.target)
    cfg = cfg or ReductionConfig("nev")
    report = _decode_repeats("nev", path, oracle, replace(cfg, variant="nev"), dist, rng, _rational_decode)
    report.diagnostics["observable"] = observable.to_json()
    return report if return_report else report.value


def reduce_noisy(path: BlendPath, oracle: Oracle, cfg: ReductionConfig | None = None, *,
                 return_report: bool = False):
    """Interpolate ``r + 1`` noisy answers and extrapolate to ``t = 1``.

    Returns ``(value, bound)`` where ``bound`` certifies ``|value - q(1)|``
    given that every answer is within ``2**-noise_bits`` of the truth.
    """
    cfg = cfg or ReductionConfig("noisy")
    if cfg.noise_bits is None:
        raise ConfigInvalid("the noisy variant needs noise_bits")
    cfg = replace(cfg, variant="noisy").resolve(path.target.N, path.target.D, path.target.d)
    r = 2 * path.target.N
    ts = choose_sample_points("noisy", cfg.k, cfg.eps)
    answers = list(oracle([blend(path, t) for t in ts]))
    poly = vandermonde_interpolate(SampleSet(zip(ts, answers)), r)
    value = poly(1)
    cert = noisy_certificate(Fraction(1, 1 << cfg.noise_bits), r, cfg.eps, cfg.rakhmanov_constant)
    report = ReductionReport(variant="noisy", k=cfg.k, eps=cfg.eps, degree=r, value=value, success=True,
                             bound=cert.bound, diagnostics=cert.to_json())
    report.repeats.append(RepeatRecord(seed=None, points=ts, answers=answers, correct=_count_correct(oracle),
                                       recovered=poly, value=value))
    return report if return_report else (value, cert.bound)
