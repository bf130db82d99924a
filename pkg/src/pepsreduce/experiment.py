"""Seeded Monte Carlo experiments over the reductions."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .bounds import mpf_to_fraction
from .contract import contract_nev_batch, contract_norm_batch, contract_uev_batch
from .errors import ConfigInvalid, IoError, ReductionFailure, ZeroNorm
from .exact import ComplexRational
from .oracle import OraclePolicy, make_faulty_oracle
from .peps import LatticeSpec, LocalObservable, PepsData, build_cluster_peps
from .permanent import LiptonConfig, lipton_reduce, permanent_batch, permanent_bruteforce, random_matrix
from .reduction import (
    BlendPath,
    DistributionSpec,
    ReductionConfig,
    reduce_exact,
    reduce_nev,
    reduce_noisy,
    reduce_uev,
    sample_peps_data,
)

CSV_COLUMNS = ("seed", "variant", "N", "D", "d", "k", "m", "failure_rate", "success", "value_re", "value_im", "bound")
EXPERIMENT_VARIANTS = ("exact", "noisy", "uev", "nev", "permanent")


def default_observable(d: int = 2, site: int = 0) -> LocalObservable:
    """Projector onto the first basis state at ``site``."""
    m = [[ComplexRational(int(i == j == 0)) for j in range(d)] for i in range(d)]
    return LocalObservable((site,), np.array(m, dtype=object))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: instance source, distributions, oracle and trial count.

    ``source`` is ``random`` (targets drawn from ``dist``), ``cluster`` or
    ``file`` (``instance_path``).  Permanent experiments use ``perm_n``,
    ``perm_q`` and ``lipton``.
    """

    variant: str = "exact"
    source: str = "random"
    width: int = 2
    height: int = 3
    d: int = 2
    D: int = 2
    instance_path: str | None = None
    dist: DistributionSpec = DistributionSpec()
    reduction: ReductionConfig = ReductionConfig()
    policy: OraclePolicy = OraclePolicy()
    observable: LocalObservable | None = None
    trials: int = 1
    seed: int = 0
    parallel: int = 1
    perm_n: int = 5
    perm_q: int = 101
    lipton: LiptonConfig = LiptonConfig()

    def __post_init__(self):
        if self.variant not in EXPERIMENT_VARIANTS:
            raise ConfigInvalid(f"unknown variant {self.variant!r}")
        if self.source not in ("random", "cluster", "file"):
            raise ConfigInvalid(f"unknown instance source {self.source!r}")
        if self.source == "file" and not self.instance_path:
            raise ConfigInvalid("file source needs instance_path")
        if self.trials < 0:
            raise ConfigInvalid("trial count must be non-negative")
        if self.parallel < 1:
            raise ConfigInvalid("parallel must be at least 1")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigInvalid("seed must be an unsigned 64-bit integer")

    def trial_seeds(self) -> list[int]:
        children = np.random.SeedSequence(self.seed).spawn(self.trials)
        return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


@dataclass
class TrialResult:
    index: int
    seed: int
    variant: str
    N: int
    D: int
    d: int
    k: int | None
    m: int
    failure_rate: float
    success: bool
    value: object = None
    truth: object = None
    bound: object = None
    outcome: str = "ok"
    correct_counts: list = field(default_factory=list)

    def row(self) -> dict:
        re = im = ""
        if self.value is not None:
            v = self.value
            if isinstance(v, ComplexRational):
                re, im = _frac(v.re), _frac(v.im)
            else:
                re, im = str(int(v)), "0"
        return {
            "seed": self.seed, "variant": self.variant, "N": self.N, "D": self.D, "d": self.d,
            "k": "" if self.k is None else self.k, "m": self.m, "failure_rate": self.failure_rate,
            "success": int(self.success), "value_re": re, "value_im": im,
            "bound": "" if self.bound is None else str(self.bound),
        }


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    trials: list[TrialResult]

    @property
    def successes(self) -> int:
        return sum(t.success for t in self.trials)

    @property
    def success_rate(self) -> float:
        return self.successes / len(self.trials) if self.trials else float("nan")

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.successes, len(self.trials))

    def outcomes(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for t in self.trials:
            out[t.outcome] = out.get(t.outcome, 0) + 1
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for t in self.trials:
            writer.writerow(t.row())
        return buf.getvalue()

    def to_json(self) -> dict:
        cfg = self.config
        lo, hi = self.wilson
        return {
            "variant": cfg.variant,
            "source": cfg.source,
            "lattice": {"width": cfg.width, "height": cfg.height},
            "master_seed": cfg.seed,
            "trials": len(self.trials),
            "successes": self.successes,
            "success_rate": None if not self.trials else self.success_rate,
            "wilson_95": [lo, hi],
            "outcomes": self.outcomes(),
            "rows": [t.row() for t in self.trials],
        }

    def write(self, path, fmt: str = "json") -> None:
        text = self.to_csv() if fmt == "csv" else json.dumps(self.to_json(), indent=1) + "\n"
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise IoError(f"cannot write report to {path}: {exc}") from exc


def _target(cfg: ExperimentConfig, rng: np.random.Generator) -> PepsData:
    if cfg.source == "file":
        return PepsData.load(cfg.instance_path)
    lattice = LatticeSpec(cfg.width, cfg.height)
    if cfg.source == "cluster":
        return build_cluster_peps(lattice)
    return sample_peps_data((lattice, cfg.d, cfg.D), cfg.dist, rng)


def _engine(variant: str, obs: LocalObservable | None):
    if variant in ("exact", "noisy"):
        return contract_norm_batch
    if variant == "uev":
        return lambda batch: contract_uev_batch(batch, obs)
    return lambda batch: contract_nev_batch(batch, obs)


def run_trial(cfg: ExperimentConfig, index: int, seed: int) -> TrialResult:
    """One independent trial driven entirely by ``seed``."""
    rng = np.random.default_rng(seed)
    fr = cfg.policy.failure_rate
    if cfg.variant == "permanent":
        A = random_matrix(cfg.perm_n, cfg.perm_q, rng)
        truth = permanent_bruteforce(A)
        oracle = make_faulty_oracle(permanent_batch, cfg.policy, rng)
        res = TrialResult(index, seed, "permanent", cfg.perm_n, 0, 0, cfg.lipton.k or 4 * cfg.perm_n,
                          cfg.lipton.repeats, fr, False, truth=truth)
        try:
            rep = lipton_reduce(A, oracle, cfg.lipton, rng=rng, return_report=True)
            res.value = rep.value
            res.success = rep.value == truth
            res.outcome = "ok" if res.success else "wrong"
            res.correct_counts = rep.correct_counts
        except ReductionFailure as exc:
            res.outcome = type(exc).__name__
        return res

    P = _target(cfg, rng)
    dist = cfg.dist
    if P.translation_invariant and not dist.translation_invariant:
        dist = replace(dist, translation_invariant=True)
    Q = sample_peps_data(P, dist, rng)
    path = BlendPath(P, Q)
    obs = cfg.observable or (default_observable(P.d) if cfg.variant in ("uev", "nev") else None)
    engine = _engine(cfg.variant, obs)
    rcfg = replace(cfg.reduction, variant=cfg.variant)
    if rcfg.noise_bits is None and cfg.policy.noise_bits is not None:
        rcfg = replace(rcfg, noise_bits=cfg.policy.noise_bits)
    rcfg = rcfg.resolve(P.N, P.D, P.d)
    res = TrialResult(index, seed, cfg.variant, P.N, P.D, P.d, rcfg.k, rcfg.repeats, fr, False)
    try:
        res.truth = engine([P])[0]
    except ZeroNorm:
        res.outcome = "ZeroNorm"
        return res
    oracle = make_faulty_oracle(engine, cfg.policy, rng)
    try:
        if cfg.variant == "noisy":
            rep = reduce_noisy(path, oracle, rcfg, return_report=True)
            res.m = 1
            res.bound = rep.bound
            err2 = (rep.value - res.truth).abs2()
            res.success = err2 <= mpf_to_fraction(rep.bound) ** 2
        else:
            reducer = {"exact": lambda: reduce_exact(path, oracle, rcfg, dist=dist, rng=rng, return_report=True),
                       "uev": lambda: reduce_uev(path, obs, oracle, rcfg, dist=dist, rng=rng, return_report=True),
                       "nev": lambda: reduce_nev(path, obs, oracle, rcfg, dist=dist, rng=rng, return_report=True)}
            rep = reducer[cfg.variant]()
            res.success = rep.value == res.truth
        res.value = rep.value
        res.correct_counts = rep.correct_counts
        res.outcome = "ok" if res.success else "wrong"
    except ReductionFailure as exc:
        res.outcome = type(exc).__name__
        if exc.report is not None:
            res.correct_counts = exc.report.correct_counts
    return res


def _run_indexed(args):
    cfg, index, seed = args
    return run_trial(cfg, index, seed)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run ``cfg.trials`` trials; the result depends only on the config and master seed."""
    seeds = cfg.trial_seeds()
    jobs = [(cfg, i, s) for i, s in enumerate(seeds)]
    if cfg.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel) as pool:
            results = list(pool.map(_run_indexed, jobs))
    else:
        results = [_run_indexed(j) for j in jobs]
    return ExperimentReport(cfg, results)
