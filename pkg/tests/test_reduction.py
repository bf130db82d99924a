import math
import random
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from helpers import random_peps
from pepsreduce.bounds import mpf_to_fraction, noisy_certificate, paturi_bound
from pepsreduce.contract import (
    contract_nev,
    contract_nev_batch,
    contract_norm,
    contract_norm_batch,
    contract_uev,
    contract_uev_batch,
)
from pepsreduce.errors import AllRepeatsFailedDecoding, ConfigInvalid, MajorityTie, ShapeMismatch
from pepsreduce.exact import QI, ComplexRational
from pepsreduce.experiment import default_observable
from pepsreduce.oracle import OraclePolicy, make_faulty_oracle
from pepsreduce.peps import LatticeSpec, LocalObservable
from pepsreduce.reduction import (
    BlendPath,
    DistributionSpec,
    ReductionConfig,
    ReductionReport,
    blend,
    choose_sample_points,
    epsilon_for,
    majority_vote,
    reduce_exact,
    reduce_nev,
    reduce_noisy,
    reduce_uev,
    sample_peps_data,
)
from pepsreduce.tv import (
    blend_tv_bound,
    tv_bound_scale,
    tv_bound_shift,
    tv_closed_scale,
    tv_closed_shift,
    tv_numeric_scale,
    tv_numeric_shift,
)


def random_path(w, h, seed, dist=DistributionSpec(bits=16), ti=False):
    rng = np.random.default_rng(seed)
    if ti:
        dist = DistributionSpec(bits=dist.bits, translation_invariant=True)
    P = sample_peps_data((LatticeSpec(w, h), 2, 2), dist, rng)
    return BlendPath(P, sample_peps_data(P, dist, rng)), rng


# -- sampling --------------------------------------------------------------------------

def test_sampling_tiny_sigma_snaps_to_zero():
    rng = np.random.default_rng(0)
    P = sample_peps_data((LatticeSpec(2, 2), 2, 2), DistributionSpec(sigma=Fraction(1, 2 ** 40), bits=8), rng)
    assert all(x == 0 for t in P.tensors for x in t.reshape(-1))


def test_sampling_deterministic():
    spec = DistributionSpec()
    a = sample_peps_data((LatticeSpec(3, 2), 2, 2), spec, np.random.default_rng(99))
    b = sample_peps_data((LatticeSpec(3, 2), 2, 2), spec, np.random.default_rng(99))
    assert a == b and a.to_json() == b.to_json()


@pytest.mark.parametrize("kind,sigma", [("gaussian", Fraction(1)), ("gaussian", Fraction(3, 2)), ("uniform", Fraction(2))])
def test_sampling_moments(kind, sigma):
    # one site with d = 50000 gives 10**5 real draws
    P = sample_peps_data((LatticeSpec(1, 1), 50000, 1), DistributionSpec(kind, sigma, bits=53),
                         np.random.default_rng(5))
    z = np.array([complex(x) for x in P.tensor(0).reshape(-1)])
    parts = np.concatenate([z.real, z.imag])
    n = parts.size
    s = float(sigma)
    var_part = s * s / 2 if kind == "gaussian" else s * s / 3
    mean_se = math.sqrt(var_part / n)
    fourth = 3 * var_part ** 2 if kind == "gaussian" else s ** 4 / 5
    var_se = math.sqrt((fourth - var_part ** 2) / n)
    assert abs(parts.mean()) <= 3 * mean_se
    assert abs(parts.var() - var_part) <= 3 * var_se
    if kind == "gaussian":
        assert abs(np.mean(np.abs(z) ** 2) - s * s) <= 3 * math.sqrt(2 * var_se ** 2)
    else:
        assert np.abs(parts).max() <= s


def test_translation_invariant_sampling_shares_tensors():
    rng = np.random.default_rng(2)
    P = sample_peps_data((LatticeSpec(3, 3), 2, 2), DistributionSpec(translation_invariant=True), rng)
    assert P.translation_invariant and P.is_translation_invariant()
    lat = P.lattice
    by_degree = {}
    for v in range(lat.N):
        by_degree.setdefault(lat.degree(v), []).append(P.tensor(v))
    for group in by_degree.values():
        assert all(np.array_equal(g, group[0]) for g in group)


# -- blend path ------------------------------------------------------------------------

def test_blend_endpoints_and_midpoint():
    path, _ = random_path(2, 2, 1)
    assert blend(path, 0) == path.random
    assert blend(path, 1) == path.target
    mid = blend(path, Fraction(1, 2))
    for v in range(4):
        expect = (path.target.tensor(v) + path.random.tensor(v))
        assert all(a == b / 2 for a, b in zip(mid.tensor(v).reshape(-1), expect.reshape(-1)))


def test_blend_shape_mismatch():
    a = random_peps(2, 2)
    b = random_peps(2, 3)
    with pytest.raises(ShapeMismatch):
        BlendPath(a, b)


def test_translation_invariant_blending_preserved():
    path, _ = random_path(3, 3, 4, ti=True)
    assert path.translation_invariant
    for t in (0, Fraction(1, 7), Fraction(1, 2), Fraction(-3, 5), 1, ComplexRational(1, 2)):
        R = blend(path, t)
        assert R.is_translation_invariant()


# -- parameters ------------------------------------------------------------------------

def test_epsilon_examples():
    assert epsilon_for(2, 2, 9) == (Fraction(1, 108), Fraction(1, 186624))
    assert epsilon_for(1, 1, 1) == (Fraction(1, 12), Fraction(1, 72))
    rng = random.Random(0)
    for _ in range(200):
        D, d, N = rng.randint(1, 5), rng.randint(1, 5), rng.randint(1, 30)
        delta, eps = epsilon_for(D, d, N)
        assert eps * 6 * D ** 4 * d * N == delta


def test_sample_point_examples():
    assert choose_sample_points("noisy", 3, 1) == [0, Fraction(1, 2), 1]
    assert choose_sample_points("exact", 4, 1) == [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1]


def test_sample_points_property():
    rng = random.Random(3)
    for _ in range(1000):
        variant = rng.choice(["exact", "noisy", "uev", "nev"])
        k = rng.randint(1, 60)
        eps = Fraction(rng.randint(1, 1000), rng.randint(1, 10 ** 6))
        pts = choose_sample_points(variant, k, eps)
        assert len(pts) == k == len(set(pts))
        assert all(0 <= t <= eps for t in pts)
        if variant != "noisy":
            assert 0 not in pts


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        ReductionConfig("exact", k=8).resolve(4, 2, 2)
    with pytest.raises(ConfigInvalid):
        ReductionConfig("noisy", k=12).resolve(4, 2, 2)
    with pytest.raises(ConfigInvalid):
        ReductionConfig("nev", k=16).resolve(4, 2, 2)
    cfg = ReductionConfig().resolve(6, 2, 2)
    assert cfg.k == 120 and cfg.repeats == 25


# -- majority vote ---------------------------------------------------------------------

def test_majority_vote_outcomes():
    assert majority_vote([1, 2, 2, None]) == 2
    with pytest.raises(MajorityTie):
        majority_vote([1, 2, None])
    with pytest.raises(AllRepeatsFailedDecoding):
        majority_vote([None, None])


def test_majority_amplification_decays_exponentially():
    """Vote failure falls log-linearly in m: most repeats fail to decode, wrong values never repeat."""
    rng = np.random.default_rng(12)
    p_good, p_fail = 0.25, 0.65
    ms = list(range(1, 34, 4))
    trials = 20000
    rates = []
    for m in ms:
        failures = 0
        draws = rng.random((trials, m))
        wrong = rng.integers(0, 10 ** 6, size=(trials, m))
        for row, w in zip(draws, wrong):
            values = [0 if u < p_good else (None if u < p_good + p_fail else int(x) + 1) for u, x in zip(row, w)]
            try:
                failures += majority_vote(values) != 0
            except (MajorityTie, AllRepeatsFailedDecoding):
                failures += 1
        rates.append(failures / trials)
    pts = [(m, math.log(r)) for m, r in zip(ms, rates) if r > 0]
    assert len(pts) >= 5
    x = np.array([m for m, _ in pts], dtype=float)
    y = np.array([v for _, v in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1 - resid.var() / y.var()
    assert slope < -0.05
    assert r2 > 0.95
    assert rates[-1] < rates[0] / 20


# -- reductions --------------------------------------------------------------------------

def test_reduce_exact_with_perfect_oracle_100_instances():
    cfg = ReductionConfig("exact", repeats=1)
    for seed in range(100):
        path, rng = random_path(2, 1, seed)
        oracle = make_faulty_oracle(contract_norm_batch, OraclePolicy(), rng)
        assert reduce_exact(path, oracle, cfg) == contract_norm(path.target)


def test_reduce_exact_report_contents():
    path, rng = random_path(2, 2, 7)
    oracle = make_faulty_oracle(contract_norm_batch, OraclePolicy.iid(0.2), rng)
    rep = reduce_exact(path, oracle, ReductionConfig(repeats=5), dist=DistributionSpec(bits=16), rng=rng,
                       return_report=True)
    assert rep.success and rep.value == contract_norm(path.target)
    assert len(rep.repeats) == 5 and rep.k == 80 and rep.degree == 8
    assert rep.repeats[0].seed is None and all(isinstance(r.seed, int) for r in rep.repeats[1:])
    assert all(c is not None for c in rep.correct_counts)
    doc = rep.to_json()
    assert doc["variant"] == "exact"


def test_reduce_uev_identity_matches_exact():
    path, rng = random_path(2, 2, 8)
    ident = LocalObservable.identity(1, 2)
    uev_oracle = make_faulty_oracle(lambda b: contract_uev_batch(b, ident), OraclePolicy(), rng)
    norm_oracle = make_faulty_oracle(contract_norm_batch, OraclePolicy(), rng)
    cfg = ReductionConfig(repeats=1)
    a = reduce_uev(path, ident, uev_oracle, cfg)
    b = reduce_exact(path, norm_oracle, cfg)
    assert a == b == contract_norm(path.target)


def test_reduce_uev_exact_oracle():
    obs = default_observable(2, site=3)
    for seed in range(5):
        path, rng = random_path(2, 2, 20 + seed)
        oracle = make_faulty_oracle(lambda b: contract_uev_batch(b, obs), OraclePolicy(), rng)
        assert reduce_uev(path, obs, oracle, ReductionConfig(repeats=1)) == contract_uev(path.target, obs)


def test_reduce_uev_failing_oracle_200_trials():
    obs = default_observable(2, site=0)
    dist = DistributionSpec(bits=16)
    wins = 0
    for seed in range(200):
        path, rng = random_path(2, 2, 10_000 + seed, dist)
        oracle = make_faulty_oracle(lambda b: contract_uev_batch(b, obs), OraclePolicy.iid(0.2), rng)
        try:
            wins += reduce_uev(path, obs, oracle, ReductionConfig(), dist=dist, rng=rng) == contract_uev(path.target, obs)
        except (MajorityTie, AllRepeatsFailedDecoding):
            pass
    assert wins >= 198


def test_reduce_nev_identity_is_one():
    ident = LocalObservable.identity(0, 2)
    for seed in range(5):
        path, rng = random_path(2, 2, 30 + seed)
        oracle = make_faulty_oracle(lambda b: contract_nev_batch(b, ident), OraclePolicy(), rng)
        assert reduce_nev(path, ident, oracle, ReductionConfig("nev", repeats=1)) == 1


def test_reduce_nev_exact_oracle():
    obs = LocalObservable((1, 2), np.array([[QI(int(i == j) * (i + 1)) for j in range(4)] for i in range(4)],
                                           dtype=object))
    for seed in range(5):
        path, rng = random_path(2, 2, 40 + seed)
        oracle = make_faulty_oracle(lambda b: contract_nev_batch(b, obs), OraclePolicy(), rng)
        assert reduce_nev(path, obs, oracle, ReductionConfig("nev", repeats=1)) == contract_nev(path.target, obs)


def test_nev_repeat_all_correct_probability():
    N = 4
    p_fail = 1 / (24 * N)
    oracle = make_faulty_oracle(lambda xs: list(xs), OraclePolicy.iid(p_fail), np.random.default_rng(4))
    trials = 4000
    clean = 0
    for _ in range(trials):
        oracle([QI(j) for j in range(4 * N + 1)])
        clean += all(oracle.last_correct)
    frac = clean / trials
    sigma = math.sqrt(frac * (1 - frac) / trials)
    assert frac >= 2 / 3 - 1 / (12 * N) - 3 * sigma


def test_reduce_noisy_exact_oracle_is_exact():
    path, rng = random_path(2, 2, 50)
    oracle = make_faulty_oracle(contract_norm_batch, OraclePolicy(), rng)
    value, bound = reduce_noisy(path, oracle, ReductionConfig("noisy", noise_bits=64))
    assert value == contract_norm(path.target)
    assert bound > 0


def test_reduce_noisy_bound_holds():
    for seed in range(10):
        path, rng = random_path(2, 2, 60 + seed)
        oracle = make_faulty_oracle(contract_norm_batch, OraclePolicy.noisy(128), rng)
        value, bound = reduce_noisy(path, oracle, ReductionConfig("noisy", noise_bits=128))
        assert (value - contract_norm(path.target)).abs2() <= mpf_to_fraction(bound) ** 2


def test_noisy_certificate_against_literal_composition():
    """Compare with the literal product noise * exp(2r(1 + 1/eps)) * rakhmanov_factor."""
    N, r = 4, 8
    _, eps = epsilon_for(2, 2, N)
    noise = Fraction(1, 2 ** 128)
    cert = noisy_certificate(noise, r, eps)
    literal = paturi_bound(noise, r, eps) * cert.rakhmanov_factor
    assert cert.bound <= literal


def test_noisy_certificate_composition_is_consistent():
    _, eps = epsilon_for(2, 2, 4)
    cert = noisy_certificate(Fraction(1, 2 ** 128), 8, eps)
    assert mpf_to_fraction(cert.eps_prime) < eps
    assert cert.center == eps / 2
    reference = paturi_bound(Fraction(1, 2 ** 128) * mpf_to_fraction(cert.rakhmanov_factor), 8,
                             mpf_to_fraction(cert.eps_prime))
    assert reference <= cert.bound <= reference * 1.4143


# -- total variation ---------------------------------------------------------------------

def test_tv_zero_shift():
    assert tv_bound_shift([0, 0, 0], 1.0) == 0
    assert tv_numeric_shift(0.0) == 0


def test_tv_scale_example():
    assert tv_numeric_scale(0.01) <= tv_bound_scale(1, 0.01) == pytest.approx(0.02)


@pytest.mark.parametrize("eps", [0.3, 0.1, 0.01, 0.001])
def test_tv_scale_quadrature_matches_closed_form(eps):
    assert tv_numeric_scale(eps) == pytest.approx(tv_closed_scale(eps), abs=1e-9)


@pytest.mark.parametrize("v", [0.05, 0.3, -0.7, 1.5])
def test_tv_shift_quadrature_matches_closed_form(v):
    assert tv_numeric_shift(v) == pytest.approx(tv_closed_shift(v), abs=1e-9)
    assert tv_numeric_shift(v) <= tv_bound_shift([v], 1.0)


def test_blend_tv_bound_formula():
    for D, d, N in [(2, 2, 9), (1, 1, 1), (3, 2, 6)]:
        _, eps = epsilon_for(D, d, N)
        total = blend_tv_bound(D, d, N, eps)
        M = D ** 4 * d * N
        assert total == pytest.approx((4 * M + 2 * M) * float(eps))
        assert total == pytest.approx(float(Fraction(1, 12 * N)))
