import csv
import io
import json
import math
from fractions import Fraction

import numpy as np
import pytest

from helpers import random_peps
from pepsreduce.cli import main
from pepsreduce.contract import contract_norm, contract_norm_batch
from pepsreduce.errors import ConfigInvalid, IoError
from pepsreduce.exact import QI, ComplexRational, PrimeField, scalar_from_json
from pepsreduce.experiment import CSV_COLUMNS, ExperimentConfig, run_experiment, wilson_interval
from pepsreduce.oracle import OraclePolicy, make_faulty_oracle
from pepsreduce.reduction import DistributionSpec, ReductionConfig


# -- oracle -----------------------------------------------------------------------------

def _identity_engine(xs):
    return list(xs)


def test_always_correct_is_passthrough():
    rng = np.random.default_rng(0)
    peps = [random_peps(2, 2, seed=s) for s in range(5)]
    oracle = make_faulty_oracle(contract_norm_batch, OraclePolicy(), rng)
    assert oracle(peps) == [contract_norm(p) for p in peps]
    assert all(oracle.last_correct) and oracle.failures == 0


def test_iid_failure_rate_within_three_sigma():
    oracle = make_faulty_oracle(_identity_engine, OraclePolicy.iid(0.25), np.random.default_rng(1))
    n = 10 ** 4
    xs = [QI(j) for j in range(n)]
    out = oracle(xs)
    wrong = sum(a != b for a, b in zip(out, xs))
    assert wrong == oracle.failures == n - sum(oracle.last_correct)
    sigma = math.sqrt(0.25 * 0.75 / n)
    assert abs(wrong / n - 0.25) <= 3 * sigma


def test_failures_are_wrong_in_prime_field():
    F = PrimeField(101)
    oracle = make_faulty_oracle(_identity_engine, OraclePolicy.iid(1.0), np.random.default_rng(2))
    xs = [F(j) for j in range(101)]
    assert all(a != b for a, b in zip(oracle(xs), xs))


@pytest.mark.parametrize("rule", ["zero", "negate", "offset"])
def test_wrong_rules(rule):
    oracle = make_faulty_oracle(_identity_engine, OraclePolicy("iid-failure", 1.0, rule), np.random.default_rng(3))
    xs = [ComplexRational(j + 1, 1) for j in range(20)]
    out = oracle(xs)
    if rule == "zero":
        assert all(v == 0 for v in out)
    elif rule == "negate":
        assert out == [-x for x in xs]
    assert not any(oracle.last_correct)


def test_adversarial_subset_exact_fraction():
    oracle = make_faulty_oracle(_identity_engine, OraclePolicy("adversarial-subset", 0.3),
                                np.random.default_rng(4))
    for _ in range(10):
        oracle([QI(j) for j in range(50)])
        assert sum(not c for c in oracle.last_correct) == 15


def test_additive_noise_within_bound():
    oracle = make_faulty_oracle(_identity_engine, OraclePolicy.noisy(64), np.random.default_rng(5))
    xs = [ComplexRational(Fraction(j, 7), -j) for j in range(2000)]
    out = oracle(xs)
    assert all((a - b).abs2() <= Fraction(1, 2 ** 128) for a, b in zip(out, xs))


def test_policy_validation():
    for bad in [dict(mode="sometimes"), dict(mode="iid-failure", failure_rate=1.5),
                dict(mode="additive-noise"), dict(wrong_rule="swap")]:
        with pytest.raises(ConfigInvalid):
            OraclePolicy(**bad)


# -- experiment ----------------------------------------------------------------------------

FAST = dict(width=2, height=2, dist=DistributionSpec(bits=16), reduction=ReductionConfig(repeats=3))


def test_zero_trials_is_empty():
    rep = run_experiment(ExperimentConfig(trials=0))
    assert rep.trials == [] and rep.successes == 0
    assert rep.to_csv().strip() == ",".join(CSV_COLUMNS)


def test_same_seed_gives_identical_csv():
    cfg = ExperimentConfig(trials=3, seed=123, policy=OraclePolicy.iid(0.1), **FAST)
    a, b = run_experiment(cfg).to_csv(), run_experiment(cfg).to_csv()
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert len(rows) == 3 and list(rows[0]) == list(CSV_COLUMNS)
    assert all(r["success"] == "1" for r in rows)
    other = run_experiment(ExperimentConfig(trials=3, seed=124, policy=OraclePolicy.iid(0.1), **FAST)).to_csv()
    assert other != a


def test_success_counts_match_truth():
    rep = run_experiment(ExperimentConfig(trials=4, seed=9, policy=OraclePolicy.iid(0.2), **FAST))
    assert rep.successes == sum(r.value == r.truth for r in rep.trials)


def test_report_write(tmp_path):
    rep = run_experiment(ExperimentConfig(trials=1, seed=1, **FAST))
    rep.write(tmp_path / "r.json", "json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["trials"] == 1 and doc["successes"] == 1
    with pytest.raises(IoError):
        rep.write(tmp_path / "missing" / "r.csv", "csv")


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        ExperimentConfig(variant="magic")
    with pytest.raises(ConfigInvalid):
        ExperimentConfig(trials=-1)
    with pytest.raises(ConfigInvalid):
        ExperimentConfig(seed=2 ** 64)


def test_wilson_interval():
    assert wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = wilson_interval(50, 100)
    # closed form at p = 1/2: half-width z sqrt(n/4 + z^2/4) / (n + z^2)
    z = 1.959963984540054
    half = z * math.sqrt(100 / 4 + z * z / 4) / (100 + z * z)
    assert lo == pytest.approx(0.5 - half) and hi == pytest.approx(0.5 + half)
    lo, hi = wilson_interval(200, 200)
    assert hi == pytest.approx(1.0) and 0.98 < lo < 1


# -- command line ---------------------------------------------------------------------------

def test_cli_contract(tmp_path, capsys):
    p = random_peps(2, 2, seed=3)
    p.save(tmp_path / "p.json")
    assert main(["contract", str(tmp_path / "p.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert scalar_from_json(out["norm"]) == contract_norm(p)


def test_cli_reduce_success_and_csv(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["reduce", "--variant", "exact", "--lattice", "2x2", "--failure-rate", "0.1", "--repeats", "3",
                 "--bits", "16", "--seed", "5", "--out", str(out), "--format", "csv"])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert rows[0]["success"] == "1"


def test_cli_config_error_exit_2():
    assert main(["reduce", "--failure-rate", "1.5"]) == 2


def test_cli_decode_failure_exit_3(tmp_path):
    code = main(["reduce", "--variant", "exact", "--lattice", "2x1", "--failure-rate", "0.9", "--repeats", "1",
                 "--bits", "16", "--seed", "1", "--out", str(tmp_path / "r.json")])
    assert code == 3


def test_cli_size_cap_exit_4(tmp_path):
    assert main(["permanent", "--n", "10", "--q", "101", "--out", str(tmp_path / "p.json")]) == 4


def test_cli_permanent(tmp_path):
    assert main(["permanent", "--n", "4", "--q", "101", "--trials", "2", "--out", str(tmp_path / "p.json")]) == 0
    doc = json.loads((tmp_path / "p.json").read_text())
    assert doc["successes"] == 2


@pytest.mark.parametrize("name", ["gaussian-tv", "degree-bound", "paturi", "rakhmanov"])
def test_cli_verify_lemma(name, tmp_path):
    assert main(["verify-lemma", name, "--out", str(tmp_path / "v.json")]) == 0
    assert json.loads((tmp_path / "v.json").read_text())["ok"] is True
