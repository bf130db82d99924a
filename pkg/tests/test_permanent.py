import random

import numpy as np
import pytest
from scipy.stats import chisquare

from oracles import brute_permanent_mod, lagrange_eval
from pepsreduce.errors import ConfigInvalid, SizeCapExceeded
from pepsreduce.exact import QI, ComplexRational, PrimeField
from pepsreduce.interpolation import SampleSet, vandermonde_interpolate
from pepsreduce.oracle import OraclePolicy, make_faulty_oracle
from pepsreduce.permanent import (
    LiptonConfig,
    SquareMatrix,
    line_matrices,
    lipton_reduce,
    permanent_batch,
    permanent_bruteforce,
    random_matrix,
)

Q = 101
F = PrimeField(Q)


def rows_of(A: SquareMatrix):
    return [[int(x.value) for x in row] for row in A.entries]


def test_identity_permanent_is_one():
    for n in range(1, 8):
        assert permanent_bruteforce(SquareMatrix.identity(n)) == 1
        assert permanent_bruteforce(SquareMatrix.identity(n, F)) == F(1)


def test_two_by_two_closed_form():
    rng = random.Random(0)
    for _ in range(50):
        a, b, c, d = (ComplexRational(rng.randint(-9, 9), rng.randint(-9, 9)) for _ in range(4))
        assert permanent_bruteforce(SquareMatrix([[a, b], [c, d]])) == a * d + b * c


def test_diagonal_product():
    rng = random.Random(1)
    for n in range(1, 7):
        diag = [QI(rng.randint(-5, 5)) for _ in range(n)]
        m = [[diag[i] if i == j else QI(0) for j in range(n)] for i in range(n)]
        expect = QI(1)
        for x in diag:
            expect = expect * x
        assert permanent_bruteforce(SquareMatrix(m)) == expect


def test_matches_independent_oracle():
    rng = np.random.default_rng(2)
    for n in range(1, 7):
        mats = [random_matrix(n, Q, rng) for _ in range(5)]
        got = permanent_batch(mats)
        for A, v in zip(mats, got):
            assert v.value == brute_permanent_mod(rows_of(A), Q)
            assert permanent_bruteforce(A) == v


def test_size_cap():
    with pytest.raises(SizeCapExceeded):
        permanent_bruteforce(SquareMatrix.identity(10, F))


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    for n in range(1, 7):
        for _ in range(10):
            A = random_matrix(n, Q, rng)
            P, S = rng.permutation(n), rng.permutation(n)
            B = SquareMatrix.from_residues(A.values[P][:, S], Q)
            assert permanent_bruteforce(A) == permanent_bruteforce(B)


def test_row_multilinearity():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        base = rng.integers(0, Q, size=(n, n))
        u, v = rng.integers(0, Q, size=n), rng.integers(0, Q, size=n)
        i = int(rng.integers(0, n))
        mats = []
        for row in (u + v, u, v):
            m = base.copy()
            m[i] = row
            mats.append(SquareMatrix.from_residues(m, Q))
        total, a, b = (permanent_bruteforce(m) for m in mats)
        assert total == a + b


def test_line_is_degree_n():
    rng = np.random.default_rng(5)
    for n in range(1, 7):
        A, B = random_matrix(n, Q, rng), random_matrix(n, Q, rng)
        ts = list(range(1, n + 5))
        vals = [brute_permanent_mod(rows_of(M), Q) for M in line_matrices(A, B, ts)]
        fit = vandermonde_interpolate(SampleSet((F(t), F(v)) for t, v in zip(ts[:n + 1], vals[:n + 1])), n)
        for t, v in zip(ts[n + 1:], vals[n + 1:]):
            assert fit(F(t)) == F(v)
        # the line passes through perm(A) at t = 0
        assert fit(F(0)) == permanent_bruteforce(A)
        lagr = lagrange_eval([F(t) for t in ts[:n + 1]], [F(v) for v in vals[:n + 1]], F(0))
        assert lagr == fit(F(0))


def test_blended_entry_is_uniform():
    rng = np.random.default_rng(6)
    A = random_matrix(3, Q, rng)
    t = 7
    draws = 10 ** 4
    entries = np.array([line_matrices(A, random_matrix(3, Q, rng), [t])[0].values[1, 2] for _ in range(draws)])
    counts = np.bincount(entries, minlength=Q)
    stat = chisquare(counts)
    assert stat.pvalue > 1e-3


def test_lipton_exact_oracle():
    rng = np.random.default_rng(7)
    for n in range(1, 6):
        for _ in range(5):
            A = random_matrix(n, Q, rng)
            oracle = make_faulty_oracle(permanent_batch, OraclePolicy(), rng)
            assert lipton_reduce(A, oracle, LiptonConfig(repeats=1), rng=rng) == permanent_bruteforce(A)


def test_lipton_with_failures_reports_counts():
    rng = np.random.default_rng(8)
    A = random_matrix(4, Q, rng)
    oracle = make_faulty_oracle(permanent_batch, OraclePolicy.iid(0.1), rng)
    rep = lipton_reduce(A, oracle, rng=rng, return_report=True)
    assert rep.value == permanent_bruteforce(A)
    assert len(rep.repeats) == 15 and rep.k == 16 and rep.degree == 4
    assert all(0 <= c <= 16 for c in rep.correct_counts)


def test_lipton_config_errors():
    rng = np.random.default_rng(9)
    oracle = make_faulty_oracle(permanent_batch, OraclePolicy(), rng)
    with pytest.raises(ConfigInvalid):
        lipton_reduce(SquareMatrix.identity(2), oracle, rng=rng)
    with pytest.raises(ConfigInvalid):
        lipton_reduce(random_matrix(3, 5, rng), oracle, rng=rng)
    with pytest.raises(ConfigInvalid):
        LiptonConfig(k=3).resolve(3, 101)


def test_matrix_json_round_trip(tmp_path):
    A = random_matrix(4, Q, np.random.default_rng(10))
    doc = A.to_json()
    assert doc["modulus"] == Q and all(isinstance(x, str) for row in doc["entries"] for x in row)
    assert SquareMatrix.from_json(doc) == A
    Z = SquareMatrix([[ComplexRational(1, 2), QI(3)], [QI(0), ComplexRational(0, -1)]])
    assert SquareMatrix.from_json(Z.to_json()) == Z
