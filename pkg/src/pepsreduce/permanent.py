"""Permanents over F_q and the classic random self-reduction along ``A + tB``."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigInvalid, DecodingFailure, ShapeMismatch, SizeCapExceeded
from .exact import QI, PrimeField, PrimeFieldElement, field_of, scalar_from_json, scalar_to_json
from .interpolation import SampleSet, berlekamp_welch
from .reduction import ReductionReport, RepeatRecord, majority_vote

MAX_BRUTEFORCE_N = 9


class SquareMatrix:
    """``n x n`` matrix with entries in one field.

    F_q matrices keep an int64 copy of the residues in ``values`` for the
    vectorised permanent.
    """

    __slots__ = ("n", "entries", "field", "values")

    def __init__(self, entries, field=None):
        arr = np.array(entries, dtype=object)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeMismatch("matrix must be square")
        self.n = arr.shape[0]
        if field is None:
            field = field_of(arr.reshape(-1)) if arr.size else QI
        self.field = field
        conv = np.empty(arr.shape, dtype=object)
        conv.reshape(-1)[:] = [field(x) for x in arr.reshape(-1)]
        conv.flags.writeable = False
        self.entries = conv
        self.values = None
        if isinstance(field, PrimeField):
            self.values = np.array([[x.value for x in row] for row in conv], dtype=np.int64).reshape(arr.shape)

    @classmethod
    def from_residues(cls, values: np.ndarray, q: int) -> "SquareMatrix":
        obj = object.__new__(cls)
        values = np.asarray(values, dtype=np.int64) % q
        obj.n = values.shape[0]
        obj.field = PrimeField._known(q)
        ent = np.empty(values.shape, dtype=object)
        ent.reshape(-1)[:] = [PrimeFieldElement._raw(int(v), q) for v in values.reshape(-1)]
        ent.flags.writeable = False
        obj.entries = ent
        obj.values = values
        return obj

    @classmethod
    def identity(cls, n: int, field=QI) -> "SquareMatrix":
        return cls([[field(int(i == j)) for j in range(n)] for i in range(n)], field)

    def __eq__(self, other):
        return isinstance(other, SquareMatrix) and self.field == other.field and np.array_equal(self.entries, other.entries)

    def __repr__(self):
        return f"SquareMatrix(n={self.n}, field={self.field!r})"

    def to_json(self) -> dict:
        doc = {"n": self.n, "entries": [[scalar_to_json(x) for x in row] for row in self.entries]}
        if isinstance(self.field, PrimeField):
            doc["modulus"] = self.field.modulus
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "SquareMatrix":
        modulus = doc.get("modulus")
        field = PrimeField(modulus) if modulus is not None else QI
        return cls([[scalar_from_json(x, modulus) for x in row] for row in doc["entries"]], field)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))


@lru_cache(maxsize=None)
def _permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)


def _check_size(n: int) -> None:
    if n > MAX_BRUTEFORCE_N:
        raise SizeCapExceeded(f"brute-force permanent limited to n <= {MAX_BRUTEFORCE_N}, got {n}")


def permanent_bruteforce(A: SquareMatrix):
    """``sum over permutations s of prod_i A[i, s(i)]`` by explicit enumeration."""
    _check_size(A.n)
    if A.values is not None and A.field.modulus < 1 << 31:
        return permanent_batch([A])[0]
    total = A.field.zero()
    for perm in itertools.permutations(range(A.n)):
        prod = A.field.one()
        for i, j in enumerate(perm):
            prod = prod * A.entries[i, j]
            if not prod:
                break
        total = total + prod
    return total


def permanent_batch(mats: Sequence[SquareMatrix]) -> list:
    """Permanents of equally sized F_q matrices (``q < 2**31``), vectorised over the batch."""
    if not mats:
        return []
    n, q = mats[0].n, mats[0].field.modulus if isinstance(mats[0].field, PrimeField) else None
    if q is None or q >= 1 << 31 or any(m.n != n or m.field != mats[0].field for m in mats):
        return [permanent_bruteforce(m) for m in mats]
    _check_size(n)
    if n == 0:
        return [PrimeFieldElement._raw(1 % q, q) for _ in mats]
    perms = _permutations(n)
    stack = np.stack([m.values for m in mats])  # (B, n, n)
    rows = np.arange(n)
    picked = stack[:, rows[None, :], perms]  # (B, n!, n)
    prod = picked[:, :, 0] % q
    for i in range(1, n):
        prod = prod * picked[:, :, i] % q
    # n! <= 9! terms below 2**31 each: the int64 sum cannot overflow
    totals = prod.sum(axis=1) % q
    return [PrimeFieldElement._raw(int(v), q) for v in totals]


@dataclass(frozen=True)
class LiptonConfig:
    """``k`` defaults to ``4n`` queries per repeat and ``repeats`` to 15."""

    k: int | None = None
    repeats: int = 15

    def resolve(self, n: int, q: int) -> "LiptonConfig":
        k = self.k if self.k is not None else 4 * n
        if k <= n:
            raise ConfigInvalid(f"k = {k} must exceed the degree n = {n}")
        if q - 1 < k:
            raise ConfigInvalid(f"F_{q} has fewer than k = {k} nonzero abscissae")
        if self.repeats < 1:
            raise ConfigInvalid("repeats must be positive")
        return replace(self, k=k)


def line_matrices(A: SquareMatrix, B: SquareMatrix, ts: Sequence[int]) -> list[SquareMatrix]:
    q = A.field.modulus
    return [SquareMatrix.from_residues(A.values + int(t) * B.values, q) for t in ts]


def lipton_reduce(A: SquareMatrix, oracle, cfg: LiptonConfig | None = None, *,
                  rng: np.random.Generator, return_report: bool = False):
    """Recover ``perm(A)`` over F_q from a partly wrong permanent oracle.

    Each repeat draws a uniform ``B`` and ``k`` distinct nonzero ``t``,
    queries ``perm(A + tB)`` (a degree-``n`` polynomial in ``t``), decodes it
    and reads off the value at ``t = 0``.  Repeats are combined by majority.
    """
    if not isinstance(A.field, PrimeField):
        raise ConfigInvalid("the permanent reduction works over F_q")
    q, n = A.field.modulus, A.n
    if q <= n + 1:
        raise ConfigInvalid(f"need q > n + 1, got q = {q}, n = {n}")
    cfg = (cfg or LiptonConfig()).resolve(n, q)
    report = ReductionReport(variant="permanent", k=cfg.k, eps=None, degree=n)
    values = []
    F = A.field
    for _ in range(cfg.repeats):
        B = SquareMatrix.from_residues(rng.integers(0, q, size=(n, n)), q)
        ts = [int(t) for t in rng.choice(np.arange(1, q), size=cfg.k, replace=False)]
        answers = list(oracle(line_matrices(A, B, ts)))
        flags = getattr(oracle, "last_correct", None)
        rec = RepeatRecord(seed=None, points=[F(t) for t in ts], answers=answers,
                           correct=None if flags is None else int(sum(flags)))
        try:
            poly = berlekamp_welch(SampleSet(zip(rec.points, answers)), n)
            rec.recovered, rec.value = poly, poly(0)
        except DecodingFailure as exc:
            rec.error = f"DecodingFailure: {exc}"
        report.repeats.append(rec)
        values.append(rec.value)
    report.value = majority_vote(values, report)
    report.success = True
    return report if return_report else report.value


def random_matrix(n: int, q: int, rng: np.random.Generator) -> SquareMatrix:
    return SquareMatrix.from_residues(rng.integers(0, q, size=(n, n)), q)
