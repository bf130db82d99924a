"""Word-size modular arithmetic helpers (numpy int64).

Two prime families are used:

* contraction primes ``p < 2**24`` with ``p % 4 == 1``: products stay below
  ``2**48`` so a few thousand of them can be summed in int64 without
  overflow, and ``i`` maps to a square root of ``-1``;
* decoding primes ``p < 2**31`` with ``p % 4 == 1``: one product fits in
  int64, enough for row operations that reduce after every update.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .exact import is_prime

CONTRACTION_PRIME_BITS = 24
DECODING_PRIME_BITS = 31


def _primes_below(limit: int, count: int) -> tuple[int, ...]:
    out = []
    n = limit - 1
    n -= (n - 1) % 4  # n % 4 == 1
    while len(out) < count:
        if is_prime(n):
            out.append(n)
        n -= 4
    return tuple(out)


@lru_cache(maxsize=None)
def contraction_primes(count: int) -> tuple[int, ...]:
    return _primes_below(1 << CONTRACTION_PRIME_BITS, count)


@lru_cache(maxsize=None)
def decoding_primes(count: int = 8) -> tuple[int, ...]:
    return _primes_below(1 << DECODING_PRIME_BITS, count)


@lru_cache(maxsize=None)
def sqrt_minus_one(p: int) -> int:
    if p % 4 != 1:
        raise ValueError(f"{p} has no square root of -1")
    for g in range(2, p):
        if pow(g, (p - 1) // 2, p) == p - 1:
            return pow(g, (p - 1) // 4, p)
    raise AssertionError("unreachable for prime p")


class CRTBasis:
    """Precomputed Chinese-remainder reconstruction for a tuple of primes."""

    def __init__(self, primes: tuple[int, ...]):
        self.primes = primes
        M = 1
        for p in primes:
            M *= p
        self.modulus = M
        coeffs = []
        for p in primes:
            Mi = M // p
            coeffs.append(Mi * pow(Mi % p, -1, p))
        self._coeffs = np.array(coeffs, dtype=object)

    def reconstruct(self, residues: np.ndarray) -> list[int]:
        """Symmetric-range integers from residues shaped ``(len(primes), n)``."""
        res = np.asarray(residues).astype(object)
        total = self._coeffs.dot(res)
        M = self.modulus
        half = M // 2
        out = []
        for v in total:
            v %= M
            out.append(v - M if v > half else v)
        return out


@lru_cache(maxsize=64)
def crt_basis(primes: tuple[int, ...]) -> CRTBasis:
    return CRTBasis(primes)


def residues_of(values, primes: tuple[int, ...]) -> np.ndarray:
    """Reduce arbitrary Python ints modulo every prime.

    Returns an int64 array of shape ``(len(primes),) + values.shape``.  Large
    integers are split into 24-bit limbs so the per-prime work is vectorised.
    """
    vals = np.asarray(values, dtype=object)
    shape = vals.shape
    flat = vals.reshape(-1)
    pr = np.array(primes, dtype=np.int64)
    if flat.size == 0:
        return np.zeros((len(primes),) + shape, dtype=np.int64)
    neg = flat < 0
    mag = np.where(neg, -flat, flat)
    maxbits = max(int(v).bit_length() for v in mag) if flat.size else 0
    nlimbs = max(1, -(-maxbits // 24))
    out = np.zeros((len(primes), flat.size), dtype=np.int64)
    mask = (1 << 24) - 1
    rest = mag
    base = np.ones(len(primes), dtype=np.int64)  # 2**(24 j) mod p
    step = np.array([(1 << 24) % p for p in primes], dtype=np.int64)
    for _ in range(nlimbs):
        limb = (rest & mask).astype(np.int64)
        out = (out + (limb[None, :] % pr[:, None]) * base[:, None]) % pr[:, None]
        rest = rest >> 24
        base = base * step % pr
    out = np.where(neg[None, :], (pr[:, None] - out) % pr[:, None], out)
    return out.reshape((len(primes),) + shape)


def nullspace_mod(matrix: np.ndarray, p: int) -> np.ndarray:
    """Kernel basis of an int64 matrix over F_p (rows of the result), p < 2**31."""
    A = np.array(matrix, dtype=np.int64) % p
    m, n = A.shape
    pivots = []
    r = 0
    for col in range(n):
        if r == m:
            break
        nz = np.nonzero(A[r:, col])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        inv = pow(int(A[r, col]), -1, p)
        A[r] = A[r] * inv % p
        factors = A[:, col].copy()
        factors[r] = 0
        rows = np.nonzero(factors)[0]
        if rows.size:
            A[rows] = (A[rows] - factors[rows, None] * A[r][None, :]) % p
        pivots.append(col)
        r += 1
    pivset = set(pivots)
    free = [c for c in range(n) if c not in pivset]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for idx, f in enumerate(free):
        basis[idx, f] = 1
        for i, pc in enumerate(pivots):
            basis[idx, pc] = (-A[i, f]) % p
    return basis


def polyval_mod(coeffs, xs: np.ndarray, p: int) -> np.ndarray:
    """Evaluate an ascending coefficient list at every entry of ``xs`` mod p."""
    xs = np.asarray(xs, dtype=np.int64)
    acc = np.zeros_like(xs)
    for c in reversed(list(coeffs)):
        acc = (acc * xs + int(c)) % p
    return acc


def polydivmod_mod(num, den, p: int) -> tuple[list[int], list[int]]:
    num = [int(c) % p for c in num]
    den = [int(c) % p for c in den]
    while den and den[-1] == 0:
        den.pop()
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    while num and num[-1] == 0:
        num.pop()
    if len(num) < len(den):
        return [0], num or [0]
    inv = pow(den[-1], -1, p)
    quot = [0] * (len(num) - len(den) + 1)
    rem = list(num)
    for i in range(len(quot) - 1, -1, -1):
        c = rem[i + len(den) - 1] * inv % p
        quot[i] = c
        if c:
            for j, dj in enumerate(den):
                rem[i + j] = (rem[i + j] - c * dj) % p
    rem = rem[: len(den) - 1]
    while rem and rem[-1] == 0:
        rem.pop()
    return quot, rem or [0]
