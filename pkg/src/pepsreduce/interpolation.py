"""Exact polynomial recovery: interpolation, Berlekamp-Welch, rational fits.

All routines work over either Q(i) or F_q.  Decoding over Q(i) first runs
on a modular image (a 31-bit prime with ``i`` sent to a square root of -1),
then lifts each candidate exactly and re-verifies it against the original
samples, so the answer never depends on the modular step being lucky.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._modular import decoding_primes, nullspace_mod, polydivmod_mod, polyval_mod, sqrt_minus_one
from .errors import (
    DecodingFailure,
    DegenerateSystem,
    DuplicateAbscissa,
    InsufficientSamples,
    ZeroDenominatorAtOne,
)
from .exact import QI, Field, PrimeField, field_of, nullspace, scalar_from_json, scalar_to_json


# ---------------------------------------------------------------------------
# polynomials


def _trim(coeffs: list) -> list:
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    return coeffs


class ExactPolynomial:
    """Polynomial with exact coefficients in ascending order.

    Trailing zeros are dropped, so the zero polynomial has no coefficients
    and degree -1.
    """

    __slots__ = ("coeffs", "field")

    def __init__(self, coeffs: Iterable, field: Field | None = None):
        coeffs = list(coeffs)
        if field is None:
            field = field_of(coeffs)
        self.field = field
        self.coeffs = tuple(_trim([field(c) for c in coeffs]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        x = self.field(x)
        acc = self.field.zero()
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __eq__(self, other):
        if not isinstance(other, ExactPolynomial):
            return NotImplemented
        return self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"ExactPolynomial([{', '.join(str(c) for c in self.coeffs)}])"

    def __add__(self, other: "ExactPolynomial") -> "ExactPolynomial":
        a, b = list(self.coeffs), list(other.coeffs)
        n = max(len(a), len(b))
        z = self.field.zero()
        a += [z] * (n - len(a))
        b += [z] * (n - len(b))
        return ExactPolynomial([x + y for x, y in zip(a, b)], self.field)

    def __neg__(self) -> "ExactPolynomial":
        return ExactPolynomial([-c for c in self.coeffs], self.field)

    def __sub__(self, other: "ExactPolynomial") -> "ExactPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "ExactPolynomial":
        if not isinstance(other, ExactPolynomial):
            return ExactPolynomial([c * other for c in self.coeffs], self.field)
        if not self.coeffs or not other.coeffs:
            return ExactPolynomial([], self.field)
        out = [self.field.zero()] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] = out[i + j] + a * b
        return ExactPolynomial(out, self.field)

    __rmul__ = __mul__

    def divmod(self, other: "ExactPolynomial") -> tuple["ExactPolynomial", "ExactPolynomial"]:
        if not other.coeffs:
            raise ZeroDivisionError("division by the zero polynomial")
        rem = list(self.coeffs)
        dv = other.coeffs
        lead_inv = self.field.one() / dv[-1]
        quot = [self.field.zero()] * max(0, len(rem) - len(dv) + 1)
        for i in range(len(quot) - 1, -1, -1):
            c = rem[i + len(dv) - 1] * lead_inv
            quot[i] = c
            if c:
                for j, d in enumerate(dv):
                    rem[i + j] = rem[i + j] - c * d
        return ExactPolynomial(quot, self.field), ExactPolynomial(rem[: len(dv) - 1], self.field)

    def monic(self) -> "ExactPolynomial":
        if not self.coeffs:
            return self
        inv = self.field.one() / self.coeffs[-1]
        return self * inv

    def to_json(self) -> list:
        return [scalar_to_json(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, doc: list, modulus: int | None = None) -> "ExactPolynomial":
        field = PrimeField(modulus) if modulus is not None else QI
        return cls([scalar_from_json(c, modulus) for c in doc], field)


def poly_gcd(a: ExactPolynomial, b: ExactPolynomial) -> ExactPolynomial:
    while b.coeffs:
        a, b = b, a.divmod(b)[1]
    return a.monic()


@dataclass(frozen=True)
class RationalFunction:
    """``numerator / denominator`` with the lowest nonzero denominator coefficient equal to 1."""

    numerator: ExactPolynomial
    denominator: ExactPolynomial
    degeneracy: int = 1

    def __post_init__(self):
        if not self.denominator.coeffs:
            raise DegenerateSystem("denominator is identically zero")

    def __call__(self, x):
        den = self.denominator(x)
        if not den:
            raise ZeroDivisionError(f"denominator vanishes at {x}")
        return self.numerator(x) / den

    def at_one(self):
        den = self.denominator(1)
        if not den:
            raise ZeroDenominatorAtOne("denominator vanishes at t = 1")
        return self.numerator(1) / den

    def to_json(self) -> dict:
        return {"numerator": self.numerator.to_json(), "denominator": self.denominator.to_json(),
                "degeneracy": self.degeneracy}


# ---------------------------------------------------------------------------
# samples


class SampleSet:
    """Pairs ``(t_i, y_i)`` with pairwise-distinct abscissae in one field."""

    __slots__ = ("ts", "ys", "field")

    def __init__(self, points: Iterable[tuple]):
        pts = list(points)
        field = field_of([v for p in pts for v in p])
        self.field = field
        self.ts = tuple(field(t) for t, _ in pts)
        self.ys = tuple(field(y) for _, y in pts)
        if len(set(self.ts)) != len(self.ts):
            raise DuplicateAbscissa("sample abscissae must be pairwise distinct")

    @classmethod
    def from_arrays(cls, ts: Sequence, ys: Sequence) -> "SampleSet":
        if len(ts) != len(ys):
            raise InsufficientSamples("abscissa and value sequences differ in length")
        return cls(zip(ts, ys))

    def __len__(self):
        return len(self.ts)

    @property
    def points(self) -> list[tuple]:
        return list(zip(self.ts, self.ys))

    def subset(self, idx: Iterable[int]) -> "SampleSet":
        return SampleSet((self.ts[i], self.ys[i]) for i in idx)

    def agreement(self, poly: ExactPolynomial) -> int:
        if self.field == QI and all(t.is_real() for t in self.ts):
            return _agreement_real_points(poly, self.ts, self.ys)
        return sum(1 for t, y in zip(self.ts, self.ys) if poly(t) == y)


def _agreement_real_points(poly: ExactPolynomial, ts, ys) -> int:
    """Exact agreement count over Q(i) at real abscissae, in integer arithmetic.

    With ``poly = G / L`` (Gaussian-integer ``G``) and ``t = n / m``,
    ``poly(t) = sum_j G_j n^j m^(deg-j) / (L m^deg)``; equality with
    ``y = (a + b i) / c`` is checked by cross-multiplication.
    """
    if not poly.coeffs:
        return sum(1 for y in ys if not y)
    L = 1
    for c in poly.coeffs:
        L = L * c.parts[2] // math.gcd(L, c.parts[2])
    G = [(c.parts[0] * (L // c.parts[2]), c.parts[1] * (L // c.parts[2])) for c in poly.coeffs]
    deg = len(G) - 1
    count = 0
    for t, y in zip(ts, ys):
        n, m, _ = t.parts[0], t.parts[2], None
        re, im = G[deg]
        mp = 1
        for j in range(deg - 1, -1, -1):
            mp *= m
            re = re * n + G[j][0] * mp
            im = im * n + G[j][1] * mp
        ya, yb, yc = y.parts
        scale = L * mp
        if re * yc == ya * scale and im * yc == yb * scale:
            count += 1
    return count


def _newton(ts: Sequence, ys: Sequence, field: Field) -> ExactPolynomial:
    n = len(ts)
    dd = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) / (ts[i] - ts[i - j])
    # expand the Newton form into monomial coefficients
    coeffs = [field.zero()] * n
    coeffs[0] = dd[n - 1]
    deg = 0
    for i in range(n - 2, -1, -1):
        # coeffs <- coeffs * (x - ts[i]) + dd[i]
        new = [field.zero()] * n
        for j in range(deg, -1, -1):
            new[j + 1] = new[j + 1] + coeffs[j]
            new[j] = new[j] - coeffs[j] * ts[i]
        new[0] = new[0] + dd[i]
        coeffs = new
        deg += 1
    return ExactPolynomial(coeffs, field)


def vandermonde_interpolate(samples: SampleSet, r: int) -> ExactPolynomial:
    """The degree-``<= r`` polynomial through the first ``r + 1`` samples."""
    if r < 0 or len(samples) < r + 1:
        raise InsufficientSamples(f"need {r + 1} samples, have {len(samples)}")
    return _newton(samples.ts[: r + 1], samples.ys[: r + 1], samples.field)


# ---------------------------------------------------------------------------
# Berlekamp-Welch


def promise_threshold(k: int, r: int) -> int:
    """Minimum agreement ``max(r + 1, ceil((k + r) / 2))`` the decoder honours."""
    return max(r + 1, -(-(k + r) // 2))


class _ModBackend:
    """Decoder primitives over F_p in int64, ``p < 2**31``."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray, p: int):
        self.xs, self.ys, self.p = xs, ys, p
        self.k = len(xs)

    def kernel(self, r: int, e: int) -> list:
        p, nq = self.p, r + e + 1
        pw = np.ones((self.k, nq), dtype=np.int64)
        for j in range(1, nq):
            pw[:, j] = pw[:, j - 1] * self.xs % p
        A = np.concatenate([pw, (-self.ys[:, None] * pw[:, : e + 1]) % p], axis=1)
        return list(nullspace_mod(A, p))

    def combine(self, a, v1, b, v2):
        return (a * v1 + b * v2) % self.p

    def candidate(self, vec, r: int, e: int):
        nq = r + e + 1
        quot, rem = polydivmod_mod(vec[:nq], vec[nq:], self.p)
        if rem != [0]:
            return None
        quot = _trim(list(quot))
        if len(quot) > r + 1:
            return None
        return tuple(quot + [0] * (r + 1 - len(quot)))

    def agreement(self, coeffs) -> int:
        return int(np.count_nonzero(polyval_mod(coeffs, self.xs, self.p) == self.ys))

    def locator_values(self, vec, r: int, e: int) -> list[int]:
        return [int(v) for v in polyval_mod(vec[r + e + 1:], self.xs, self.p)]

    def ratio_key(self, a: int, b: int):
        p = self.p
        if b:
            return (1, (-a * pow(b, -1, p)) % p)
        if a:
            return (0, 1)
        return None


class _ExactBackend:
    """Decoder primitives over any :class:`Field` with exact scalars."""

    def __init__(self, samples: SampleSet):
        self.samples = samples
        self.field = samples.field
        self.k = len(samples)

    def kernel(self, r: int, e: int) -> list:
        F = self.field
        rows = []
        for x, y in zip(self.samples.ts, self.samples.ys):
            pw = [F.one()]
            for _ in range(r + e):
                pw.append(pw[-1] * x)
            rows.append(pw + [-(y * pw[j]) for j in range(e + 1)])
        return nullspace(rows, r + 2 * e + 2, field=F)

    def combine(self, a, v1, b, v2):
        return [a * x + b * y for x, y in zip(v1, v2)]

    def candidate(self, vec, r: int, e: int):
        nq = r + e + 1
        Q = ExactPolynomial(vec[:nq], self.field)
        E = ExactPolynomial(vec[nq:], self.field)
        if not E.coeffs:
            return None
        quot, rem = Q.divmod(E)
        if rem.coeffs or quot.degree > r:
            return None
        return quot.coeffs

    def agreement(self, coeffs) -> int:
        return self.samples.agreement(ExactPolynomial(coeffs, self.field))

    def locator_values(self, vec, r: int, e: int) -> list:
        E = ExactPolynomial(vec[r + e + 1:], self.field)
        return [E(x) for x in self.samples.ts]

    def ratio_key(self, a, b):
        if b:
            return (self.field.one(), -a / b)
        if a:
            return (self.field.zero(), self.field.one())
        return None


def _enumerate_candidates(be, r: int) -> list[tuple]:
    """Every degree-``<= r`` polynomial whose agreement reaches the promise threshold.

    The unique-decoding radius ``floor((k - r - 1) / 2)`` is handled by one
    kernel vector.  When ``k - r`` is even the threshold admits one more
    error; a solution with exactly ``(k - r) / 2`` errors then lies in a
    kernel of dimension at most two, and the error locator is found among
    the pencil members vanishing on at least that many sample points.
    """
    k = be.k
    tau = promise_threshold(k, r)
    found: dict[tuple, int] = {}

    def consider(vec, e):
        c = be.candidate(vec, r, e)
        if c is None or c in found:
            return
        ag = be.agreement(c)
        if ag >= tau:
            found[c] = ag

    e_u = (k - r - 1) // 2
    basis = be.kernel(r, e_u)
    if basis:
        consider(basis[0], e_u)
        if any(2 * ag >= k + r + 1 for ag in found.values()):
            return list(found)
    if (k - r) % 2 == 0:
        e_m = (k - r) // 2
        basis = be.kernel(r, e_m)
        if len(basis) == 1:
            consider(basis[0], e_m)
        elif len(basis) == 2:
            v1, v2 = basis
            a_vals = be.locator_values(v1, r, e_m)
            b_vals = be.locator_values(v2, r, e_m)
            groups: dict = {}
            common = 0
            for a, b in zip(a_vals, b_vals):
                key = be.ratio_key(a, b)
                if key is None:
                    common += 1
                else:
                    groups[key] = groups.get(key, 0) + 1
            for (alpha, beta), count in groups.items():
                if count + common >= e_m:
                    consider(be.combine(alpha, v1, beta, v2), e_m)
        # a kernel of dimension >= 3 rules out solutions with exactly e_m errors
    return list(found)


def _unique(cands: list, what: str):
    if not cands:
        raise DecodingFailure(f"no degree-bounded polynomial reaches the agreement threshold ({what})")
    if len(cands) > 1:
        raise DecodingFailure(f"{len(cands)} polynomials reach the agreement threshold ({what})")
    return cands[0]


def _to_mod(x, p: int, s: int) -> int | None:
    a, b, c = x.parts
    if c % p == 0:
        return None
    return (a + s * b) * pow(c, -1, p) % p


def _bw_qi_modular(samples: SampleSet, r: int, max_primes: int = 3) -> ExactPolynomial | None:
    """Decode via modular images; ``None`` means fall back to exact decoding."""
    k = len(samples)
    tau = promise_threshold(k, r)
    tried = 0
    for p in decoding_primes(8):
        if tried == max_primes:
            break
        s = sqrt_minus_one(p)
        xs = [_to_mod(t, p, s) for t in samples.ts]
        ys = [_to_mod(y, p, s) for y in samples.ys]
        if None in xs or None in ys or len(set(xs)) != k:
            continue
        tried += 1
        xs_a = np.array(xs, dtype=np.int64)
        ys_a = np.array(ys, dtype=np.int64)
        be = _ModBackend(xs_a, ys_a, p)
        cands = _enumerate_candidates(be, r)
        if not cands:
            # an exact solution would survive reduction mod p
            raise DecodingFailure("no degree-bounded polynomial reaches the agreement threshold")
        lifts: dict[tuple, int] = {}
        complete = True
        for c in cands:
            agree = np.nonzero(polyval_mod(c, xs_a, p) == ys_a)[0][: r + 1]
            g = _newton([samples.ts[i] for i in agree], [samples.ys[i] for i in agree], QI)
            ag = samples.agreement(g) if g.degree <= r else 0
            if ag >= tau:
                lifts[g.coeffs] = ag
            else:
                complete = False
        if complete:
            return ExactPolynomial(_unique(list(lifts), "modular image"), QI)
        strong = [c for c, ag in lifts.items() if 2 * ag >= k + r + 1]
        if strong:
            return ExactPolynomial(strong[0], QI)
    return None


def berlekamp_welch(samples: SampleSet, r: int) -> ExactPolynomial:
    """Recover the degree-``<= r`` polynomial agreeing with at least
    ``promise_threshold(k, r)`` of the ``k`` samples.

    Raises :class:`DecodingFailure` when no such polynomial exists or when
    more than one does (possible only at the boundary ``e = (k - r) / 2``).
    """
    k = len(samples)
    if r < 0 or k <= r:
        raise InsufficientSamples(f"need more than {r} samples, have {k}")
    field = samples.field
    if isinstance(field, PrimeField) and field.modulus < 1 << 31:
        p = field.modulus
        xs = np.array([t.value for t in samples.ts], dtype=np.int64)
        ys = np.array([y.value for y in samples.ys], dtype=np.int64)
        c = _unique(_enumerate_candidates(_ModBackend(xs, ys, p), r), f"F_{p}")
        return ExactPolynomial([int(v) for v in c], field)
    if field == QI:
        poly = _bw_qi_modular(samples, r)
        if poly is not None:
            return poly
    return ExactPolynomial(_unique(_enumerate_candidates(_ExactBackend(samples), r), "exact"), field)


def berlekamp_welch_exact(samples: SampleSet, r: int) -> ExactPolynomial:
    """Same contract as :func:`berlekamp_welch` using exact arithmetic only (slow)."""
    if len(samples) <= r:
        raise InsufficientSamples(f"need more than {r} samples, have {len(samples)}")
    return ExactPolynomial(_unique(_enumerate_candidates(_ExactBackend(samples), r), "exact"), samples.field)


# ---------------------------------------------------------------------------
# rational functions


def reconstruct_rational(samples: SampleSet, r: int) -> RationalFunction:
    """Fit ``q / p`` with ``deg q, deg p <= r`` through exact samples.

    Solves ``q(t_i) - y_i p(t_i) = 0``, cancels common factors and fixes the
    lowest nonzero denominator coefficient to 1.  The kernel dimension is
    reported as ``degeneracy``.
    """
    k = len(samples)
    if k < 2 * r + 1:
        raise InsufficientSamples(f"need {2 * r + 1} samples, have {k}")
    F = samples.field
    rows = []
    for t, y in zip(samples.ts, samples.ys):
        pw = [F.one()]
        for _ in range(r):
            pw.append(pw[-1] * t)
        rows.append(pw + [-(y * c) for c in pw])
    basis = nullspace(rows, 2 * r + 2, field=F)
    if not basis:
        raise DegenerateSystem("no rational function of the given degree fits the samples")
    vec = basis[0]
    q = ExactPolynomial(vec[: r + 1], F)
    p = ExactPolynomial(vec[r + 1:], F)
    if not p.coeffs:
        raise DegenerateSystem("the fitted denominator is identically zero")
    g = poly_gcd(q, p) if q.coeffs else p.monic()
    if g.degree > 0:
        q, rem_q = q.divmod(g)
        p, rem_p = p.divmod(g)
        assert not rem_q.coeffs and not rem_p.coeffs
    lead = next(c for c in p.coeffs if c)
    inv = F.one() / lead
    return RationalFunction(q * inv, p * inv, degeneracy=len(basis))
