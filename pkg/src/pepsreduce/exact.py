"""Exact scalars and exact linear algebra.

Two fields are supported: the complex rationals Q(i) and prime fields F_q.
Rationals are plain :class:`fractions.Fraction` objects.  A Q(i) element is
stored as ``(a + b*i) / c`` with integers ``a, b`` and a positive common
denominator ``c`` with ``gcd(a, b, c) == 1``; the representation is canonical
so equality is a tuple comparison.
"""
from __future__ import annotations

import math
import numbers
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

from .errors import ConfigInvalid, MixedFieldsError, NonFiniteInput, SingularMatrix

__all__ = [
    "ComplexRational",
    "PrimeFieldElement",
    "FieldScalar",
    "Field",
    "QI",
    "PrimeField",
    "field_of",
    "is_prime",
    "snap_to_dyadic",
    "solve_linear_system",
    "nullspace",
    "format_rational",
    "parse_rational",
    "scalar_to_json",
    "scalar_from_json",
    "lcm_denominator",
]


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class ComplexRational:
    """Element of Q(i)."""

    __slots__ = ("_a", "_b", "_c")

    def __init__(self, re=0, im=0):
        if isinstance(re, ComplexRational) and im == 0:
            self._a, self._b, self._c = re._a, re._b, re._c
            return
        fr = _as_fraction(re)
        fi = _as_fraction(im)
        c = fr.denominator * fi.denominator // math.gcd(fr.denominator, fi.denominator)
        a = fr.numerator * (c // fr.denominator)
        b = fi.numerator * (c // fi.denominator)
        self._a, self._b, self._c = a, b, c

    @classmethod
    def from_parts(cls, a: int, b: int, c: int = 1) -> "ComplexRational":
        """Build ``(a + b*i) / c`` from integers, normalising."""
        if c == 0:
            raise ZeroDivisionError("zero denominator")
        if c < 0:
            a, b, c = -a, -b, -c
        g = math.gcd(a, b, c)
        if g != 1:
            a //= g
            b //= g
            c //= g
        obj = object.__new__(cls)
        obj._a, obj._b, obj._c = a, b, c
        return obj

    # -- accessors -------------------------------------------------------
    @property
    def re(self) -> Fraction:
        return Fraction(self._a, self._c)

    @property
    def im(self) -> Fraction:
        return Fraction(self._b, self._c)

    @property
    def parts(self) -> tuple[int, int, int]:
        """Canonical ``(a, b, c)`` with value ``(a + b*i) / c``."""
        return self._a, self._b, self._c

    def conjugate(self) -> "ComplexRational":
        obj = object.__new__(ComplexRational)
        obj._a, obj._b, obj._c = self._a, -self._b, self._c
        return obj

    def abs2(self) -> Fraction:
        """Squared modulus ``re**2 + im**2``."""
        return Fraction(self._a * self._a + self._b * self._b, self._c * self._c)

    def is_real(self) -> bool:
        return self._b == 0

    # -- arithmetic ------------------------------------------------------
    @staticmethod
    def _coerce(other):
        if isinstance(other, ComplexRational):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            f = _as_fraction(other)
            obj = object.__new__(ComplexRational)
            obj._a, obj._b, obj._c = f.numerator, 0, f.denominator
            return obj
        if isinstance(other, PrimeFieldElement):
            raise MixedFieldsError("cannot combine Q(i) and F_q elements")
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self._c == o._c:
            return ComplexRational.from_parts(self._a + o._a, self._b + o._b, self._c)
        return ComplexRational.from_parts(
            self._a * o._c + o._a * self._c, self._b * o._c + o._b * self._c, self._c * o._c
        )

    __radd__ = __add__

    def __neg__(self):
        obj = object.__new__(ComplexRational)
        obj._a, obj._b, obj._c = -self._a, -self._b, self._c
        return obj

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a1, b1, a2, b2 = self._a, self._b, o._a, o._b
        if b1 == 0 and b2 == 0:
            return ComplexRational.from_parts(a1 * a2, 0, self._c * o._c)
        return ComplexRational.from_parts(a1 * a2 - b1 * b2, a1 * b2 + a2 * b1, self._c * o._c)

    __rmul__ = __mul__

    def inverse(self) -> "ComplexRational":
        n = self._a * self._a + self._b * self._b
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return ComplexRational.from_parts(self._a * self._c, -self._b * self._c, n)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = ComplexRational.from_parts(1, 0, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- comparison / hashing --------------------------------------------
    def __eq__(self, other):
        if isinstance(other, ComplexRational):
            return self._a == other._a and self._b == other._b and self._c == other._c
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._b == 0 and Fraction(self._a, self._c) == other
        if isinstance(other, PrimeFieldElement):
            raise MixedFieldsError("cannot compare Q(i) and F_q elements")
        return NotImplemented

    def __hash__(self):
        if self._b == 0:
            return hash(Fraction(self._a, self._c))
        return hash((self._a, self._b, self._c))

    def __bool__(self):
        return self._a != 0 or self._b != 0

    def __complex__(self):
        return complex(self._a / self._c, self._b / self._c)

    def __repr__(self):
        return f"ComplexRational({self})"

    def __str__(self):
        if self._b == 0:
            return str(self.re)
        return f"{self.re}{'+' if self._b > 0 else '-'}{abs(self.im)}i"

    def __reduce__(self):
        return (ComplexRational.from_parts, (self._a, self._b, self._c))


@lru_cache(maxsize=256)
def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class PrimeFieldElement:
    """Element of F_q for a prime modulus q."""

    __slots__ = ("value", "modulus")

    def __init__(self, value: int, modulus: int):
        if not is_prime(modulus):
            raise ConfigInvalid(f"modulus {modulus} is not prime")
        self.value = value % modulus
        self.modulus = modulus

    @classmethod
    def _raw(cls, value: int, modulus: int) -> "PrimeFieldElement":
        obj = object.__new__(cls)
        obj.value = value
        obj.modulus = modulus
        return obj

    def _other(self, other):
        if isinstance(other, PrimeFieldElement):
            if other.modulus != self.modulus:
                raise MixedFieldsError(f"F_{self.modulus} vs F_{other.modulus}")
            return other.value
        if isinstance(other, int) and not isinstance(other, bool):
            return other % self.modulus
        if isinstance(other, Fraction):
            if other.denominator % self.modulus == 0:
                raise ZeroDivisionError("denominator vanishes mod q")
            return other.numerator * pow(other.denominator, -1, self.modulus) % self.modulus
        if isinstance(other, ComplexRational):
            raise MixedFieldsError("cannot combine F_q and Q(i) elements")
        return None

    def __add__(self, other):
        v = self._other(other)
        if v is None:
            return NotImplemented
        return PrimeFieldElement._raw((self.value + v) % self.modulus, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._other(other)
        if v is None:
            return NotImplemented
        return PrimeFieldElement._raw((self.value - v) % self.modulus, self.modulus)

    def __rsub__(self, other):
        v = self._other(other)
        if v is None:
            return NotImplemented
        return PrimeFieldElement._raw((v - self.value) % self.modulus, self.modulus)

    def __mul__(self, other):
        v = self._other(other)
        if v is None:
            return NotImplemented
        return PrimeFieldElement._raw(self.value * v % self.modulus, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return PrimeFieldElement._raw(-self.value % self.modulus, self.modulus)

    def __pos__(self):
        return self

    def inverse(self) -> "PrimeFieldElement":
        if self.value == 0:
            raise ZeroDivisionError("inverse of zero")
        return PrimeFieldElement._raw(pow(self.value, -1, self.modulus), self.modulus)

    def __truediv__(self, other):
        v = self._other(other)
        if v is None:
            return NotImplemented
        if v == 0:
            raise ZeroDivisionError("division by zero in F_q")
        return PrimeFieldElement._raw(self.value * pow(v, -1, self.modulus) % self.modulus, self.modulus)

    def __rtruediv__(self, other):
        v = self._other(other)
        if v is None:
            return NotImplemented
        return PrimeFieldElement._raw(v, self.modulus) / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        return PrimeFieldElement._raw(pow(self.value, n, self.modulus), self.modulus)

    def conjugate(self) -> "PrimeFieldElement":
        # F_q carries no involution; the norm becomes the bilinear form sum psi^2.
        return self

    def __eq__(self, other):
        if isinstance(other, PrimeFieldElement):
            if other.modulus != self.modulus:
                raise MixedFieldsError(f"F_{self.modulus} vs F_{other.modulus}")
            return self.value == other.value
        if isinstance(other, int) and not isinstance(other, bool):
            return self.value == other % self.modulus
        if isinstance(other, ComplexRational):
            raise MixedFieldsError("cannot compare F_q and Q(i) elements")
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.modulus))

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"PrimeFieldElement({self.value}, {self.modulus})"

    def __str__(self):
        return str(self.value)

    def __reduce__(self):
        return (PrimeFieldElement._raw, (self.value, self.modulus))


FieldScalar = Union[ComplexRational, PrimeFieldElement]


class Field:
    """Descriptor of the field a computation lives in."""

    def zero(self) -> FieldScalar:
        return self(0)

    def one(self) -> FieldScalar:
        return self(1)

    def __call__(self, x) -> FieldScalar:  # pragma: no cover - abstract
        raise NotImplementedError


class _ComplexRationalField(Field):
    name = "QI"

    def __call__(self, x) -> ComplexRational:
        if isinstance(x, ComplexRational):
            return x
        if isinstance(x, PrimeFieldElement):
            raise MixedFieldsError("F_q element where Q(i) expected")
        return ComplexRational(x)

    def __eq__(self, other):
        return isinstance(other, _ComplexRationalField)

    def __hash__(self):
        return hash("QI")

    def __repr__(self):
        return "QI"


QI = _ComplexRationalField()


class PrimeField(Field):
    def __init__(self, modulus: int):
        if not is_prime(modulus):
            raise ConfigInvalid(f"modulus {modulus} is not prime")
        self.modulus = modulus

    @classmethod
    def _known(cls, modulus: int) -> "PrimeField":
        obj = cls.__new__(cls)
        obj.modulus = modulus
        return obj

    def __call__(self, x) -> PrimeFieldElement:
        if isinstance(x, PrimeFieldElement):
            if x.modulus != self.modulus:
                raise MixedFieldsError(f"F_{x.modulus} element where F_{self.modulus} expected")
            return x
        if isinstance(x, ComplexRational):
            raise MixedFieldsError("Q(i) element where F_q expected")
        if isinstance(x, Fraction):
            return PrimeFieldElement._raw(0, self.modulus) + x
        return PrimeFieldElement._raw(int(x) % self.modulus, self.modulus)

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.modulus == self.modulus

    def __hash__(self):
        return hash(("Fq", self.modulus))

    def __repr__(self):
        return f"PrimeField({self.modulus})"


def field_of(values: Iterable) -> Field:
    """Return the single field shared by ``values``; ints and Fractions count as Q(i)."""
    found: Field | None = None
    for v in values:
        f: Field = PrimeField._known(v.modulus) if isinstance(v, PrimeFieldElement) else QI
        if found is None:
            found = f
        elif found != f:
            raise MixedFieldsError(f"values from {found!r} and {f!r}")
    return found if found is not None else QI


def lcm_denominator(values: Iterable[ComplexRational]) -> int:
    den = 1
    for v in values:
        c = v._c
        if den % c:
            den = den * c // math.gcd(den, c)
    return den


# ---------------------------------------------------------------------------
# finite-precision sampling


def snap_to_dyadic(sample: float, bits: int = 53) -> Fraction:
    """Nearest dyadic rational ``m / 2**bits`` to ``sample`` (ties to even ``m``)."""
    if not isinstance(bits, numbers.Integral) or bits < 1:
        raise ConfigInvalid("bits must be a positive integer")
    if not math.isfinite(sample):
        raise NonFiniteInput(f"cannot snap {sample!r}")
    m = round(Fraction(sample) * (1 << bits))
    return Fraction(m, 1 << bits)


# ---------------------------------------------------------------------------
# linear algebra


def _check_single_field(entries) -> Field:
    return field_of(entries)


def _lift_rows_to_integral(rows: list[list], field: Field) -> list[list]:
    """Scale each Q(i) row by the lcm of its denominators (fraction-free setup)."""
    if field != QI:
        return rows
    out = []
    for row in rows:
        den = lcm_denominator(row)
        if den == 1:
            out.append(row)
        else:
            out.append([ComplexRational.from_parts(v._a * (den // v._c), v._b * (den // v._c), 1) for v in row])
    return out


def solve_linear_system(matrix: Sequence[Sequence], rhs: Sequence) -> list:
    """Solve ``matrix @ x == rhs`` exactly by fraction-free (Bareiss) elimination.

    Rows of a Q(i) system are first scaled to Gaussian-integer form so every
    intermediate entry stays a Gaussian integer bounded by a minor of the
    input.  Raises :class:`SingularMatrix` when no unique solution exists.
    """
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ConfigInvalid("matrix must be square")
    if len(rhs) != n:
        raise ConfigInvalid("rhs length does not match matrix")
    if n == 0:
        return []
    flat = [v for row in matrix for v in row] + list(rhs)
    field = _check_single_field(flat)
    rows = [[field(v) for v in row] + [field(b)] for row, b in zip(matrix, rhs)]
    rows = _lift_rows_to_integral(rows, field)
    prev = field.one()
    for k in range(n):
        piv = next((i for i in range(k, n) if rows[i][k]), None)
        if piv is None:
            raise SingularMatrix("matrix is singular")
        if piv != k:
            rows[k], rows[piv] = rows[piv], rows[k]
        rk = rows[k]
        pk = rk[k]
        for i in range(k + 1, n):
            ri = rows[i]
            f = ri[k]
            if f:
                rows[i] = ri[: k + 1] + [(ri[j] * pk - f * rk[j]) / prev for j in range(k + 1, n + 1)]
            else:
                rows[i] = ri[: k + 1] + [ri[j] * pk / prev for j in range(k + 1, n + 1)]
            rows[i][k] = field.zero()
        prev = pk
    x = [field.zero()] * n
    for i in range(n - 1, -1, -1):
        acc = rows[i][n]
        for j in range(i + 1, n):
            if rows[i][j]:
                acc = acc - rows[i][j] * x[j]
        x[i] = acc / rows[i][i]
    return x


def nullspace(matrix: Sequence[Sequence], ncols: int | None = None, field: Field | None = None) -> list[list]:
    """Basis of the right kernel ``{x : matrix @ x == 0}`` over the entries' field.

    Uses the same fraction-free forward sweep as :func:`solve_linear_system`
    followed by back substitution, one basis vector per free column.
    """
    rows = [list(r) for r in matrix]
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    if field is None:
        field = _check_single_field(v for r in rows for v in r) if rows else QI
    rows = [[field(v) for v in r] for r in rows]
    rows = _lift_rows_to_integral(rows, field)
    m = len(rows)
    pivots: list[int] = []
    prev = field.one()
    r = 0
    for col in range(ncols):
        if r == m:
            break
        piv = next((i for i in range(r, m) if rows[i][col]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        rr = rows[r]
        pk = rr[col]
        for i in range(r + 1, m):
            ri = rows[i]
            f = ri[col]
            if f:
                rows[i] = [ri[j] if j < col else (ri[j] * pk - f * rr[j]) / prev for j in range(ncols)]
            else:
                rows[i] = [ri[j] if j < col else ri[j] * pk / prev for j in range(ncols)]
        prev = pk
        pivots.append(col)
        r += 1
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for fcol in free:
        x = [field.zero()] * ncols
        x[fcol] = field.one()
        for i in range(len(pivots) - 1, -1, -1):
            pc = pivots[i]
            acc = field.zero()
            row = rows[i]
            for j in range(pc + 1, ncols):
                if row[j] and x[j]:
                    acc = acc + row[j] * x[j]
            x[pc] = -acc / row[pc]
        basis.append(x)
    return basis


# ---------------------------------------------------------------------------
# serialisation


def format_rational(x) -> str:
    f = _as_fraction(x)
    return f"{f.numerator}/{f.denominator}"


def parse_rational(s: str) -> Fraction:
    s = s.strip()
    if s.startswith("+"):
        s = s[1:]
    return Fraction(s)


def scalar_to_json(x: FieldScalar):
    if isinstance(x, PrimeFieldElement):
        return str(x.value)
    x = ComplexRational(x) if not isinstance(x, ComplexRational) else x
    return {"re": format_rational(x.re), "im": format_rational(x.im)}


def scalar_from_json(obj, modulus: int | None = None) -> FieldScalar:
    if modulus is not None:
        if not isinstance(obj, (str, int)):
            raise ConfigInvalid(f"F_q scalars are decimal strings, got {obj!r}")
        return PrimeFieldElement(int(obj), modulus)
    if isinstance(obj, dict):
        return ComplexRational(parse_rational(obj["re"]), parse_rational(obj.get("im", "0/1")))
    if isinstance(obj, str):
        return ComplexRational(parse_rational(obj))
    if isinstance(obj, int):
        return ComplexRational(obj)
    raise ConfigInvalid(f"cannot decode scalar {obj!r}")
