"""PEPS / MPS data model and its JSON form.

Vertex ``v = row * width + col`` with row 0 at the top.  A vertex tensor has
shape ``(d,) + (D,) * deg(v)`` with virtual legs ordered up, right, down,
left, absent legs skipped.  The ordering is part of the on-disk format.

Over Q(i) the tensors are held as Gaussian-integer numerator arrays sharing a
single positive denominator, which keeps blending and modular reduction
cheap; :attr:`PepsData.tensors` gives the field-scalar view.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigInvalid, ShapeMismatch, SupportOutOfRange
from .exact import (
    QI,
    ComplexRational,
    Field,
    PrimeField,
    PrimeFieldElement,
    field_of,
    scalar_from_json,
    scalar_to_json,
)

UP, RIGHT, DOWN, LEFT = range(4)
LEG_NAMES = ("up", "right", "down", "left")


@dataclass(frozen=True)
class LatticeSpec:
    """Open-boundary ``width x height`` square lattice."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigInvalid("lattice dimensions must be positive")

    @property
    def N(self) -> int:
        return self.width * self.height

    def coords(self, v: int) -> tuple[int, int]:
        return divmod(v, self.width)

    def neighbor(self, v: int, leg: int) -> int | None:
        row, col = self.coords(v)
        if leg == UP:
            return v - self.width if row > 0 else None
        if leg == RIGHT:
            return v + 1 if col < self.width - 1 else None
        if leg == DOWN:
            return v + self.width if row < self.height - 1 else None
        return v - 1 if col > 0 else None

    def legs(self, v: int) -> tuple[int, ...]:
        """Present legs of ``v`` in normative order."""
        return tuple(leg for leg in range(4) if self.neighbor(v, leg) is not None)

    def degree(self, v: int) -> int:
        return len(self.legs(v))

    @property
    def edges(self) -> list[tuple[int, int]]:
        out = []
        for v in range(self.N):
            for leg in (RIGHT, DOWN):
                w = self.neighbor(v, leg)
                if w is not None:
                    out.append((v, w))
        return out

    def tensor_shape(self, v: int, d: int, D: int) -> tuple[int, ...]:
        return (d,) + (D,) * self.degree(v)


def _object_array(data, shape) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    flat = list(np.asarray(data, dtype=object).reshape(-1))
    if len(flat) != arr.size:
        raise ShapeMismatch(f"expected {arr.size} entries for shape {shape}, got {len(flat)}")
    arr.reshape(-1)[:] = flat
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class PepsData:
    """Per-vertex tensors ``P^[v]`` on a square lattice (the PEPS specification).

    Parameters
    ----------
    lattice, d, D
        Geometry, physical and bond dimension.
    tensors
        One array-like per vertex of shape ``(d,) + (D,)*deg(v)`` holding
        field scalars (ints and Fractions are read as Q(i)).
    translation_invariant
        Declares that tensors of equal degree are identical; checked.
    """

    __slots__ = ("lattice", "d", "D", "field", "translation_invariant", "_re", "_im", "_den", "__dict__")

    def __init__(self, lattice: LatticeSpec, d: int, D: int, tensors: Sequence, translation_invariant: bool = False):
        if d < 1 or D < 1:
            raise ConfigInvalid("d and D must be positive")
        if len(tensors) != lattice.N:
            raise ShapeMismatch(f"need {lattice.N} tensors, got {len(tensors)}")
        arrays = [_object_array(t, lattice.tensor_shape(v, d, D)) for v, t in enumerate(tensors)]
        field = field_of(x for a in arrays for x in a.reshape(-1))
        if isinstance(field, PrimeField):
            q = field.modulus
            re = [_frozen(np.vectorize(lambda x: field(x).value, otypes=[object])(a)) for a in arrays]
            self._init(lattice, d, D, field, re, None, 1, translation_invariant)
        else:
            vals = [np.vectorize(QI, otypes=[object])(a) for a in arrays]
            den = 1
            for a in vals:
                for x in a.reshape(-1):
                    c = x.parts[2]
                    if den % c:
                        den = den * c // math.gcd(den, c)
            re = [_frozen(np.vectorize(lambda x: x.parts[0] * (den // x.parts[2]), otypes=[object])(a)) for a in vals]
            im = [_frozen(np.vectorize(lambda x: x.parts[1] * (den // x.parts[2]), otypes=[object])(a)) for a in vals]
            self._init(lattice, d, D, field, re, im, den, translation_invariant)

    def _init(self, lattice, d, D, field, re, im, den, translation_invariant):
        self.lattice = lattice
        self.d = d
        self.D = D
        self.field = field
        self._re = tuple(re)
        self._im = None if im is None else tuple(im)
        self._den = den
        self.translation_invariant = bool(translation_invariant)
        if self.translation_invariant and not self._check_translation_invariance():
            raise ConfigInvalid("tensors of equal degree differ; data is not translation-invariant")

    @classmethod
    def from_scaled(cls, lattice, d, D, re, im, den, translation_invariant=False, field: Field = QI) -> "PepsData":
        """Build from integer numerator arrays over a shared denominator.

        For F_q data pass residues in ``re``, ``im=None`` and ``den=1``.
        """
        obj = object.__new__(cls)
        if field == QI:
            g = math.gcd(den, *(int(x) for arr in list(re) + list(im) for x in arr.reshape(-1)))
            if g > 1:
                re = [a // g for a in re]
                im = [a // g for a in im]
                den //= g
            re = [_frozen(np.asarray(a, dtype=object)) for a in re]
            im = [_frozen(np.asarray(a, dtype=object)) for a in im]
        else:
            re = [_frozen(np.asarray(a, dtype=object) % field.modulus) for a in re]
            im = None
            den = 1
        for v, a in enumerate(re):
            if a.shape != lattice.tensor_shape(v, d, D):
                raise ShapeMismatch(f"vertex {v}: shape {a.shape}")
        obj._init(lattice, d, D, field, re, im, den, translation_invariant)
        return obj

    # -- views -------------------------------------------------------------
    @property
    def N(self) -> int:
        return self.lattice.N

    @property
    def denominator(self) -> int:
        return self._den

    @property
    def scaled(self) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...] | None, int]:
        """``(re_numerators, im_numerators, denominator)``; ``im`` is None over F_q."""
        return self._re, self._im, self._den

    @cached_property
    def tensors(self) -> tuple[np.ndarray, ...]:
        out = []
        if self.field == QI:
            den = self._den
            for re, im in zip(self._re, self._im):
                arr = np.empty(re.shape, dtype=object)
                flat = arr.reshape(-1)
                for i, (a, b) in enumerate(zip(re.reshape(-1), im.reshape(-1))):
                    flat[i] = ComplexRational.from_parts(a, b, den)
                out.append(_frozen(arr))
        else:
            q = self.field.modulus
            for re in self._re:
                arr = np.empty(re.shape, dtype=object)
                flat = arr.reshape(-1)
                for i, a in enumerate(re.reshape(-1)):
                    flat[i] = PrimeFieldElement._raw(int(a), q)
                out.append(_frozen(arr))
        return tuple(out)

    def tensor(self, v: int) -> np.ndarray:
        return self.tensors[v]

    def same_shape(self, other: "PepsData") -> bool:
        return (self.lattice, self.d, self.D, self.field) == (other.lattice, other.d, other.D, other.field)

    def max_entry_magnitude(self) -> int:
        """Bound ``max |a| + |b|`` over the Gaussian-integer numerators."""
        m = 0
        for i, re in enumerate(self._re):
            im = self._im[i] if self._im is not None else None
            for j, a in enumerate(re.reshape(-1)):
                s = abs(a) + (abs(im.reshape(-1)[j]) if im is not None else 0)
                if s > m:
                    m = s
        return m

    # -- vector-space structure -------------------------------------------
    def combine(self, a, other: "PepsData", b) -> "PepsData":
        """Exact ``a * self + b * other`` (vertex-wise)."""
        if not self.same_shape(other):
            raise ShapeMismatch("PEPS data of different shape")
        ti = self.translation_invariant and other.translation_invariant
        if self.field != QI:
            F = self.field
            av, bv = F(a).value, F(b).value
            re = [(av * x + bv * y) for x, y in zip(self._re, other._re)]
            return PepsData.from_scaled(self.lattice, self.d, self.D, re, None, 1, ti, field=F)
        a = QI(a)
        b = QI(b)
        aa, ab, ac = a.parts
        ba, bb, bc = b.parts
        L1, L2 = self._den, other._den
        # (aa + i ab)/ac * (X + iY)/L1 + (ba + i bb)/bc * (U + iV)/L2
        f1 = bc * L2
        f2 = ac * L1
        re, im = [], []
        for X, Y, U, V in zip(self._re, self._im, other._re, other._im):
            if ab == 0 and bb == 0:
                re.append((aa * f1) * X + (ba * f2) * U)
                im.append((aa * f1) * Y + (ba * f2) * V)
            else:
                re.append(f1 * (aa * X - ab * Y) + f2 * (ba * U - bb * V))
                im.append(f1 * (aa * Y + ab * X) + f2 * (ba * V + bb * U))
        return PepsData.from_scaled(self.lattice, self.d, self.D, re, im, ac * bc * L1 * L2, ti)

    def __add__(self, other: "PepsData") -> "PepsData":
        return self.combine(1, other, 1)

    def scale(self, lam) -> "PepsData":
        return self.combine(lam, self, 0)

    def scale_vertex(self, v: int, lam) -> "PepsData":
        """Copy with only vertex ``v`` multiplied by ``lam`` (breaks invariance flag)."""
        tensors = [t for t in self.tensors]
        tensors[v] = np.vectorize(lambda x: x * lam, otypes=[object])(tensors[v])
        return PepsData(self.lattice, self.d, self.D, tensors)

    # -- invariance ---------------------------------------------------------
    def _check_translation_invariance(self) -> bool:
        by_degree: dict[int, int] = {}
        for v in range(self.N):
            deg = self.lattice.degree(v)
            if deg not in by_degree:
                by_degree[deg] = v
                continue
            w = by_degree[deg]
            if not np.array_equal(self._re[v], self._re[w]):
                return False
            if self._im is not None and not np.array_equal(self._im[v], self._im[w]):
                return False
        return True

    def is_translation_invariant(self) -> bool:
        return self._check_translation_invariance()

    def __eq__(self, other):
        if not isinstance(other, PepsData) or not self.same_shape(other):
            return False
        return all(np.array_equal(x, y) for x, y in zip(self.tensors, other.tensors))

    def __hash__(self):  # pragma: no cover - identity semantics not needed
        return id(self)

    def __repr__(self):
        return (
            f"PepsData({self.lattice.width}x{self.lattice.height}, d={self.d}, D={self.D}, "
            f"field={self.field!r}, ti={self.translation_invariant})"
        )

    def __reduce__(self):
        return (
            PepsData.from_scaled,
            (self.lattice, self.d, self.D, list(self._re), None if self._im is None else list(self._im),
             self._den, self.translation_invariant, self.field),
        )

    # -- JSON ---------------------------------------------------------------
    def to_json(self) -> dict:
        doc = {
            "lattice": {"width": self.lattice.width, "height": self.lattice.height},
            "d": self.d,
            "D": self.D,
            "translation_invariant": self.translation_invariant,
            "tensors": [[scalar_to_json(x) for x in t.reshape(-1)] for t in self.tensors],
        }
        if isinstance(self.field, PrimeField):
            doc["modulus"] = self.field.modulus
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "PepsData":
        try:
            lattice = LatticeSpec(int(doc["lattice"]["width"]), int(doc["lattice"]["height"]))
            d, D = int(doc["d"]), int(doc["D"])
            modulus = doc.get("modulus")
            tensors = []
            for v, flat in enumerate(doc["tensors"]):
                vals = [scalar_from_json(x, modulus) for x in flat]
                tensors.append(_object_array(vals, lattice.tensor_shape(v, d, D)))
            return cls(lattice, d, D, tensors, bool(doc.get("translation_invariant", False)))
        except (KeyError, TypeError) as exc:
            raise ConfigInvalid(f"malformed PEPS document: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path) -> "PepsData":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class LocalObservable:
    """Operator on one or two sites.

    ``matrix[out, in]`` with the first support site as the most significant
    digit of the combined index.
    """

    support: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        support = tuple(int(s) for s in self.support)
        object.__setattr__(self, "support", support)
        if not 1 <= len(support) <= 2:
            raise ConfigInvalid("support must have one or two sites")
        if len(set(support)) != len(support):
            raise ConfigInvalid("support sites must be distinct")
        m = np.asarray(self.matrix, dtype=object)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigInvalid("observable matrix must be square")
        object.__setattr__(self, "matrix", _frozen(np.array(m, dtype=object)))

    def check_against(self, peps: PepsData) -> None:
        if any(s < 0 or s >= peps.N for s in self.support):
            raise SupportOutOfRange(f"support {self.support} outside {peps.N}-site lattice")
        if self.matrix.shape[0] != peps.d ** len(self.support):
            raise ShapeMismatch("observable dimension does not match d")

    @classmethod
    def identity(cls, site: int, d: int) -> "LocalObservable":
        m = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                m[i, j] = ComplexRational(1 if i == j else 0)
        return cls((site,), m)

    def to_json(self) -> dict:
        return {"support": list(self.support), "matrix": [[scalar_to_json(x) for x in row] for row in self.matrix]}

    @classmethod
    def from_json(cls, doc: dict, modulus: int | None = None) -> "LocalObservable":
        m = [[scalar_from_json(x, modulus) for x in row] for row in doc["matrix"]]
        return cls(tuple(doc["support"]), np.array(m, dtype=object))


@dataclass(frozen=True)
class MpsData:
    """Open-boundary translation-invariant MPS with boundary vectors ``|0>``.

    ``matrices[s]`` is the ``D x D`` matrix attached to physical state ``s``.
    """

    n_sites: int
    matrices: tuple

    def __post_init__(self):
        if self.n_sites < 1:
            raise ConfigInvalid("chain length must be positive")
        mats = tuple(np.array(m, dtype=object) for m in self.matrices)
        if not mats:
            raise ConfigInvalid("need at least one matrix")
        D = mats[0].shape[0]
        for m in mats:
            if m.shape != (D, D):
                raise ShapeMismatch("MPS matrices must be square and of equal size")
        object.__setattr__(self, "matrices", tuple(_frozen(np.vectorize(QI, otypes=[object])(m)) for m in mats))

    @property
    def d(self) -> int:
        return len(self.matrices)

    @property
    def D(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def N(self) -> int:
        return self.n_sites

    @property
    def A0(self) -> np.ndarray:
        return self.matrices[0]

    @property
    def A1(self) -> np.ndarray:
        return self.matrices[1]

    def to_peps(self) -> PepsData:
        """The equivalent ``N x 1`` horizontal chain, boundary legs fixed to index 0."""
        N, d, D = self.n_sites, self.d, self.D
        lattice = LatticeSpec(N, 1)
        tensors = []
        for v in range(N):
            legs = lattice.legs(v)
            t = np.empty(lattice.tensor_shape(v, d, D), dtype=object)
            for s in range(d):
                A = self.matrices[s]
                if not legs:
                    t[s] = A[0, 0]
                elif legs == (RIGHT,):
                    t[s] = A[0, :]
                elif legs == (LEFT,):
                    t[s] = A[:, 0]
                else:  # (right, left): A[left, right]
                    t[s] = A.T
            tensors.append(t)
        return PepsData(lattice, d, D, tensors)


def product_state_mps(n_sites: int) -> MpsData:
    """A[0] = diag(1, 0), A[1] = diag(0, 1): the state |0...0> with unit norm."""
    one, zero = ComplexRational(1), ComplexRational(0)
    return MpsData(n_sites, ([[one, zero], [zero, zero]], [[zero, zero], [zero, one]]))


def eta_family_mps(n_sites: int, eta) -> MpsData:
    """B[0] = diag(1, 0), B[1] = diag(eta, 1): norm (1 + eta**2)**N."""
    one, zero, e = ComplexRational(1), ComplexRational(0), QI(eta)
    return MpsData(n_sites, ([[one, zero], [zero, zero]], [[e, zero], [zero, one]]))


def build_cluster_peps(lattice: LatticeSpec) -> PepsData:
    """Cluster state (CZ on ``|+>`` states, unnormalised) as a D = 2 PEPS.

    For an edge from ``u`` (left/up) to ``w`` (right/down), ``u`` copies its
    physical bit onto the bond and ``w`` applies the phase ``(-1)**(bond*s)``;
    summing the bond gives the CZ phase ``(-1)**(s_u s_w)``.
    """
    d = D = 2
    tensors = []
    for v in range(lattice.N):
        legs = lattice.legs(v)
        t = np.empty(lattice.tensor_shape(v, d, D), dtype=object)
        for idx in np.ndindex(t.shape):
            s, bonds = idx[0], idx[1:]
            val = 1
            for leg, b in zip(legs, bonds):
                if leg in (RIGHT, DOWN):
                    if b != s:
                        val = 0
                elif b and s:
                    val = -val
            t[idx] = ComplexRational(val)
        tensors.append(t)
    return PepsData(lattice, d, D, tensors)


def gaussian_integer_parts(values) -> tuple[list[int], list[int], int]:
    """Common-denominator numerators of a sequence of Q(i) scalars."""
    vals = [QI(v) for v in values]
    den = reduce(lambda acc, c: acc * c // math.gcd(acc, c), (v.parts[2] for v in vals), 1)
    return [v.parts[0] * (den // v.parts[2]) for v in vals], [v.parts[1] * (den // v.parts[2]) for v in vals], den


def as_fraction(x) -> Fraction:
    return Fraction(x)
