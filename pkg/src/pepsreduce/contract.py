"""Exact contraction of the doubled network ``<psi|O|psi>``.

Two engines share the same row-by-row transfer schedule:

``modular``
    Tensors are scaled to Gaussian integers, reduced modulo several word-size
    primes ``p = 1 (mod 4)`` and contracted in int64 with ``i`` mapped to a
    square root of ``-1``.  Evaluating at both roots separates the real and
    imaginary parts, and the exact value comes back by Chinese remaindering
    against an a-priori magnitude bound.  Batches of instances are contracted
    together.
``object``
    Plain einsum over field-scalar object arrays.  Slow; kept as a reference.

Both cap the shorter lattice side (the transfer width) at ``width_cap``.
"""
from __future__ import annotations

import math
import string
from typing import Sequence

import numpy as np

from ._modular import contraction_primes, crt_basis, residues_of, sqrt_minus_one
from .errors import ConfigInvalid, ShapeMismatch, SizeCapExceeded, ZeroNorm
from .exact import QI, ComplexRational, PrimeField, PrimeFieldElement
from .peps import LatticeSpec, LocalObservable, MpsData, PepsData

DEFAULT_WIDTH_CAP = 6
DEFAULT_STATE_CAP = 1 << 22
_LETTERS = "abcdefghijklmn"  # transfer-boundary legs; 'w', 'y', 'z' are reserved below
_MAX_WIDTH = len(_LETTERS)


# ---------------------------------------------------------------------------
# geometry


def _padded(arr: np.ndarray, lattice: LatticeSpec, v: int) -> np.ndarray:
    """Reshape to ``(d, up, right, down, left)`` with absent legs of size 1."""
    legs = lattice.legs(v)
    dims = iter(arr.shape[1:])
    shape = [arr.shape[0]] + [next(dims) if leg in legs else 1 for leg in range(4)]
    return arr.reshape(shape)


def _orientation(lattice: LatticeSpec, width_cap: int):
    """Pick the orientation whose rows are the shorter side.

    Returns ``(transposed, working_lattice, old_vertex_of)``.
    """
    if width_cap > _MAX_WIDTH:
        raise ConfigInvalid(f"width_cap above {_MAX_WIDTH} is not supported")
    if min(lattice.width, lattice.height) > width_cap:
        raise SizeCapExceeded(
            f"lattice {lattice.width}x{lattice.height} exceeds the transfer width cap {width_cap}"
        )
    if lattice.width <= lattice.height:
        return False, lattice, list(range(lattice.N))
    work = LatticeSpec(lattice.height, lattice.width)
    old = [(v % work.width) * lattice.width + v // work.width for v in range(lattice.N)]
    return True, work, old


def _oriented_tensor(arr, lattice, v, transposed):
    t = _padded(arr, lattice, v)
    # a transpose swaps up<->left and right<->down
    return t.transpose(0, 4, 3, 2, 1) if transposed else t


def _transfer_subscripts(width: int, col: int) -> str:
    xs = _LETTERS[:width]
    out = xs[:col] + "w" + xs[col + 1:]
    return f"PJ{xs}z,PJ{xs[col]}ywz->PJ{out}y"


# ---------------------------------------------------------------------------
# observables as single-site insertions


def _insertion_terms(obs: LocalObservable | None, d: int) -> list[dict[int, np.ndarray]]:
    """Write ``obs`` as a sum of products of single-site operators."""
    if obs is None:
        return [{}]
    m = obs.matrix
    if not isinstance(m.reshape(-1)[0], PrimeFieldElement):
        m = np.vectorize(QI, otypes=[object])(m)
    if len(obs.support) == 1:
        return [{obs.support[0]: m}]
    u, v = obs.support
    m4 = m.reshape(d, d, d, d)  # [out_u, out_v, in_u, in_v]
    zero = m4.reshape(-1)[0] * 0
    terms = []
    for i in range(d):
        for j in range(d):
            Y = m4[i, :, j, :]
            if not any(Y.reshape(-1)):
                continue
            X = np.full((d, d), zero, dtype=object)
            X[i, j] = zero + 1
            terms.append({u: X, v: np.array(Y, dtype=object)})
    return terms or [{u: np.full((d, d), zero, dtype=object)}]


# ---------------------------------------------------------------------------
# modular engine


def _scaled_operator(op: np.ndarray):
    """Gaussian-integer numerators and denominator of an operator matrix."""
    vals = [QI(x) for x in op.reshape(-1)]
    den = 1
    for x in vals:
        c = x.parts[2]
        den = den * c // math.gcd(den, c)
    re = np.array([x.parts[0] * (den // x.parts[2]) for x in vals], dtype=object).reshape(op.shape)
    im = np.array([x.parts[1] * (den // x.parts[2]) for x in vals], dtype=object).reshape(op.shape)
    return re, im, den


def _modular_values(batch: Sequence[PepsData], jobs: list[tuple[int, dict]], width_cap: int) -> list:
    """Exact ``<psi_b| prod_v O_v |psi_b>`` for every job ``(b, {v: O_v})``."""
    first = batch[0]
    lattice, d, D, field = first.lattice, first.d, first.D, first.field
    if D ** 4 >= 1 << 14 or d >= 1 << 14:
        raise SizeCapExceeded("bond or physical dimension too large for the int64 engine")
    transposed, work, old_of = _orientation(lattice, width_cap)
    N = lattice.N
    J = len(jobs)
    jidx = np.array([b for b, _ in jobs], dtype=np.intp)
    over_q = isinstance(field, PrimeField)

    if over_q:
        primes = (field.modulus,)
        need_imag = False
        dens = [1] * J
    else:
        M = max(p.max_entry_magnitude() for p in batch) or 1
        ops_scaled = []
        op_bound = 1
        for _, ops in jobs:
            sc = {v: _scaled_operator(o) for v, o in ops.items()}
            ops_scaled.append(sc)
            mo = 1
            for re, im, _ in sc.values():
                mo *= max(abs(a) + abs(b) for a, b in zip(re.reshape(-1), im.reshape(-1))) or 1
            op_bound = max(op_bound, mo)
        bound = (d * M) ** (2 * N) * D ** (2 * len(lattice.edges)) * op_bound
        count = 1
        while True:
            primes = contraction_primes(count)
            if math.prod(primes) > 2 * bound + 1:
                break
            count += 1
        need_imag = any(ops for _, ops in jobs)
        dens = []
        for (b, _), sc in zip(jobs, ops_scaled):
            den = batch[b].denominator ** (2 * N)
            for _, _, c in sc.values():
                den *= c
            dens.append(den)

    P = len(primes)
    pr = np.array(primes, dtype=np.int64)
    if over_q:
        roots = np.zeros(P, dtype=np.int64)
    else:
        roots = np.array([sqrt_minus_one(p) for p in primes], dtype=np.int64)
    if need_imag:
        pr = np.concatenate([pr, pr])
        roots = np.concatenate([roots, (pr[:P] - roots) % pr[:P]])
    PP = len(pr)

    def bcast(a, nd):
        return a.reshape((PP,) + (1,) * nd)

    def ket_bra(re_list, im_list):
        """Residues of ket (phi_s) and bra (conjugated) for stacked arrays."""
        re = residues_of(re_list, primes)
        if need_imag:
            re = np.concatenate([re, re])
        if im_list is None:
            return re, re
        im = residues_of(im_list, primes)
        if need_imag:
            im = np.concatenate([im, im])
        nd = re.ndim - 1
        s = bcast(roots, nd)
        p = bcast(pr, nd)
        sim = s * im % p
        return (re + sim) % p, (re - sim) % p

    # per-vertex op arrays (J, d, d), identity where a job has no insertion there
    op_vertices = sorted({v for _, ops in jobs for v in ops})
    op_res = {}
    for v in op_vertices:
        re = np.empty((J, d, d), dtype=object)
        im = np.empty((J, d, d), dtype=object)
        for j, (_, ops) in enumerate(jobs):
            if v in ops:
                if over_q:
                    re[j] = np.vectorize(lambda x: field(x).value, otypes=[object])(ops[v])
                    im[j] = 0
                else:
                    a, b, _ = ops_scaled[j][v]
                    re[j], im[j] = a, b
            else:
                re[j] = np.eye(d, dtype=np.int64).astype(object)
                im[j] = 0
        op_res[v] = ket_bra(re, None if over_q else im)[0]

    S = np.ones((PP, J) + (1,) * (work.width + 1), dtype=np.int64)
    for v_new in range(N):
        v = old_of[v_new]
        re = np.stack([_oriented_tensor(p.scaled[0][v], lattice, v, transposed) for p in batch])
        im = None if over_q else np.stack(
            [_oriented_tensor(p.scaled[1][v], lattice, v, transposed) for p in batch]
        )
        ket, bra = ket_bra(re, im)
        ket = ket[:, jidx]
        bra = bra[:, jidx]
        p6 = bcast(pr, 6)
        if v in op_res:
            ket = np.einsum("PJts,PJsurdl->PJturdl", op_res[v], ket) % p6
        T = np.einsum("PJturdl,PJtURDL->PJuUrRdDlL", ket, bra) % bcast(pr, 9)
        sh = T.shape
        T = T.reshape(PP, J, sh[2] * sh[3], sh[4] * sh[5], sh[6] * sh[7], sh[8] * sh[9])
        col = v_new % work.width
        S = np.einsum(_transfer_subscripts(work.width, col), S, T) % bcast(pr, work.width + 2)

    res = S.reshape(PP, J)
    if over_q:
        return [PrimeFieldElement._raw(int(x), field.modulus) for x in res[0]]
    basis = crt_basis(primes)
    if need_imag:
        p1 = pr[:P, None]
        plus, minus = res[:P], res[P:]
        inv2 = np.array([pow(2, -1, p) for p in primes], dtype=np.int64)[:, None]
        inv2s = np.array([pow(2 * int(s), -1, p) for s, p in zip(roots[:P], primes)], dtype=np.int64)[:, None]
        re_res = (plus + minus) % p1 * inv2 % p1
        im_res = (plus - minus) % p1 * inv2s % p1
        re_int = basis.reconstruct(re_res)
        im_int = basis.reconstruct(im_res)
    else:
        re_int = basis.reconstruct(res)
        im_int = [0] * J
    return [ComplexRational.from_parts(a, b, c) for a, b, c in zip(re_int, im_int, dens)]


# ---------------------------------------------------------------------------
# object engine


def _object_value(peps: PepsData, ops: dict, width_cap: int):
    transposed, work, old_of = _orientation(peps.lattice, width_cap)
    conj = np.vectorize(lambda x: x.conjugate(), otypes=[object])
    one = peps.field.one()
    S = np.full((1, 1) + (1,) * (work.width + 1), one, dtype=object)
    for v_new in range(peps.N):
        v = old_of[v_new]
        ket = _oriented_tensor(peps.tensor(v), peps.lattice, v, transposed)
        bra = conj(ket)
        if v in ops:
            ket = np.einsum("ts,surdl->turdl", np.asarray(ops[v], dtype=object), ket)
        T = np.einsum("turdl,tURDL->uUrRdDlL", ket, bra)
        sh = T.shape
        T = T.reshape(1, 1, sh[0] * sh[1], sh[2] * sh[3], sh[4] * sh[5], sh[6] * sh[7])
        S = np.einsum(_transfer_subscripts(work.width, v_new % work.width), S, T)
    value = S.reshape(-1)[0]
    return peps.field(value) if not isinstance(value, (ComplexRational, PrimeFieldElement)) else value


# ---------------------------------------------------------------------------
# public API


def _engine_for(batch: Sequence[PepsData], engine: str) -> str:
    if engine not in ("auto", "modular", "object"):
        raise ConfigInvalid(f"unknown engine {engine!r}")
    if engine != "auto":
        return engine
    f = batch[0].field
    if isinstance(f, PrimeField) and f.modulus >= 1 << 24:
        return "object"
    return "modular"


def _check_batch(batch: Sequence[PepsData]) -> None:
    if not batch:
        return
    for p in batch[1:]:
        if not p.same_shape(batch[0]):
            raise ShapeMismatch("batched instances must share lattice, d, D and field")


def _expectations(batch: Sequence[PepsData], obs: LocalObservable | None, width_cap: int, engine: str) -> list:
    batch = list(batch)
    if not batch:
        return []
    _check_batch(batch)
    if obs is not None:
        obs.check_against(batch[0])
    terms = _insertion_terms(obs, batch[0].d)
    if _engine_for(batch, engine) == "object":
        return [sum((_object_value(p, ops, width_cap) for ops in terms[1:]),
                    _object_value(p, terms[0], width_cap)) for p in batch]
    jobs = [(b, ops) for b in range(len(batch)) for ops in terms]
    vals = _modular_values(batch, jobs, width_cap)
    nt = len(terms)
    out = []
    for b in range(len(batch)):
        acc = vals[b * nt]
        for x in vals[b * nt + 1:(b + 1) * nt]:
            acc = acc + x
        out.append(acc)
    return out


def contract_norm_batch(batch: Sequence[PepsData], *, width_cap: int = DEFAULT_WIDTH_CAP, engine: str = "auto") -> list:
    return _expectations(batch, None, width_cap, engine)


def contract_norm(peps: PepsData, *, width_cap: int = DEFAULT_WIDTH_CAP, engine: str = "auto"):
    """Exact ``<psi|psi>`` (real and non-negative over Q(i))."""
    return contract_norm_batch([peps], width_cap=width_cap, engine=engine)[0]


def contract_uev_batch(batch, obs: LocalObservable, *, width_cap: int = DEFAULT_WIDTH_CAP, engine: str = "auto") -> list:
    return _expectations(batch, obs, width_cap, engine)


def contract_uev(peps: PepsData, obs: LocalObservable, *, width_cap: int = DEFAULT_WIDTH_CAP, engine: str = "auto"):
    """Exact unnormalised expectation ``<psi|A|psi>``."""
    return contract_uev_batch([peps], obs, width_cap=width_cap, engine=engine)[0]


def contract_nev_batch(batch, obs: LocalObservable, *, width_cap: int = DEFAULT_WIDTH_CAP, engine: str = "auto") -> list:
    batch = list(batch)
    norms = contract_norm_batch(batch, width_cap=width_cap, engine=engine)
    uevs = contract_uev_batch(batch, obs, width_cap=width_cap, engine=engine)
    out = []
    for n, u in zip(norms, uevs):
        if not n:
            raise ZeroNorm("state has zero norm")
        out.append(u / n)
    return out


def contract_nev(peps: PepsData, obs: LocalObservable, *, width_cap: int = DEFAULT_WIDTH_CAP, engine: str = "auto"):
    """``<psi|A|psi> / <psi|psi>``; raises :class:`ZeroNorm` on a null state."""
    return contract_nev_batch([peps], obs, width_cap=width_cap, engine=engine)[0]


def build_state_vector(peps: PepsData, *, cap: int = DEFAULT_STATE_CAP) -> np.ndarray:
    """Dense amplitudes ``psi[s_0 ... s_{N-1}]`` with ``s_0`` most significant."""
    if peps.d ** peps.N > cap:
        raise SizeCapExceeded(f"state vector of size {peps.d}**{peps.N} exceeds cap {cap}")
    lattice = peps.lattice
    edge_label = {}
    for e in lattice.edges:
        edge_label[e] = len(edge_label)
    letters = string.ascii_letters
    phys = [letters[i] for i in range(peps.N)]
    bond = [letters[peps.N + i] for i in range(len(edge_label))]

    def labels(v):
        out = phys[v]
        for leg in lattice.legs(v):
            w = lattice.neighbor(v, leg)
            out += bond[edge_label[(min(v, w), max(v, w))]]
        return out

    acc = np.array(peps.field.one(), dtype=object)
    acc_labels = ""
    for v in range(peps.N):
        lv = labels(v)
        keep = acc_labels + lv
        out = "".join(c for c in dict.fromkeys(keep) if keep.count(c) == 1 or c in phys)
        acc = np.einsum(f"{acc_labels},{lv}->{out}", acc, peps.tensor(v))
        acc_labels = out
    return acc.reshape(-1)


def mps_transfer_norm(mps: MpsData):
    """``<0| E**N |0>`` with ``E = sum_s B_s (x) conj(B_s)``, by repeated row-vector products."""
    D = mps.D
    V = np.empty((D, D), dtype=object)
    V[...] = ComplexRational(0)
    V[0, 0] = ComplexRational(1)
    mats = mps.matrices
    conj = [np.vectorize(lambda x: x.conjugate(), otypes=[object])(B) for B in mats]
    for _ in range(mps.n_sites):
        V = sum((B.T.dot(V).dot(C) for B, C in zip(mats[1:], conj[1:])), mats[0].T.dot(V).dot(conj[0]))
    return V[0, 0]
