"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 decoding or majority
failure, 4 size cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from . import tv
from .bounds import grid_points, lebesgue_function, paturi_bound, rakhmanov_bound
from .contract import contract_nev, contract_norm, contract_norm_batch, contract_uev
from .errors import ConfigInvalid, IoError, PepsReduceError
from .exact import QI, scalar_to_json
from .experiment import ExperimentConfig, default_observable, run_experiment
from .interpolation import ExactPolynomial, SampleSet, berlekamp_welch, vandermonde_interpolate
from .oracle import OraclePolicy
from .peps import LatticeSpec, LocalObservable, PepsData
from .permanent import LiptonConfig, SquareMatrix, permanent_bruteforce, random_matrix
from .reduction import BlendPath, DistributionSpec, ReductionConfig, blend, sample_peps_data


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _lattice(text: str) -> tuple[int, int]:
    try:
        w, h = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("lattice must look like WxH, e.g. 2x3") from None
    return w, h


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", type=Path, help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=_u64, default=0, help="master seed (u64)")
    p.add_argument("--parallel", type=int, default=1, help="worker processes for trials")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="pepsreduce", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("contract", parents=[common], help="exact norm of a PEPS instance file")
    p.add_argument("instance", type=Path)

    for name, what in (("uev", "unnormalised"), ("nev", "normalised")):
        p = sub.add_parser(name, parents=[common], help=f"{what} expectation value of a local observable")
        p.add_argument("instance", type=Path)
        p.add_argument("--observable", type=Path, help="observable JSON (default: |0><0| on vertex 0)")

    p = sub.add_parser("reduce", parents=[common], help="run the blend-and-decode reduction against a faulty oracle")
    p.add_argument("--variant", choices=("exact", "noisy", "uev", "nev"), default="exact")
    p.add_argument("--failure-rate", type=float, default=0.0)
    p.add_argument("--oracle-mode", choices=("iid-failure", "adversarial-subset"), default="iid-failure")
    p.add_argument("--noise-bits", type=int, default=128, help="additive noise 2**-B for the noisy variant")
    p.add_argument("--k", type=int, help="queries per repeat")
    p.add_argument("--repeats", type=int, default=25)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--lattice", type=_lattice, default=(2, 3))
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--D", type=int, default=2)
    p.add_argument("--source", choices=("random", "cluster", "file"), default="random")
    p.add_argument("--instance", type=Path, help="target PEPS for --source file")
    p.add_argument("--translation-invariant", action="store_true")
    p.add_argument("--bits", type=int, default=53, help="dyadic resolution of sampled entries")

    p = sub.add_parser("permanent", parents=[common], help="Lipton's reduction for the permanent over F_q")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--q", type=int, default=101)
    p.add_argument("--failure-rate", type=float, default=0.1)
    p.add_argument("--k", type=int)
    p.add_argument("--repeats", type=int, default=15)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--matrix", type=Path, help="only compute the brute-force permanent of this matrix file")

    p = sub.add_parser("verify-lemma", parents=[common], help="numeric checks of the supporting lemmas")
    p.add_argument("lemma", choices=("gaussian-tv", "degree-bound", "paturi", "rakhmanov"))

    sub.add_parser("bench", parents=[common], help="time the main kernels")
    return parser


# ---------------------------------------------------------------------------
# output


def _emit(args, payload: dict | str) -> None:
    if isinstance(payload, dict):
        if args.format == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["key", "value"])
            for key, value in payload.items():
                w.writerow([key, value if isinstance(value, (str, int, float)) else json.dumps(value)])
            text = buf.getvalue()
        else:
            text = json.dumps(payload, indent=1) + "\n"
    else:
        text = payload
    if args.out is None:
        sys.stdout.write(text)
        return
    try:
        args.out.write_text(text)
    except OSError as exc:
        raise IoError(f"cannot write {args.out}: {exc}") from exc


def _load_instance(path: Path) -> PepsData:
    try:
        return PepsData.load(path)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"malformed instance file {path}: {exc}") from exc


def _load_observable(path: Path | None, peps: PepsData) -> LocalObservable:
    if path is None:
        return default_observable(peps.d)
    doc = json.loads(path.read_text())
    modulus = getattr(peps.field, "modulus", None)
    return LocalObservable.from_json(doc, modulus)


# ---------------------------------------------------------------------------
# commands


def cmd_contract(args) -> int:
    peps = _load_instance(args.instance)
    _emit(args, {"N": peps.N, "D": peps.D, "d": peps.d, "norm": scalar_to_json(contract_norm(peps))})
    return 0


def cmd_expectation(args) -> int:
    peps = _load_instance(args.instance)
    obs = _load_observable(args.observable, peps)
    fn = contract_uev if args.command == "uev" else contract_nev
    _emit(args, {"N": peps.N, "support": list(obs.support), args.command: scalar_to_json(fn(peps, obs))})
    return 0


def _report_payload(report) -> dict:
    doc = report.to_json()
    doc["seeds"] = [t.seed for t in report.trials]
    return doc


def _experiment_exit(report) -> int:
    """3 when a single-trial run ended without a decoded value."""
    if len(report.trials) == 1 and report.trials[0].outcome not in ("ok", "wrong"):
        return 3
    return 0


def cmd_reduce(args) -> int:
    if args.variant == "noisy":
        policy = OraclePolicy.noisy(args.noise_bits)
    elif args.failure_rate == 0:
        policy = OraclePolicy()
    else:
        policy = OraclePolicy(args.oracle_mode, failure_rate=args.failure_rate)
    w, h = args.lattice
    cfg = ExperimentConfig(
        variant=args.variant, source=args.source, width=w, height=h, d=args.d, D=args.D,
        instance_path=None if args.instance is None else str(args.instance),
        dist=DistributionSpec(bits=args.bits, translation_invariant=args.translation_invariant),
        reduction=ReductionConfig(args.variant, k=args.k, repeats=args.repeats, noise_bits=policy.noise_bits),
        policy=policy, trials=args.trials, seed=args.seed, parallel=args.parallel,
    )
    report = run_experiment(cfg)
    _emit(args, report.to_csv() if args.format == "csv" else _report_payload(report))
    return _experiment_exit(report)


def cmd_permanent(args) -> int:
    if args.matrix is not None:
        A = SquareMatrix.from_json(json.loads(args.matrix.read_text()))
        _emit(args, {"n": A.n, "permanent": scalar_to_json(permanent_bruteforce(A))})
        return 0
    policy = OraclePolicy.iid(args.failure_rate) if args.failure_rate else OraclePolicy()
    cfg = ExperimentConfig(
        variant="permanent", policy=policy, trials=args.trials, seed=args.seed, parallel=args.parallel,
        perm_n=args.n, perm_q=args.q, lipton=LiptonConfig(k=args.k, repeats=args.repeats),
    )
    cfg.lipton.resolve(args.n, args.q)
    report = run_experiment(cfg)
    _emit(args, report.to_csv() if args.format == "csv" else _report_payload(report))
    return _experiment_exit(report)


def _lemma_gaussian_tv(rng) -> dict:
    rows = []
    for eps in (0.1, 0.01, 0.001):
        numeric = tv.tv_numeric_scale(eps)
        rows.append({"kind": "scale", "param": eps, "tv": numeric, "bound": tv.tv_bound_scale(1, eps)})
    for v in rng.normal(0, 0.5, size=5):
        numeric = tv.tv_numeric_shift(float(v))
        rows.append({"kind": "shift", "param": float(v), "tv": numeric, "bound": tv.tv_bound_shift([v], 1.0)})
    for row in rows:
        row["margin"] = row["bound"] - row["tv"]
    return {"lemma": "gaussian-tv", "ok": all(r["margin"] >= 0 for r in rows), "checks": rows}


def _lemma_degree_bound(rng) -> dict:
    lattice = LatticeSpec(2, 2)
    dist = DistributionSpec()
    P = sample_peps_data((lattice, 2, 2), dist, rng)
    path = BlendPath(P, sample_peps_data(P, dist, rng))
    r = 2 * lattice.N
    ts = [Fraction(i, 7) for i in range(r + 4)]
    values = contract_norm_batch([blend(path, t) for t in ts])
    poly = vandermonde_interpolate(SampleSet(zip(ts[: r + 1], values[: r + 1])), r)
    held = [poly(t) == v for t, v in zip(ts[r + 1:], values[r + 1:])]
    return {"lemma": "degree-bound", "r": r, "held_out": len(held), "ok": all(held) and poly.degree <= r}


def _lemma_paturi(_rng) -> dict:
    # Chebyshev polynomials rescaled to [-eps, eps] are the extremal case
    rows = []
    for r in (1, 2, 4, 8):
        for eps in (Fraction(1, 2), Fraction(1, 10)):
            value = mpmath.chebyt(r, mpmath.mpf(eps.denominator) / eps.numerator)
            bound = paturi_bound(1, r, eps)
            rows.append({"r": r, "eps": str(eps), "chebyshev_at_1": mpmath.nstr(value, 10),
                         "bound": mpmath.nstr(bound, 10), "ok": bool(value <= bound)})
    return {"lemma": "paturi", "ok": all(r["ok"] for r in rows), "checks": rows}


def _lemma_rakhmanov(_rng) -> dict:
    # with k = r + 1 nodes the worst polynomial bounded by 1 on the grid is
    # governed by the Lebesgue function, so its maximum is the sharp value
    rows = []
    for r in range(2, 7):
        k = r + 1
        R = math.sqrt(1 - r * r / (k * k))
        xs = np.linspace(-R / 2, R / 2, 401)
        worst = float(lebesgue_function([float(x) for x in grid_points(k)], xs).max())
        bound = float(rakhmanov_bound(k, r, Fraction(R / 2)))
        rows.append({"r": r, "k": k, "max_lebesgue": worst, "bound": bound, "ok": worst <= bound})
    return {"lemma": "rakhmanov", "ok": all(r["ok"] for r in rows), "checks": rows}


def cmd_verify_lemma(args) -> int:
    rng = np.random.default_rng(args.seed)
    fn = {"gaussian-tv": _lemma_gaussian_tv, "degree-bound": _lemma_degree_bound,
          "paturi": _lemma_paturi, "rakhmanov": _lemma_rakhmanov}[args.lemma]
    result = fn(rng)
    _emit(args, result)
    return 0 if result["ok"] else 1


def cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    timings = {}
    dist = DistributionSpec()
    for w, h in ((2, 2), (2, 3), (3, 3)):
        batch = [sample_peps_data((LatticeSpec(w, h), 2, 2), dist, rng) for _ in range(20)]
        start = time.perf_counter()
        contract_norm_batch(batch)
        timings[f"contract_norm_{w}x{h}_per_instance_ms"] = 1000 * (time.perf_counter() - start) / 20
    r, k = 12, 120
    truth = ExactPolynomial([QI(int(c)) for c in rng.integers(-50, 50, size=r + 1)])
    ts = [Fraction(i, k) for i in range(1, k + 1)]
    ys = [truth(t) for t in ts]
    for i in rng.choice(k, size=(k - r - 1) // 2, replace=False):
        ys[i] = ys[i] + 1
    start = time.perf_counter()
    berlekamp_welch(SampleSet(zip(ts, ys)), r)
    timings["berlekamp_welch_k120_r12_ms"] = 1000 * (time.perf_counter() - start)
    A = random_matrix(8, 101, rng)
    start = time.perf_counter()
    permanent_bruteforce(A)
    timings["permanent_n8_ms"] = 1000 * (time.perf_counter() - start)
    _emit(args, timings)
    return 0


COMMANDS = {
    "contract": cmd_contract, "uev": cmd_expectation, "nev": cmd_expectation, "reduce": cmd_reduce,
    "permanent": cmd_permanent, "verify-lemma": cmd_verify_lemma, "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.parallel < 1:
        parser.error("--parallel must be at least 1")
    try:
        return COMMANDS[args.command](args)
    except PepsReduceError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
