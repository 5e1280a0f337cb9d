"""Command-line front end.

    cncsim bench-random --n 200:1000:200 --m 0,1,n/4,n/2,3n/4,n --beta 1 --reps 3
    cncsim hidden-shift --kappa 1 --nu 3 --shift 111111 --epsilon 0.1 --delta 0.1
    cncsim deutsch-jozsa --c 1 --n 4 --balanced
    cncsim enumerate 2
    cncsim verify-decomposition src/cncsim/data/T3_cnc.qpd
    cncsim run bell.circ --samples 10000
    cncsim dump-tableau 3 1 --circuit gates.circ

Seeds: --seed, else the CNCSIM_SEED environment variable, else a fresh
random seed that is reported on stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import os
import sys
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels as K
from .circuit import (
    Circuit,
    CliffordGate,
    build_deutsch_jozsa,
    build_hidden_shift,
    compile_program,
    random_clifford_experiment,
)
from .cnc_space import count_formulas, enumerate_maximal, iter_maximal
from .quasiprob import (
    DecompositionError,
    QuasiDecomposition,
    best_chunking,
    build_input_sampler,
    data_path,
    estimate_born,
    hoeffding_samples,
    load_and_verify,
    reconstruction_residual,
    weak_simulate,
)
from .tableau import CncTableau

BENCH_HEADER = ["n", "m", "beta", "rep", "gate_seconds", "measure_seconds"]
ESTIMATE_HEADER = ["n", "m", "epsilon", "delta", "onenorm", "M", "seconds", "p_hat"]


class CliError(Exception):
    pass


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("CNCSIM_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise CliError(f"CNCSIM_SEED must be an integer, got {env!r}") from exc
    seed = int(np.random.SeedSequence().entropy % (1 << 63))
    _log(f"# seed={seed}")
    return seed


def parse_int_list(text: str) -> list[int]:
    """'200:1000:200' (inclusive range) or '4,8,16'."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        lo, hi, step = parts
        if step <= 0:
            raise CliError("range step must be positive")
        return list(range(lo, hi + 1, step))
    return [int(p) for p in text.split(",") if p.strip()]


def parse_float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def resolve_m(spec: str, n: int) -> int:
    """m-spec entry: an integer, 'n', or a fraction of n such as 'n/2' or '3n/4'."""
    spec = spec.strip().replace(" ", "")
    if "n" not in spec:
        m = int(spec)
    else:
        coeff, _, denom = spec.partition("n")
        num = Fraction(coeff or "1")
        if denom:
            if not denom.startswith("/"):
                raise CliError(f"bad m-spec {spec!r}")
            num /= int(denom[1:])
        m = math.floor(num * n)
    if not 0 <= m <= n:
        raise CliError(f"m-spec {spec!r} gives m={m} outside [0, {n}]")
    return m


def _open_out(path: str | None):
    if path and path != "-":
        return open(path, "w", newline="", encoding="utf-8")
    return contextlib.nullcontext(sys.stdout)


# ---------------------------------------------------------------------------
# bench-random
# ---------------------------------------------------------------------------


def bench_once(n: int, m: int, beta: float, seed: int) -> tuple[float, float]:
    """(gate_seconds, measure_seconds) for one random-Clifford experiment."""
    circ, _ = random_clifford_experiment(n, m, beta, seed)
    gates = Circuit(n, [i for i in circ.instructions if isinstance(i, CliffordGate)])
    meas = Circuit(n, [i for i in circ.instructions if not isinstance(i, CliffordGate)])
    gprog, mprog = compile_program(gates), compile_program(meas)
    tab = CncTableau.canonical(n, m)
    words = np.random.Generator(np.random.Philox(key=[seed, 1 << 32])).integers(
        0, 2**64, max(mprog.num_measurements, 1), dtype=np.uint64
    )
    outcomes = np.zeros(max(mprog.num_measurements, 1), np.int64)
    t0 = time.perf_counter()
    _, k = K.run_program(tab.x, tab.z, tab.r, n, tab.k, gprog.ops, gprog.px, gprog.pz, words, outcomes)
    t1 = time.perf_counter()
    K.run_program(tab.x, tab.z, tab.r, n, k, mprog.ops, mprog.px, mprog.pz, words, outcomes)
    t2 = time.perf_counter()
    return t1 - t0, t2 - t1


def cmd_bench_random(args) -> int:
    seed = resolve_seed(args.seed)
    ns = parse_int_list(args.n)
    betas = parse_float_list(args.beta)
    specs = [s for s in args.m.split(",") if s.strip()]
    bench_once(4, 2, 1.0, seed)  # compile kernels outside the timed region
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        row_id = 0
        for n in ns:
            ms = sorted({resolve_m(s, n) for s in specs})
            for m in ms:
                for beta in betas:
                    for rep in range(args.reps):
                        g, t = bench_once(n, m, beta, seed + row_id)
                        row_id += 1
                        w.writerow([n, m, beta, rep, f"{g:.6e}", f"{t:.6e}"])
                        fh.flush()
    return 0


# ---------------------------------------------------------------------------
# Estimation commands
# ---------------------------------------------------------------------------


def load_library(directory: str | None) -> tuple[dict[int, QuasiDecomposition], dict[int, QuasiDecomposition]]:
    """CNC and stabilizer decompositions keyed by chunk size."""
    root = Path(directory) if directory else data_path("")
    cnc, stab = {}, {}
    for k in range(1, 5):
        for kind, table in (("cnc", cnc), ("stab", stab)):
            p = root / f"T{k}_{kind}.qpd"
            if p.exists():
                table[k] = load_and_verify(p)
    if not stab:
        raise CliError(f"no stabilizer decompositions found in {root}")
    return cnc, stab


def plan_sampler(n: int, m: int, directory: str | None):
    cnc, stab = load_library(directory)
    csize, ssizes, _ = best_chunking(
        m, {k: d.one_norm for k, d in cnc.items()}, {k: d.one_norm for k, d in stab.items()}
    )
    chunks = [cnc[k] for k in csize] + [stab[k] for k in ssizes]
    sampler = build_input_sampler(n, m, chunks)
    _log(f"# chunking: cnc={list(csize)} stabilizer={list(ssizes)} onenorm={sampler.one_norm:.6f}")
    return sampler


def _estimate_and_report(args, circ: Circuit, n_report: int, x: Sequence[int]) -> int:
    seed = resolve_seed(args.seed)
    m = circ.t_count
    sampler = plan_sampler(circ.num_qubits, m, args.decomp_dir)
    M = args.samples or hoeffding_samples(args.epsilon, args.delta, sampler.one_norm)
    res = estimate_born(circ, x, sampler, M, seed, workers=args.workers)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_HEADER)
        w.writerow(
            [n_report, m, args.epsilon, args.delta, f"{res.one_norm:.4f}", M, f"{res.seconds:.3f}", f"{res.p_hat:.6f}"]
        )
    _log(f"# std_error={res.std_error:.4g}")
    return 0


def _bits(text: str, n: int) -> list[int]:
    if len(text) != n or set(text) - {"0", "1"}:
        raise CliError(f"expected a {n}-bit string, got {text!r}")
    return [int(c) for c in text]


def cmd_hidden_shift(args) -> int:
    n = 2 * args.nu
    shift = _bits(args.shift, n) if args.shift else [1] * n
    try:
        circ = build_hidden_shift(args.kappa, args.nu, shift)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return _estimate_and_report(args, circ, n, shift)


def cmd_deutsch_jozsa(args) -> int:
    try:
        circ = build_deutsch_jozsa(args.c, args.n, args.balanced)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return _estimate_and_report(args, circ, args.n, [0] * args.n)


# ---------------------------------------------------------------------------
# Utilities
# ---------------------------------------------------------------------------


def cmd_enumerate(args) -> int:
    n = args.n
    if n < 1:
        raise CliError("n must be positive")
    if n <= 2:
        ops = enumerate_maximal(n)
        sets = {frozenset(p.packed for p in d.omega()) for d in ops}
        print(f"{len(sets)} maximal CNC sets, {len(ops)} operators")
    for m in range(1, n + 1):
        N, V, M = count_formulas(n, m)
        line = f"m={m}: {N} sets x {V} value assignments = {M} operators"
        if args.check and n <= 3:
            seen = sum(1 for _ in iter_maximal(n, m, values=False))
            line += f" (enumerated {seen} sets)"
        print(line)
    return 0


def cmd_verify_decomposition(args) -> int:
    status = 0
    for path in args.files:
        try:
            dec = load_and_verify(path)
        except (DecompositionError, OSError) as exc:
            print(f"{path}: FAILED: {exc}")
            status = 1
            continue
        res = reconstruction_residual(dec)
        print(
            f"{path}: target={dec.target} terms={len(dec.terms)} "
            f"oneNorm={dec.one_norm:.3f} residual={res:.1e} (<1e-9)"
        )
    return status


def cmd_run(args) -> int:
    seed = resolve_seed(args.seed)
    circ = Circuit.from_text(Path(args.circuit).read_text())
    m = circ.t_count + len(circ.magic)
    n = circ.num_qubits - len(circ.magic)
    if m == 0:
        sampler = build_input_sampler(n, 0, [])
    else:
        if args.decomp:
            chunks = [load_and_verify(p) for p in args.decomp]
        else:
            if m > 4:
                raise CliError("weak simulation supports at most 4 magic qubits by default; pass --decomp")
            chunks = [load_and_verify(data_path(f"T{m}_cnc.qpd"))]
        sampler = build_input_sampler(n, m, chunks)
    try:
        out = weak_simulate(circ, sampler, args.samples, seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    counts = Counter("".join(str(int(b)) for b in row) for row in out)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["outcome", "count", "frequency"])
        for key in sorted(counts):
            w.writerow([key, counts[key], f"{counts[key] / args.samples:.6f}"])
    return 0


def cmd_dump_tableau(args) -> int:
    seed = resolve_seed(args.seed)
    if not 0 <= args.m <= args.n:
        raise CliError("need 0 <= m <= n")
    tab = CncTableau.canonical(args.n, args.m)
    if args.circuit:
        circ = Circuit.from_text(Path(args.circuit).read_text(), num_qubits=args.n)
        if circ.t_count or circ.num_qubits != args.n:
            raise CliError("dump-tableau runs Clifford circuits on the n qubits only")
        prog = compile_program(circ)
        words = np.random.Generator(np.random.Philox(key=[seed, 0])).integers(
            0, 2**64, max(prog.num_measurements, 1), dtype=np.uint64
        )
        outcomes = np.zeros(max(prog.num_measurements, 1), np.int64)
        _, k = K.run_program(tab.x, tab.z, tab.r, tab.n, tab.k, prog.ops, prog.px, prog.pz, words, outcomes)
        tab.k = k
        if prog.num_measurements:
            _log("# outcomes " + "".join(str(int(v)) for v in outcomes[: prog.num_measurements]))
    sys.stdout.write(tab.dump())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cncsim", description="CNC phase-space tableau simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--seed", type=int, default=None)
        if out:
            sp.add_argument("--out", default=None, help="output CSV path (default stdout)")

    b = sub.add_parser("bench-random", help="time random Clifford circuits on canonical CNC inputs")
    b.add_argument("--n", default="200:1000:200", help="'lo:hi:step' or comma list")
    b.add_argument("--m", default="0,1,n/4,n/2,3n/4,n", help="comma list of m-specs")
    b.add_argument("--beta", default="1", help="comma list")
    b.add_argument("--reps", type=int, default=1)
    common(b)
    b.set_defaults(func=cmd_bench_random)

    def estimation(sp):
        sp.add_argument("--epsilon", type=float, default=0.1)
        sp.add_argument("--delta", type=float, default=0.1)
        sp.add_argument("--samples", type=int, default=None, help="override the Hoeffding sample count")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--decomp-dir", default=None)
        common(sp)

    h = sub.add_parser("hidden-shift", help="estimate p(x) for the hidden-shift circuit")
    h.add_argument("--kappa", type=int, default=1)
    h.add_argument("--nu", type=int, default=3)
    h.add_argument("--shift", default=None, help="bit string of length 2*nu (default all ones)")
    estimation(h)
    h.set_defaults(func=cmd_hidden_shift)

    d = sub.add_parser("deutsch-jozsa", help="estimate p(0^n) for a Deutsch-Jozsa circuit")
    d.add_argument("--c", type=int, default=1)
    d.add_argument("--n", type=int, default=4)
    g = d.add_mutually_exclusive_group()
    g.add_argument("--balanced", dest="balanced", action="store_true", default=True)
    g.add_argument("--constant", dest="balanced", action="store_false")
    estimation(d)
    d.set_defaults(func=cmd_deutsch_jozsa)

    e = sub.add_parser("enumerate", help="count maximal CNC operators")
    e.add_argument("n", type=int)
    e.add_argument("--check", action="store_true", help="also enumerate sets explicitly (n <= 3)")
    e.set_defaults(func=cmd_enumerate)

    v = sub.add_parser("verify-decomposition", help="load and verify decomposition files")
    v.add_argument("files", nargs="+")
    v.set_defaults(func=cmd_verify_decomposition)

    r = sub.add_parser("run", help="weak simulation of a circuit file")
    r.add_argument("circuit")
    r.add_argument("--samples", type=int, default=10000)
    r.add_argument("--decomp", nargs="*", default=None, help="non-negative decomposition files, one per chunk")
    common(r)
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("dump-tableau", help="print the canonical tableau, optionally after a Clifford circuit")
    t.add_argument("n", type=int)
    t.add_argument("m", type=int)
    t.add_argument("--circuit", default=None)
    common(t, out=False)
    t.set_defaults(func=cmd_dump_tableau)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, DecompositionError, ValueError, OSError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
