"""Offline builder for the shipped |T>^k decomposition files.

Solves min ||W||_1 subject to sum_a W(a) A_a = rho_T^k as a linear program over
the Pauli expectation values, then polishes the support with least squares so
that the dense reconstruction residual is far below the load-time tolerance.

    python3 tools/build_decompositions.py [--out src/cncsim/data]

Requires scipy. The package itself only reads the resulting files.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from cncsim.cnc_space import CncDescriptor, iter_maximal, iter_stabilizer_states
from cncsim.quasiprob import (
    QuasiDecomposition,
    format_decomposition,
    reconstruction_residual,
)
from cncsim.symplectic import PauliPoint

# single-qubit expectation values of |T><T| for I, X, Z, Y indexed by (x, z)
_LOCAL = {(0, 0): 1.0, (1, 0): 1 / math.sqrt(2), (0, 1): 0.0, (1, 1): 1 / math.sqrt(2)}


def target_vector(k: int) -> np.ndarray:
    t = np.empty(4**k)
    for idx in range(4**k):
        p = PauliPoint.from_packed(idx, k)
        val = 1.0
        for i in range(k):
            val *= _LOCAL[(p.x >> i & 1, p.z >> i & 1)]
        t[idx] = val
    return t


def column(desc: CncDescriptor) -> np.ndarray:
    """Tr(T_a A) for every a: (-1)^gamma(a) on Omega, zero elsewhere."""
    col = np.zeros(4**desc.n)
    for a, g in desc.omega_with_values():
        col[a.packed] = -1.0 if g else 1.0
    return col


def solve(cands: list[CncDescriptor], k: int) -> list[tuple[float, CncDescriptor]]:
    A = np.stack([column(d) for d in cands], axis=1)
    t = target_vector(k)
    ncol = A.shape[1]
    res = linprog(
        np.ones(2 * ncol),
        A_eq=np.hstack([A, -A]),
        b_eq=t,
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(res.message)
    w = res.x[:ncol] - res.x[ncol:]
    support = np.flatnonzero(np.abs(w) > 1e-10)
    sub = A[:, support]
    polished, *_ = np.linalg.lstsq(sub, t, rcond=None)
    return [(float(v), cands[i]) for v, i in zip(polished, support)]


def tensor(d1: CncDescriptor, d2: CncDescriptor) -> CncDescriptor:
    """Tensor product of a CNC descriptor with a stabilizer descriptor (d2.m == 0)."""
    if d2.m != 0:
        raise ValueError("second factor must be a stabilizer state")
    n = d1.n + d2.n

    def lift(p: PauliPoint, off: int) -> PauliPoint:
        return PauliPoint(n, p.x << off, p.z << off)

    center = tuple(lift(p, 0) for p in d1.center) + tuple(lift(p, d1.n) for p in d2.center)
    jw = tuple(lift(p, 0) for p in d1.jw)
    cv = tuple(d1.center_values) + tuple(d2.center_values)
    return CncDescriptor(n, d1.m, center, jw, cv, tuple(d1.jw_values))


def product(a: QuasiDecomposition, b: QuasiDecomposition) -> QuasiDecomposition:
    terms = [(wa * wb, tensor(da, db)) for wa, da in a.terms for wb, db in b.terms]
    return QuasiDecomposition(f"T^{a.k + b.k}", a.k + b.k, terms)


def build(kind: str, k: int) -> QuasiDecomposition:
    if kind == "stab":
        cands = list(iter_stabilizer_states(k))
    else:
        cands = list(iter_maximal(k)) + list(iter_stabilizer_states(k))
    return QuasiDecomposition(f"T^{k}", k, solve(cands, k))


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "src/cncsim/data")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    built: dict[tuple[str, int], QuasiDecomposition] = {}
    jobs = [("cnc", 1), ("cnc", 2), ("cnc", 3), ("stab", 1), ("stab", 2), ("stab", 3), ("stab", 4)]
    for kind, k in jobs:
        t0 = time.perf_counter()
        built[kind, k] = build(kind, k)
        print(f"{kind} k={k}: {len(built[kind, k].terms)} terms, norm {built[kind, k].one_norm:.6f} "
              f"({time.perf_counter() - t0:.1f}s)", file=sys.stderr)
    # k = 4 CNC: exhaustive enumeration is out of reach, use a product of smaller chunks
    built["cnc", 4] = product(built["cnc", 2], built["stab", 2])
    for (kind, k), dec in sorted(built.items()):
        res = reconstruction_residual(dec)
        path = args.out / f"T{k}_{kind}.qpd"
        path.write_text(format_decomposition(dec))
        print(f"{path.name}: terms={len(dec.terms)} norm={dec.one_norm:.6f} residual={res:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
