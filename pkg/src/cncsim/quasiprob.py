"""Quasi-probability decompositions, weak simulation and Born-rule estimation.

An input state |0^n> (x) |T><T|^(x)m is written as a product of chunk
decompositions (at most one chunk over CNC operators, the rest over
stabilizer states). A sample draws one term per chunk with probability
|w| / ||W||_1 and composes their tableaus; the sign is the product of term
signs and the 1-norm is the product of chunk norms.

Randomness: sample i uses a Philox generator keyed by (seed, i). It emits one
word per chunk (term choice) followed by one word per measurement, so
results do not depend on how samples are split across workers.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels as K
from .circuit import Circuit, PauliMeasure, compile_program, expand_gadgets
from .cnc_space import CncDescriptor, InvalidDescriptorError
from .symplectic import PauliPoint
from .tableau import CncTableau, points_to_words

__all__ = [
    "QuasiDecomposition",
    "DecompositionError",
    "parse_decomposition",
    "format_decomposition",
    "load_and_verify",
    "reconstruction_residual",
    "hoeffding_samples",
    "InputSampler",
    "build_input_sampler",
    "best_chunking",
    "EstimationResult",
    "estimate_born",
    "weak_simulate",
    "data_path",
]

RESIDUAL_TOL = 1e-9


class DecompositionError(ValueError):
    pass


def data_path(name: str) -> Path:
    """Path of a decomposition file shipped with the package."""
    return Path(__file__).with_name("data") / name


@dataclass
class QuasiDecomposition:
    target: str
    k: int
    terms: list[tuple[float, CncDescriptor]]
    one_norm: float = field(init=False)

    def __post_init__(self) -> None:
        self.one_norm = math.fsum(abs(w) for w, _ in self.terms)

    @property
    def is_stabilizer(self) -> bool:
        return all(d.m == 0 for _, d in self.terms)

    @property
    def is_probability(self) -> bool:
        return all(w >= 0 for w, _ in self.terms)

    def weight_sum(self) -> float:
        return math.fsum(w for w, _ in self.terms)


def format_decomposition(dec: QuasiDecomposition) -> str:
    lines = [f"target={dec.target} n={dec.k} terms={len(dec.terms)}"]
    for w, d in dec.terms:
        lines.append(f"weight={w:.17g} desc={d.to_inline()}")
    return "\n".join(lines) + "\n"


def parse_decomposition(text: str) -> QuasiDecomposition:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DecompositionError("empty file")
    header = dict(tok.split("=", 1) for tok in lines[0].split())
    try:
        target, k, count = header["target"], int(header["n"]), int(header["terms"])
    except (KeyError, ValueError) as exc:
        raise DecompositionError(f"bad header {lines[0]!r}") from exc
    terms = []
    for ln in lines[1:]:
        if not ln.startswith("weight=") or " desc=" not in ln:
            raise DecompositionError(f"bad term line {ln[:60]!r}")
        wtxt, dtxt = ln[len("weight="):].split(" desc=", 1)
        try:
            w = float(wtxt)
            d = CncDescriptor.from_inline(dtxt)
        except (ValueError, InvalidDescriptorError) as exc:
            raise DecompositionError(f"bad term {ln[:60]!r}: {exc}") from exc
        if d.n != k:
            raise DecompositionError("term width does not match header")
        terms.append((w, d))
    if len(terms) != count:
        raise DecompositionError(f"header promises {count} terms, found {len(terms)}")
    return QuasiDecomposition(target, k, terms)


def _target_density(target: str, k: int) -> np.ndarray:
    from .dense import t_state_density

    if target not in (f"T^{k}", "T" if k == 1 else None):
        raise DecompositionError(f"unsupported target {target!r}")
    return t_state_density(k)


def reconstruction_residual(dec: QuasiDecomposition) -> float:
    """max |sum_a W(a) A_a - rho_target| over matrix entries."""
    from .dense import cnc_dense

    rho = _target_density(dec.target, dec.k)
    acc = np.zeros_like(rho)
    for w, d in dec.terms:
        acc += w * cnc_dense(d, check=False)
    return float(np.max(np.abs(acc - rho)))


def load_and_verify(path: str | Path, dense_limit: int = 4) -> QuasiDecomposition:
    """Parse a decomposition file and check every invariant; raise on failure."""
    from .cnc_space import validate

    dec = parse_decomposition(Path(path).read_text())
    for _, d in dec.terms:
        rep = validate(d)
        if not rep or not d.is_maximal:
            raise DecompositionError(f"invalid term {d.to_inline()}: {rep.problems[:2]}")
    if abs(dec.weight_sum() - 1.0) > RESIDUAL_TOL:
        raise DecompositionError(f"weights sum to {dec.weight_sum():.12g}, not 1")
    if dec.k <= dense_limit:
        res = reconstruction_residual(dec)
        if res > RESIDUAL_TOL:
            raise DecompositionError(f"reconstruction residual {res:.3e} exceeds {RESIDUAL_TOL:g}")
    return dec


# ---------------------------------------------------------------------------
# Sample complexity
# ---------------------------------------------------------------------------


def hoeffding_samples(eps: float, delta: float, one_norm: float) -> int:
    """ceil((2 / eps^2) ||W||_1^2 ln(2 / delta)).

    The bound is rounded to 9 decimals before the ceiling so that values
    that are integers up to floating-point noise are not bumped up by one.
    """
    if not 0 < eps <= 1 or not 0 < delta < 1:
        raise ValueError("need eps in (0, 1] and delta in (0, 1)")
    if one_norm < 1:
        raise ValueError("a decomposition of a unit-trace state has 1-norm >= 1")
    bound = 2.0 / eps**2 * one_norm**2 * math.log(2.0 / delta)
    return int(math.ceil(round(bound, 9)))


# ---------------------------------------------------------------------------
# Input sampler
# ---------------------------------------------------------------------------


@dataclass
class _Chunk:
    dec: QuasiDecomposition
    offset: int
    cum: np.ndarray  # cumulative |w| / norm
    signs: np.ndarray  # +1 / -1
    ms: np.ndarray
    # per term blocks, already shifted to the global width
    D: list[tuple[np.ndarray, np.ndarray]]
    S: list[tuple[np.ndarray, np.ndarray, np.ndarray]]
    J: list[tuple[np.ndarray, np.ndarray, np.ndarray]]


def _shifted_rows(rows, offset: int, N: int):
    pts = [PauliPoint(N, r.point.x << offset, r.point.z << offset) for r in rows]
    xs, zs = points_to_words(pts, N)
    vals = np.array([r.value for r in rows], np.uint8)
    return xs, zs, vals


class InputSampler:
    """Samples product tableaus for |0^n> (x) rho_T^(x)m."""

    def __init__(self, n: int, chunks: Sequence[QuasiDecomposition]) -> None:
        self.n = n
        self.m = sum(c.k for c in chunks)
        self.N = n + self.m
        self.W = max(1, (self.N + 63) // 64)
        cnc = [i for i, c in enumerate(chunks) if not c.is_stabilizer]
        if len(cnc) > 1:
            raise ValueError("at most one chunk may use non-stabilizer CNC operators")
        self.one_norm = math.prod(c.one_norm for c in chunks) if chunks else 1.0
        self.chunk_sizes = [c.k for c in chunks]
        self._chunks: list[_Chunk] = []
        offset = n
        for dec in chunks:
            ws = np.array([w for w, _ in dec.terms])
            cum = np.cumsum(np.abs(ws)) / dec.one_norm
            cum[-1] = 1.0
            D, S, J = [], [], []
            for _, d in dec.terms:
                t = CncTableau.from_descriptor(d, check=False)
                dx, dz, _ = _shifted_rows(t.destabilizers(), offset, self.N)
                sx, sz, sv = _shifted_rows(t.stabilizers(), offset, self.N)
                jx, jz, jv = _shifted_rows(t.jw_rows(), offset, self.N)
                D.append((dx, dz))
                S.append((sx, sz, sv))
                J.append((jx, jz, jv))
            self._chunks.append(
                _Chunk(dec, offset, cum, np.sign(ws).astype(np.int64), np.array([d.m for _, d in dec.terms]), D, S, J)
            )
            offset += dec.k
        # data-qubit rows: destabilizer x_i, stabilizer z_i
        self._data_D = points_to_words([PauliPoint.unit_x(i, self.N) for i in range(n)], self.N)
        self._data_S = points_to_words([PauliPoint.unit_z(i, self.N) for i in range(n)], self.N)

    @property
    def num_chunks(self) -> int:
        return len(self._chunks)

    def choose(self, words: np.ndarray) -> list[int]:
        """Term index per chunk from one uint64 word each."""
        out = []
        for ch, w in zip(self._chunks, words):
            u = (int(w) >> 11) * (1.0 / (1 << 53))
            out.append(int(np.searchsorted(ch.cum, u, side="right")))
        return [min(i, len(ch.cum) - 1) for i, ch in zip(out, self._chunks)]

    def sign(self, choice: Sequence[int]) -> int:
        s = 1
        for ch, i in zip(self._chunks, choice):
            s *= int(ch.signs[i])
        return s

    def assemble(self, choice: Sequence[int]) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
        """(x, z, r, k) of the composed tableau for the chosen terms."""
        dx = [self._data_D[0]] + [ch.D[i][0] for ch, i in zip(self._chunks, choice)]
        dz = [self._data_D[1]] + [ch.D[i][1] for ch, i in zip(self._chunks, choice)]
        sx = [self._data_S[0]] + [ch.S[i][0] for ch, i in zip(self._chunks, choice)]
        sz = [self._data_S[1]] + [ch.S[i][1] for ch, i in zip(self._chunks, choice)]
        sv = [np.zeros(self.n, np.uint8)] + [ch.S[i][2] for ch, i in zip(self._chunks, choice)]
        jw = None
        for ch, i in zip(self._chunks, choice):
            if ch.ms[i] > 0:
                jw = ch.J[i]
        if jw is None:
            jw = (np.zeros((1, self.W), np.uint64), np.zeros((1, self.W), np.uint64), np.zeros(1, np.uint8))
        x = np.concatenate(dx + sx + [jw[0]])
        z = np.concatenate(dz + sz + [jw[1]])
        nd = sum(a.shape[0] for a in dx)
        r = np.concatenate([np.zeros(nd, np.uint8)] + sv + [jw[2]])
        return x, z, r, nd

    def tableau(self, choice: Sequence[int]) -> CncTableau:
        x, z, r, k = self.assemble(choice)
        return CncTableau(self.N, self.N - k, x, z, r)


def build_input_sampler(n: int, m: int, chunks: Sequence[QuasiDecomposition]) -> InputSampler:
    if sum(c.k for c in chunks) != m:
        raise ValueError(f"chunk sizes {[c.k for c in chunks]} do not add up to m = {m}")
    return InputSampler(n, chunks)


def best_chunking(
    m: int, cnc: dict[int, float], stab: dict[int, float]
) -> tuple[tuple[int, ...], tuple[int, ...], float]:
    """Minimise the product of 1-norms: at most one CNC chunk plus stabilizer chunks.

    ``cnc`` and ``stab`` map chunk size to 1-norm. Returns
    (cnc sizes, stabilizer sizes, product norm).
    """
    # best[j] = (norm, sizes) for j qubits covered by stabilizer chunks
    best: list[tuple[float, tuple[int, ...]] | None] = [(1.0, ())] + [None] * m
    for j in range(1, m + 1):
        for size, norm in stab.items():
            if size <= j and best[j - size] is not None:
                cand = (best[j - size][0] * norm, best[j - size][1] + (size,))
                if best[j] is None or cand[0] < best[j][0] - 1e-15:
                    best[j] = cand
    options = []
    if best[m] is not None:
        options.append((best[m][0], (), best[m][1]))
    for size, norm in cnc.items():
        if size <= m and best[m - size] is not None:
            options.append((norm * best[m - size][0], (size,), best[m - size][1]))
    if not options:
        raise ValueError(f"cannot cover m = {m} with the given chunk sizes")
    norm, c, s = min(options, key=lambda o: o[0])
    return c, tuple(sorted(s, reverse=True)), norm


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


def _prepare(circuit: Circuit, sampler: InputSampler, x: Sequence[int] | None):
    circ = expand_gadgets(circuit) if circuit.t_count else circuit
    if circ.num_qubits != sampler.N:
        raise ValueError(f"circuit has {circ.num_qubits} qubits, sampler provides {sampler.N}")
    if circ.magic and tuple(circ.magic) != tuple(range(sampler.n, sampler.N)):
        raise ValueError("magic qubits must be the trailing qubits")
    forced = None
    if x is not None:
        x = [int(v) & 1 for v in x]
        if len(x) > circ.num_qubits:
            raise ValueError("more outcome bits than qubits")
        instrs = list(circ.instructions)
        while instrs and isinstance(instrs[-1], PauliMeasure):
            instrs.pop()
        body = Circuit(circ.num_qubits, instrs, circ.magic)
        start = body.num_measurements
        for q in range(len(x)):
            body.measure_z(q)
        forced = {start + q: x[q] for q in range(len(x))}
        circ = body
    return circ, compile_program(circ, forced)


def _sample_words(seed: int, index: int, count: int) -> np.ndarray:
    bg = np.random.Philox(key=np.array([seed & 0xFFFFFFFFFFFFFFFF, index], dtype=np.uint64))
    return bg.random_raw(count).astype(np.uint64)


def _estimate_range(args) -> dict[tuple[int, int], int]:
    sampler, prog, seed, lo, hi = args
    hist: dict[tuple[int, int], int] = {}
    nch = sampler.num_chunks
    nwords = nch + max(prog.num_measurements, 1)
    outcomes = np.zeros(max(prog.num_measurements, 1), np.int64)
    for i in range(lo, hi):
        words = _sample_words(seed, i, nwords)
        choice = sampler.choose(words[:nch])
        x, z, r, k = sampler.assemble(choice)
        weight, _ = K.run_program(x, z, r, sampler.N, k, prog.ops, prog.px, prog.pz, words[nch:], outcomes)
        if weight == 0.0:
            key = (0, 0)
        else:
            key = (sampler.sign(choice), -int(round(math.log2(weight))))
        hist[key] = hist.get(key, 0) + 1
    return hist


@dataclass
class EstimationResult:
    p_hat: float
    samples: int
    one_norm: float
    seconds: float
    std_error: float
    histogram: dict = field(repr=False, default_factory=dict)


def _split(M: int, parts: int) -> list[tuple[int, int]]:
    step = -(-M // parts)
    return [(lo, min(M, lo + step)) for lo in range(0, M, step)]


def estimate_born(
    circuit: Circuit,
    x: Sequence[int],
    sampler: InputSampler,
    samples: int,
    seed: int,
    workers: int | None = None,
) -> EstimationResult:
    """p_hat(x) = (1/M) sum_i sign_i ||W||_1 p(x | alpha_i) for the first len(x) qubits.

    Adaptive gadget outcomes are sampled; the terminal Z outcomes are forced to
    x, each random forcing halving the weight and a contradicted deterministic
    outcome zeroing it.
    """
    if samples <= 0:
        raise ValueError("need a positive sample count")
    t0 = time.perf_counter()
    _, prog = _prepare(circuit, sampler, x)
    workers = workers or os.cpu_count() or 1
    ranges = _split(samples, workers if workers > 1 else 1)
    jobs = [(sampler, prog, seed, lo, hi) for lo, hi in ranges]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_estimate_range, jobs))
    else:
        parts = [_estimate_range(j) for j in jobs]
    hist: dict[tuple[int, int], int] = {}
    for part in parts:
        for key, c in part.items():
            hist[key] = hist.get(key, 0) + c
    norm = sampler.one_norm
    terms = [c * s * 2.0**-j for (s, j), c in hist.items()]
    mean = math.fsum(terms) / samples * norm
    second = math.fsum(c * 4.0**-j for (s, j), c in hist.items() if s) / samples * norm**2
    var = max(second - mean**2, 0.0)
    stderr = math.sqrt(var / samples)
    return EstimationResult(mean, samples, norm, time.perf_counter() - t0, stderr, hist)


def weak_simulate(
    circuit: Circuit, sampler: InputSampler, shots: int, seed: int
) -> np.ndarray:
    """Sample every measurement outcome; rows are shots, columns are labels.

    Requires a non-negative input distribution.
    """
    for ch in sampler._chunks:
        if not ch.dec.is_probability:
            raise ValueError("negative weights: use estimate_born instead")
    _, prog = _prepare(circuit, sampler, None)
    nch = sampler.num_chunks
    out = np.zeros((shots, prog.num_measurements), np.int64)
    buf = np.zeros(max(prog.num_measurements, 1), np.int64)
    for i in range(shots):
        words = _sample_words(seed, i, nch + max(prog.num_measurements, 1))
        choice = sampler.choose(words[:nch])
        xs, zs, r, k = sampler.assemble(choice)
        K.run_program(xs, zs, r, sampler.N, k, prog.ops, prog.px, prog.pz, words[nch:], buf)
        out[i] = buf[: prog.num_measurements]
    return out
