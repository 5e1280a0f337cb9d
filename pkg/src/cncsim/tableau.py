"""The phase-space (CNC) tableau.

Row layout for type (n, m), k = n - m:

    rows 0 .. k-1        destabilizers f_i   (value bit always 0)
    rows k .. 2k-1       stabilizers e_i     (value gamma(e_i))
    rows 2k .. 2n        JW elements a_j     (value gamma(a_j))

Gate and measurement updates run in compiled kernels; this module adds
construction, decoding, invariant checks and the text dump.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from .cnc_space import CncDescriptor, InvalidDescriptorError, validate
from .symplectic import (
    PauliPoint,
    PhasedRow,
    beta,
    conjugate_basis,
    row_product,
    symplectic_complement,
    symplectic_form,
)

__all__ = [
    "CncTableau",
    "MeasurementCase",
    "Gate",
    "compose",
    "draw_word",
    "points_to_words",
]

_CASE_TAGS = {K.CASE_I: "I", K.CASE_II: "II", K.CASE_III: "III", K.CASE_IV: "IV"}
_GATE_OPS = {"H": K.OP_H, "S": K.OP_S, "CX": K.OP_CX}


@dataclass(frozen=True)
class Gate:
    """A Clifford generator on 0-based qubits."""

    name: str
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.name not in _GATE_OPS:
            raise ValueError(f"unknown gate {self.name!r}")
        want = 2 if self.name == "CX" else 1
        if len(self.qubits) != want:
            raise ValueError(f"{self.name} takes {want} qubit(s)")
        if self.name == "CX" and self.qubits[0] == self.qubits[1]:
            raise ValueError("CX control equals target")


@dataclass(frozen=True)
class MeasurementCase:
    tag: str
    aux: object = None


def _words(n: int) -> int:
    return max(1, (n + 63) // 64)


def points_to_words(points: Sequence[PauliPoint], n: int) -> tuple[np.ndarray, np.ndarray]:
    W = _words(n)
    xs = np.zeros((len(points), W), np.uint64)
    zs = np.zeros((len(points), W), np.uint64)
    for i, p in enumerate(points):
        for w in range(W):
            xs[i, w] = (p.x >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
            zs[i, w] = (p.z >> (64 * w)) & 0xFFFFFFFFFFFFFFFF
    return xs, zs


def _point_from_words(xw: np.ndarray, zw: np.ndarray, n: int) -> PauliPoint:
    x = z = 0
    for w in range(xw.shape[0]):
        x |= int(xw[w]) << (64 * w)
        z |= int(zw[w]) << (64 * w)
    return PauliPoint(n, x, z)


def draw_word(rng: np.random.Generator) -> np.uint64:
    """One uint64 of randomness per measurement."""
    return np.uint64(rng.integers(0, 2**64, dtype=np.uint64))


class CncTableau:
    """A (2n+1)-row phase-space tableau of type (n, m)."""

    __slots__ = ("n", "k", "x", "z", "r")

    def __init__(self, n: int, m: int, x: np.ndarray, z: np.ndarray, r: np.ndarray) -> None:
        R = 2 * n + 1
        if x.shape != (R, _words(n)) or z.shape != x.shape or r.shape != (R,):
            raise ValueError("array shapes do not match n")
        if not 0 <= m <= n:
            raise ValueError("need 0 <= m <= n")
        self.n = n
        self.k = n - m
        self.x = x
        self.z = z
        self.r = r

    @property
    def m(self) -> int:
        return self.n - self.k

    # -- construction ----------------------------------------------------------

    @classmethod
    def from_rows(cls, n: int, m: int, rows: Sequence[PhasedRow]) -> CncTableau:
        xs, zs = points_to_words([row.point for row in rows], n)
        r = np.array([row.value & 1 for row in rows], np.uint8)
        return cls(n, m, xs, zs, r)

    @classmethod
    def from_descriptor(cls, desc: CncDescriptor, check: bool = True) -> CncTableau:
        """Tableau of a maximal CNC operator; destabilizers solved inside the JW commutant."""
        if check:
            rep = validate(desc, exhaustive_limit=3 if desc.n <= 3 else 0)
            if not rep:
                raise InvalidDescriptorError("; ".join(rep.problems[:3]))
            if not desc.is_maximal:
                raise InvalidDescriptorError("tableaus represent maximal CNC operators only")
        n = desc.n
        ambient = symplectic_complement(list(desc.jw), n)
        destab = conjugate_basis(list(desc.center), ambient, n)
        rows = [PhasedRow(f, 0) for f in destab] + desc.center_rows() + desc.jw_rows()
        return cls.from_rows(n, desc.m, rows)

    @classmethod
    def zero_state(cls, n: int) -> CncTableau:
        """|0^n>: destabilizers x_i, stabilizers z_i, one zero JW row."""
        from .cnc_space import canonical_cnc

        return cls.from_descriptor(canonical_cnc(n, 0), check=False)

    @classmethod
    def canonical(cls, n: int, m: int) -> CncTableau:
        """Canonical type-(n, m) tableau built directly, without any GF(2) solving.

        Destabilizers x_1..x_k, stabilizers z_1..z_k (k = n - m), JW set of the
        last m qubits; all values zero.
        """
        from .cnc_space import canonical_cnc

        desc = canonical_cnc(n, m)
        k = n - m
        rows = [PhasedRow(PauliPoint.unit_x(i, n), 0) for i in range(k)] + desc.center_rows() + desc.jw_rows()
        return cls.from_rows(n, m, rows)

    def copy(self) -> CncTableau:
        return CncTableau(self.n, self.m, self.x.copy(), self.z.copy(), self.r.copy())

    # -- row access ------------------------------------------------------------

    def row(self, i: int) -> PhasedRow:
        return PhasedRow(_point_from_words(self.x[i], self.z[i], self.n), int(self.r[i]))

    def destabilizers(self) -> list[PhasedRow]:
        return [self.row(i) for i in range(self.k)]

    def stabilizers(self) -> list[PhasedRow]:
        return [self.row(i) for i in range(self.k, 2 * self.k)]

    def jw_rows(self) -> list[PhasedRow]:
        return [self.row(i) for i in range(2 * self.k, 2 * self.n + 1)]

    def to_descriptor(self) -> CncDescriptor:
        s, j = self.stabilizers(), self.jw_rows()
        return CncDescriptor(
            self.n,
            self.m,
            tuple(r.point for r in s),
            tuple(r.point for r in j),
            tuple(r.value for r in s),
            tuple(r.value for r in j),
        )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, CncTableau)
            and self.n == other.n
            and self.k == other.k
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r, other.r)
        )

    __hash__ = None  # mutable

    # -- gates -----------------------------------------------------------------

    def apply_gate(self, gate: Gate | tuple) -> CncTableau:
        if not isinstance(gate, Gate):
            gate = Gate(gate[0], tuple(gate[1:]))
        for q in gate.qubits:
            if not 0 <= q < self.n:
                raise IndexError(f"qubit {q} out of range for n={self.n}")
        b = gate.qubits[1] if len(gate.qubits) > 1 else 0
        K.apply_gate(self.x, self.z, self.r, self.k, _GATE_OPS[gate.name], gate.qubits[0], b)
        return self

    def apply_gates(self, gates: Iterable[Gate | tuple]) -> CncTableau:
        for g in gates:
            self.apply_gate(g)
        return self

    # -- measurement -----------------------------------------------------------

    def _b_words(self, b: PauliPoint) -> tuple[np.ndarray, np.ndarray]:
        if b.n != self.n:
            raise ValueError(f"measurement on {b.n} qubits, tableau has {self.n}")
        xs, zs = points_to_words([b], self.n)
        return xs[0], zs[0]

    def commutation(self, b: PauliPoint) -> np.ndarray:
        bx, bz = self._b_words(b)
        return K.commutation_vector(self.x, self.z, bx, bz)

    def case_of(self, b: PauliPoint) -> MeasurementCase:
        comm = self.commutation(b)
        case, aux = K.classify_case(comm, self.n, self.k)
        tag = _CASE_TAGS[case]
        if tag == "II":
            return MeasurementCase(tag, int(aux) - 2 * self.k)
        if tag == "III":
            rows = tuple(int(i) - 2 * self.k for i in np.nonzero(comm[2 * self.k :])[0])
            return MeasurementCase(tag, rows)
        if tag == "IV":
            return MeasurementCase(tag, int(aux) - self.k)
        return MeasurementCase(tag)

    def measure_word(self, b: PauliPoint, sign: int, word: int, forced: int = -1) -> tuple[int, bool]:
        """Measure with an explicit random word; returns (outcome, was_random)."""
        bx, bz = self._b_words(b)
        out, rnd, k, _ = K.measure(
            self.x, self.z, self.r, self.n, self.k, bx, bz, int(sign) & 1, np.uint64(word), int(forced)
        )
        self.k = int(k)
        return int(out), bool(rnd)

    def measure(self, b: PauliPoint, sign: int = 0, rng: np.random.Generator | None = None) -> int:
        """Measure (-1)^sign T_b; the outcome bit r means eigenvalue (-1)^r."""
        if rng is None:
            rng = np.random.default_rng()
        out, _ = self.measure_word(b, sign, draw_word(rng))
        return out

    def enumerate_branches(self, b: PauliPoint, r: int) -> list[tuple[float, CncTableau]]:
        """All equally weighted post-measurement tableaus for outcome r of +T_b.

        Returns (Pr(r), tableau) pairs; empty when r has probability zero.
        """
        case = self.case_of(b)
        if case.tag == "I":
            t = self.copy()
            out, _ = t.measure_word(b, 0, 0)
            return [(1.0, t)] if out == r else []
        if case.tag == "II":
            out = []
            for flip in (0, 1):
                t = self.copy()
                got, _ = t.measure_word(b, 0, flip)
                if got != r:
                    return []
                out.append((1.0, t))
            return out
        if case.tag == "IV":
            t = self.copy()
            t.measure_word(b, 0, 0, forced=r)
            return [(0.5, t)]
        tcount = len(case.aux) // 2
        if tcount - 1 > 62:
            raise ValueError("branch enumeration is limited to t <= 63")
        out = []
        for s in range(1 << (tcount - 1)):
            t = self.copy()
            t.measure_word(b, 0, s << 1, forced=r)
            out.append((0.5, t))
        return out

    # -- checks ----------------------------------------------------------------

    def violations(self, value_samples: int = 0, rng: np.random.Generator | None = None) -> list[str]:
        """Structural invariants plus (optionally) sampled value-law checks."""
        out = []
        D, S, J = self.destabilizers(), self.stabilizers(), self.jw_rows()
        k = self.k
        for i in range(k):
            if D[i].value:
                out.append(f"destabilizer {i} has value 1")
            for j in range(k):
                if symplectic_form(S[i].point, D[j].point) != int(i == j):
                    out.append(f"[e_{i}, f_{j}] wrong")
                if j > i and symplectic_form(S[i].point, S[j].point):
                    out.append(f"stabilizers {i},{j} anti-commute")
                if j > i and symplectic_form(D[i].point, D[j].point):
                    out.append(f"destabilizers {i},{j} anti-commute")
        for a in J:
            for row in D + S:
                if symplectic_form(a.point, row.point):
                    out.append("JW row fails to commute with a (de)stabilizer")
                    break
        if self.m == 0:
            if len(J) != 1 or not J[0].point.is_zero() or J[0].value:
                out.append("type (n,0) needs one zero JW row with value 0")
        else:
            total = PauliPoint.zero(self.n)
            for i, a in enumerate(J):
                total = total + a.point
                for b in J[i + 1 :]:
                    if not symplectic_form(a.point, b.point):
                        out.append("JW rows commute")
            if not total.is_zero():
                out.append("JW rows do not sum to zero")
        if value_samples and not out:
            out.extend(self._value_law_samples(value_samples, rng or np.random.default_rng(0)))
        return out

    def _gamma_from(self, jw_index: int | None, mask: Sequence[int]) -> PhasedRow:
        S = self.stabilizers()
        acc = PhasedRow(PauliPoint.zero(self.n), 0)
        if jw_index is not None:
            acc = self.jw_rows()[jw_index]
        for c, row in zip(mask, S):
            if c:
                acc = row_product(acc, row)
        return acc

    def gamma(self, b: PauliPoint) -> int:
        """gamma(b) for b in Omega, via the destabilizer expansion."""
        D = self.destabilizers()
        mask = [symplectic_form(b, f.point) for f in D]
        acc = self._gamma_from(None, mask)
        if acc.point == b:
            return acc.value
        for j, a in enumerate(self.jw_rows()):
            if (acc.point + a.point) == b:
                return row_product(a, acc).value
        raise ValueError(f"{b} is not in Omega")

    def _value_law_samples(self, count: int, rng: np.random.Generator) -> list[str]:
        """Check gamma(a+b) = gamma(a) + gamma(b) + beta(a,b) on random commuting pairs of Omega.

        a and b are built from random generator combinations; gamma of the
        sum is recomputed through the destabilizer expansion, a separate path.
        """
        out = []
        k = self.k
        J = self.jw_rows()
        for _ in range(count):
            j = int(rng.integers(len(J) + 1)) - 1
            ra = self._gamma_from(j if j >= 0 else None, rng.integers(0, 2, k))
            rb = self._gamma_from(None, rng.integers(0, 2, k))
            if rng.integers(2) and j >= 0:
                # both in the same isotropic I_j
                rb = row_product(rb, J[j])
            if symplectic_form(ra.point, rb.point):
                out.append("sampled pair anti-commutes")
                continue
            want = ra.value ^ rb.value ^ beta(ra.point, rb.point)
            if self.gamma(ra.point + rb.point) != want:
                out.append(f"value law fails for {ra.point}, {rb.point}")
        return out

    # -- text dump -------------------------------------------------------------

    def dump(self) -> str:
        lines = [f"{self.n} {self.m}"]
        for i in range(2 * self.n + 1):
            row = self.row(i)
            lines.append(row.point.bitstring() + str(row.value))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse_dump(cls, text: str) -> CncTableau:
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        n, m = (int(t) for t in lines[0].split())
        if len(lines) != 2 * n + 2:
            raise ValueError("wrong number of rows")
        rows = []
        for ln in lines[1:]:
            if len(ln) != 2 * n + 1 or set(ln) - {"0", "1"}:
                raise ValueError(f"bad row {ln!r}")
            rows.append(PhasedRow(PauliPoint.from_bitstring(ln[:-1]), int(ln[-1])))
        return cls.from_rows(n, m, rows)

    def __repr__(self) -> str:
        return f"CncTableau(n={self.n}, m={self.m})"


def _embed_row(row: PhasedRow, offset: int, n: int) -> PhasedRow:
    p = row.point
    return PhasedRow(PauliPoint(n, p.x << offset, p.z << offset), row.value)


def compose(t1: CncTableau, t2: CncTableau) -> CncTableau:
    """Tableau of A_1 (x) |stab><stab|_2; t2 must have type (n', 0)."""
    if t2.m != 0:
        raise ValueError("second factor must be a stabilizer tableau (m = 0)")
    n = t1.n + t2.n
    lift1 = lambda rows: [_embed_row(r, 0, n) for r in rows]
    lift2 = lambda rows: [_embed_row(r, t1.n, n) for r in rows]
    rows = (
        lift1(t1.destabilizers())
        + lift2(t2.destabilizers())
        + lift1(t1.stabilizers())
        + lift2(t2.stabilizers())
        + lift1(t1.jw_rows())
    )
    return CncTableau.from_rows(n, t1.m, rows)
