"""Circuit representation, text format, T-gadget expansion and benchmark builders.

Qubits are 0-based in the API and 1-based in the text format. Measurement
labels are assigned sequentially in program order (0-based in the API,
1-based in text). ``Circuit.magic`` lists the qubits that start in |T>;
all other qubits start in |0>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from . import _kernels as K
from .symplectic import PauliPoint

__all__ = [
    "CliffordGate",
    "PauliMeasure",
    "ConditionalClifford",
    "TGate",
    "Circuit",
    "CircuitFormatError",
    "Program",
    "compile_program",
    "expand_gadgets",
    "ccz_decompose",
    "ccx_decompose",
    "build_hidden_shift",
    "build_deutsch_jozsa",
    "random_clifford_experiment",
]


class CircuitFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CliffordGate:
    name: str  # H, S or CX
    qubits: tuple[int, ...]

    def __post_init__(self) -> None:
        want = {"H": 1, "S": 1, "CX": 2}.get(self.name)
        if want is None:
            raise ValueError(f"unknown Clifford gate {self.name!r}")
        if len(self.qubits) != want:
            raise ValueError(f"{self.name} takes {want} qubit(s)")
        if want == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError("CX control equals target")


@dataclass(frozen=True)
class PauliMeasure:
    point: PauliPoint
    sign: int = 0


@dataclass(frozen=True)
class ConditionalClifford:
    gate: CliffordGate
    label: int
    value: int


@dataclass(frozen=True)
class TGate:
    qubit: int
    dagger: bool = False


Instruction = Union[CliffordGate, PauliMeasure, ConditionalClifford, TGate]


@dataclass
class Circuit:
    num_qubits: int
    instructions: list = field(default_factory=list)
    magic: tuple[int, ...] = ()

    # -- builders ----------------------------------------------------------------

    def _q(self, q: int) -> int:
        if not 0 <= q < self.num_qubits:
            raise IndexError(f"qubit {q} out of range for {self.num_qubits} qubits")
        return q

    def h(self, q: int) -> Circuit:
        self.instructions.append(CliffordGate("H", (self._q(q),)))
        return self

    def s(self, q: int) -> Circuit:
        self.instructions.append(CliffordGate("S", (self._q(q),)))
        return self

    def cx(self, c: int, t: int) -> Circuit:
        self.instructions.append(CliffordGate("CX", (self._q(c), self._q(t))))
        return self

    def t(self, q: int) -> Circuit:
        self.instructions.append(TGate(self._q(q)))
        return self

    def tdg(self, q: int) -> Circuit:
        self.instructions.append(TGate(self._q(q), True))
        return self

    def sdg(self, q: int) -> Circuit:
        return self.s(q).s(q).s(q)

    def z(self, q: int) -> Circuit:
        return self.s(q).s(q)

    def x(self, q: int) -> Circuit:
        return self.h(q).z(q).h(q)

    def cz(self, a: int, b: int) -> Circuit:
        return self.h(b).cx(a, b).h(b)

    def measure(self, pauli: PauliPoint | str, sign: int = 0) -> int:
        """Append a Pauli measurement; returns its label."""
        if isinstance(pauli, str):
            pauli, s2 = PauliPoint.parse(pauli)
            sign ^= s2
        if pauli.n != self.num_qubits:
            raise ValueError("measurement width does not match the circuit")
        self.instructions.append(PauliMeasure(pauli, sign & 1))
        return self.num_measurements - 1

    def measure_z(self, q: int) -> int:
        return self.measure(PauliPoint.unit_z(self._q(q), self.num_qubits))

    def cif(self, label: int, value: int, gate: CliffordGate) -> Circuit:
        if not 0 <= label < self.num_measurements:
            raise ValueError(f"label {label} does not refer to an earlier measurement")
        for q in gate.qubits:
            self._q(q)
        self.instructions.append(ConditionalClifford(gate, label, value & 1))
        return self

    def extend(self, instrs: Iterable[Instruction]) -> Circuit:
        for ins in instrs:
            self.instructions.append(ins)
        return self

    # -- queries -------------------------------------------------------------------

    @property
    def num_measurements(self) -> int:
        return sum(isinstance(i, PauliMeasure) for i in self.instructions)

    @property
    def t_count(self) -> int:
        return sum(isinstance(i, TGate) for i in self.instructions)

    def clifford_gates(self) -> list[CliffordGate]:
        return [i for i in self.instructions if isinstance(i, CliffordGate)]

    def validate(self) -> None:
        labels = 0
        for ins in self.instructions:
            if isinstance(ins, CliffordGate):
                for q in ins.qubits:
                    self._q(q)
            elif isinstance(ins, TGate):
                self._q(ins.qubit)
            elif isinstance(ins, PauliMeasure):
                if ins.point.n != self.num_qubits:
                    raise ValueError("measurement width mismatch")
                labels += 1
            elif isinstance(ins, ConditionalClifford):
                if not 0 <= ins.label < labels:
                    raise ValueError("conditional gate refers to a later measurement")

    # -- text format -----------------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"# qubits {self.num_qubits}"]
        if self.magic:
            lines.append("# magic " + " ".join(str(q + 1) for q in self.magic))
        for ins in self.instructions:
            lines.append(_format_instruction(ins))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, num_qubits: int | None = None) -> Circuit:
        parsed = []
        declared = None
        magic: tuple[int, ...] = ()
        highest = 0
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if line.startswith("#"):
                words = line[1:].split()
                if len(words) >= 2 and words[0] == "qubits":
                    declared = int(words[1])
                elif words and words[0] == "magic":
                    magic = tuple(int(w) - 1 for w in words[1:])
                continue
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                ins, top = _parse_instruction(line.split())
            except (ValueError, IndexError) as exc:
                raise CircuitFormatError(f"line {lineno}: {exc}") from exc
            highest = max(highest, top)
            parsed.append(ins)
        n = num_qubits or declared or highest
        circ = cls(n, magic=magic)
        for ins in parsed:
            if isinstance(ins, tuple) and ins[0] == "MEAS":
                _, text_p, sign = ins
                p, s2 = PauliPoint.parse(text_p)
                if p.n > n:
                    raise CircuitFormatError("measurement wider than the circuit")
                circ.measure(PauliPoint(n, p.x, p.z), sign ^ s2)
            else:
                circ.instructions.append(ins)
        circ.validate()
        return circ


def _format_gate(g: CliffordGate) -> str:
    return " ".join([g.name] + [str(q + 1) for q in g.qubits])


def _format_instruction(ins: Instruction) -> str:
    if isinstance(ins, CliffordGate):
        return _format_gate(ins)
    if isinstance(ins, TGate):
        return f"{'TDG' if ins.dagger else 'T'} {ins.qubit + 1}"
    if isinstance(ins, PauliMeasure):
        return f"MEAS {ins.point}" + (" -" if ins.sign else "")
    if isinstance(ins, ConditionalClifford):
        return f"CIF {ins.label + 1} {ins.value} {_format_gate(ins.gate)}"
    raise TypeError(type(ins))


def _parse_gate(words: Sequence[str]) -> tuple[CliffordGate, int]:
    name = words[0].upper()
    qs = tuple(int(w) - 1 for w in words[1:])
    if any(q < 0 for q in qs):
        raise ValueError("qubits are 1-based")
    return CliffordGate(name, qs), max(qs) + 1


def _parse_instruction(words: Sequence[str]):
    op = words[0].upper()
    if op in ("H", "S", "CX"):
        return _parse_gate(words)
    if op in ("T", "TDG"):
        if len(words) != 2:
            raise ValueError(f"{op} takes one qubit")
        q = int(words[1]) - 1
        if q < 0:
            raise ValueError("qubits are 1-based")
        return TGate(q, op == "TDG"), q + 1
    if op == "MEAS":
        if len(words) not in (2, 3) or (len(words) == 3 and words[2] not in "+-"):
            raise ValueError("MEAS <pauli> [-]")
        sign = int(len(words) == 3 and words[2] == "-")
        return ("MEAS", words[1], sign), len(words[1].lstrip("+-"))
    if op == "CIF":
        label = int(words[1]) - 1
        value = int(words[2])
        gate, top = _parse_gate(words[3:])
        return ConditionalClifford(gate, label, value & 1), top
    raise ValueError(f"unknown instruction {op!r}")


# ---------------------------------------------------------------------------
# Gadgets and standard decompositions
# ---------------------------------------------------------------------------


def expand_gadgets(circ: Circuit) -> Circuit:
    """Replace each T / TDG by magic-state injection on a fresh ancilla.

    T on q with ancilla a: CX q->a, measure Z_a, S on q if the outcome is 1.
    TDG appends S S S (= S^dagger) after the same gadget. Ancillas are appended
    after the existing qubits in T-gate order.
    """
    m = circ.t_count
    if m == 0:
        return Circuit(circ.num_qubits, list(circ.instructions), circ.magic)
    n = circ.num_qubits
    N = n + m
    out = Circuit(N, magic=circ.magic + tuple(range(n, N)))
    relabel: dict[int, int] = {}
    old_label = 0
    anc = n
    for ins in circ.instructions:
        if isinstance(ins, TGate):
            q = ins.qubit
            out.cx(q, anc)
            lab = out.measure_z(anc)
            out.cif(lab, 1, CliffordGate("S", (q,)))
            if ins.dagger:
                out.sdg(q)
            anc += 1
        elif isinstance(ins, PauliMeasure):
            p = ins.point
            relabel[old_label] = out.measure(PauliPoint(N, p.x, p.z), ins.sign)
            old_label += 1
        elif isinstance(ins, ConditionalClifford):
            out.instructions.append(ConditionalClifford(ins.gate, relabel[ins.label], ins.value))
        else:
            out.instructions.append(ins)
    return out


def ccz_decompose(a: int, b: int, c: int) -> list[Instruction]:
    """CCZ with seven T/TDG gates and six CX gates."""
    if len({a, b, c}) != 3:
        raise ValueError("CCZ needs three distinct qubits")
    G = CliffordGate
    return [
        G("CX", (b, c)),
        TGate(c, True),
        G("CX", (a, c)),
        TGate(c),
        G("CX", (b, c)),
        TGate(c, True),
        G("CX", (a, c)),
        TGate(b),
        TGate(c),
        G("CX", (a, b)),
        TGate(a),
        TGate(b, True),
        G("CX", (a, b)),
    ]


def ccx_decompose(a: int, b: int, t: int) -> list[Instruction]:
    """Toffoli as H_t CCZ H_t."""
    h = CliffordGate("H", (t,))
    return [h] + ccz_decompose(a, b, t) + [h]


def _triples(count: int) -> list[tuple[int, int, int]]:
    # disjoint consecutive triples (1,2,3), (4,5,6), ... as 0-based qubits
    return [(3 * j, 3 * j + 1, 3 * j + 2) for j in range(count)]


def build_hidden_shift(kappa: int, nu: int, shift: Sequence[int]) -> Circuit:
    """H^n O_f' H^n O_f H^n on |0^n>, n = 2 nu, then Z measurements of all qubits.

    O_f = prod CZ_{i,i+nu} (O_g x I), O_f' = prod CZ_{i,i+nu} (I x O_g) Z(x),
    O_g = kappa CCZ gates on disjoint triples of the relevant half.
    """
    if kappa < 1 or nu < 3 * kappa:
        raise ValueError("need kappa >= 1 and nu >= 3 kappa")
    n = 2 * nu
    shift = [int(v) & 1 for v in shift]
    if len(shift) != n:
        raise ValueError(f"shift must have {n} bits")
    c = Circuit(n)

    def hadamards() -> None:
        for q in range(n):
            c.h(q)

    def cz_ladder() -> None:
        for i in range(nu):
            c.cz(i, i + nu)

    def o_g(offset: int) -> None:
        for a, b, t in _triples(kappa):
            c.extend(ccz_decompose(a + offset, b + offset, t + offset))

    hadamards()
    # O_f: diagonal factors commute, order is immaterial
    o_g(0)
    cz_ladder()
    hadamards()
    for q in range(n):
        if shift[q]:
            c.z(q)
    o_g(nu)
    cz_ladder()
    hadamards()
    for q in range(n):
        c.measure_z(q)
    return c


def build_deutsch_jozsa(c: int, n: int, balanced: bool) -> Circuit:
    """U = H^n O_f H^(n+1) on |0^n, 1>, then Z measurements of the first n qubits.

    Balanced oracle: for each triple (j1, j2, j3), CCX_{j1,j2,j3} then
    CX_{j3,t}; then CX_{k,t} for every k beyond the triples.
    """
    if c < 1 or n < 3 * c:
        raise ValueError("need c >= 1 and n >= 3c")
    circ = Circuit(n + 1)
    t = n
    circ.x(t)
    for q in range(n + 1):
        circ.h(q)
    if balanced:
        for j1, j2, j3 in _triples(c):
            circ.extend(ccx_decompose(j1, j2, j3))
            circ.cx(j3, t)
        for k in range(3 * c, n):
            circ.cx(k, t)
    for q in range(n):
        circ.h(q)
    for q in range(n):
        circ.measure_z(q)
    return circ


def random_clifford_experiment(n: int, m: int, beta: float, seed: int) -> tuple[Circuit, int]:
    """floor(beta n log2 n) uniform random H/S/CX gates, then Z measurement of each qubit.

    The initial state is the canonical CNC operator of type (n, m).
    """
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    rng = np.random.default_rng(seed)
    count = int(math.floor(beta * n * math.log2(n))) if n > 1 else 0
    circ = Circuit(n)
    kinds = rng.integers(0, 3, count) if n > 1 else np.zeros(count, int)
    for kind in kinds:
        if kind == 0:
            circ.h(int(rng.integers(n)))
        elif kind == 1:
            circ.s(int(rng.integers(n)))
        else:
            a, b = rng.choice(n, 2, replace=False)
            circ.cx(int(a), int(b))
    for q in range(n):
        circ.measure_z(q)
    return circ, m


# ---------------------------------------------------------------------------
# Compilation to the kernel program format
# ---------------------------------------------------------------------------


@dataclass
class Program:
    n: int
    ops: np.ndarray  # (L, 6) int64
    px: np.ndarray  # (P, W) uint64
    pz: np.ndarray
    num_measurements: int


_OPC = {"H": K.OP_H, "S": K.OP_S, "CX": K.OP_CX}


def compile_program(circ: Circuit, forced: dict[int, int] | None = None) -> Program:
    """Lower a gadget-free circuit; ``forced`` maps measurement labels to outcomes."""
    from .tableau import points_to_words

    forced = forced or {}
    rows = []
    points: list[PauliPoint] = []
    index: dict[PauliPoint, int] = {}
    label = 0
    for ins in circ.instructions:
        if isinstance(ins, CliffordGate):
            q = ins.qubits
            rows.append((_OPC[ins.name], q[0], q[1] if len(q) > 1 else 0, 0, 0, 0))
        elif isinstance(ins, PauliMeasure):
            if ins.point not in index:
                index[ins.point] = len(points)
                points.append(ins.point)
            rows.append((K.OP_MEAS, index[ins.point], ins.sign, label, forced.get(label, -1), 0))
            label += 1
        elif isinstance(ins, ConditionalClifford):
            q = ins.gate.qubits
            rows.append(
                (K.OP_CIF, ins.label, ins.value, _OPC[ins.gate.name], q[0], q[1] if len(q) > 1 else 0)
            )
        else:
            raise ValueError("expand T gates before compiling")
    ops = np.array(rows, np.int64).reshape(-1, 6)
    if points:
        px, pz = points_to_words(points, circ.num_qubits)
    else:
        W = max(1, (circ.num_qubits + 63) // 64)
        px = np.zeros((1, W), np.uint64)
        pz = np.zeros((1, W), np.uint64)
    return Program(circ.num_qubits, ops, px, pz, label)
