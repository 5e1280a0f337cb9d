"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from cncsim.circuit import CliffordGate, TGate
from cncsim.cnc_space import apply_clifford, canonical_cnc
from cncsim.symplectic import PauliPoint

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)


def random_point(rng, n: int, nonzero: bool = False) -> PauliPoint:
    while True:
        p = PauliPoint(n, int(rng.integers(1 << n)), int(rng.integers(1 << n)))
        if p or not nonzero:
            return p


def random_gate(rng, n: int) -> tuple:
    kind = int(rng.integers(3)) if n > 1 else int(rng.integers(2))
    if kind == 0:
        return ("H", int(rng.integers(n)))
    if kind == 1:
        return ("S", int(rng.integers(n)))
    a, b = rng.choice(n, 2, replace=False)
    return ("CX", int(a), int(b))


def random_maximal(rng, n: int, m: int | None = None, depth: int = 30):
    """A random maximal CNC descriptor: canonical type, random values, random Clifford."""
    if m is None:
        m = int(rng.integers(1, n + 1))
    base = canonical_cnc(n, m)
    cv = tuple(int(v) for v in rng.integers(0, 2, len(base.center)))
    jv = tuple(int(v) for v in rng.integers(0, 2, len(base.jw)))
    base = base.with_values(cv, jv)
    gates = [random_gate(rng, n) for _ in range(depth)]
    return apply_clifford(base, gates)


def dense_gates(circ) -> list[tuple]:
    """Gate list for dense.circuit_unitary from a measurement-free circuit."""
    out = []
    for ins in circ.instructions:
        if isinstance(ins, CliffordGate):
            out.append((ins.name, *ins.qubits))
        elif isinstance(ins, TGate):
            out.append(("TDG" if ins.dagger else "T", ins.qubit))
        else:
            break
    return out


def points(n: int):
    return st.builds(
        lambda x, z: PauliPoint(n, x, z),
        st.integers(0, (1 << n) - 1),
        st.integers(0, (1 << n) - 1),
    )


# -- acceptance reporting --------------------------------------------------------

ACCEPTANCE: dict[str, str] = {}


def record(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE[name] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE.values():
            terminalreporter.write_line(line)
