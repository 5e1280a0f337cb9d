import itertools
import math

import numpy as np
import pytest

from cncsim import _kernels as K
from cncsim.circuit import Circuit, build_deutsch_jozsa
from cncsim.cnc_space import iter_maximal
from cncsim.dense import circuit_unitary, cnc_dense, t_state_density
from cncsim.quasiprob import (
    DecompositionError,
    QuasiDecomposition,
    best_chunking,
    build_input_sampler,
    data_path,
    estimate_born,
    format_decomposition,
    hoeffding_samples,
    load_and_verify,
    parse_decomposition,
    reconstruction_residual,
    weak_simulate,
)
from cncsim.quasiprob import _prepare
from cncsim.symplectic import PauliPoint

from conftest import dense_gates, random_gate


def lib(name):
    return load_and_verify(data_path(name))


def analytic_t1() -> QuasiDecomposition:
    """Convex |T> decomposition over the eight single-qubit CNC operators."""
    X, Y, Z = (PauliPoint.from_label(s) for s in "XYZ")
    terms = []
    for d in iter_maximal(1):
        signs = tuple(1 - 2 * d.gamma(p) for p in (X, Y, Z))
        w = (1 - 1 / math.sqrt(2)) / 8
        if signs[:2] == (1, 1):
            w += 1 / (2 * math.sqrt(2))
        terms.append((w, d))
    return QuasiDecomposition("T^1", 1, terms)


# -- decomposition files -----------------------------------------------------


def test_analytic_t1_file(tmp_path):
    dec = analytic_t1()
    assert len(dec.terms) == 8
    path = tmp_path / "T1.qpd"
    path.write_text(format_decomposition(dec))
    loaded = load_and_verify(path)
    assert loaded.one_norm == pytest.approx(1.0, abs=1e-12)
    assert loaded.is_probability
    assert reconstruction_residual(loaded) < 1e-12


def test_stabilizer_t1_norm():
    assert lib("T1_stab.qpd").one_norm == pytest.approx(math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize(
    "name,norm",
    [
        ("T1_cnc.qpd", 1.000), ("T2_cnc.qpd", 1.000), ("T3_cnc.qpd", 1.283),
        ("T1_stab.qpd", 1.414), ("T2_stab.qpd", 1.748), ("T3_stab.qpd", 2.219), ("T4_stab.qpd", 2.863),
    ],
)
def test_shipped_norms(name, norm):
    dec = lib(name)
    assert abs(dec.one_norm - norm) < 1e-3
    assert reconstruction_residual(dec) < 1e-9
    assert abs(dec.one_norm - sum(abs(w) for w, _ in dec.terms)) < 1e-12


def test_shipped_t4_cnc_bound():
    dec = lib("T4_cnc.qpd")
    assert dec.one_norm <= 2.172 + 1e-3
    assert not dec.is_stabilizer


def test_corrupted_weight_reports_residual(tmp_path):
    dec = parse_decomposition(data_path("T2_stab.qpd").read_text())
    w, d = dec.terms[0]
    w2, d2 = dec.terms[1]
    # keep the weight sum at 1 so the reconstruction check is what fires
    bad = QuasiDecomposition(dec.target, dec.k, [(w + 0.01, d), (w2 - 0.01, d2)] + dec.terms[2:])
    path = tmp_path / "bad.qpd"
    path.write_text(format_decomposition(bad))
    with pytest.raises(DecompositionError, match="residual"):
        load_and_verify(path)
    shifted = QuasiDecomposition(dec.target, dec.k, [(w + 0.01, d)] + dec.terms[1:])
    path.write_text(format_decomposition(shifted))
    with pytest.raises(DecompositionError, match="sum"):
        load_and_verify(path)


def test_parse_errors():
    with pytest.raises(DecompositionError):
        parse_decomposition("")
    with pytest.raises(DecompositionError):
        parse_decomposition("target=T^1 n=1 terms=2\nweight=1 desc=1 1;10 0;01 0;11 0\n")
    with pytest.raises(DecompositionError):
        parse_decomposition("target=T^1 n=1 terms=1\nweight=x desc=1 1;10 0;01 0;11 0\n")
    with pytest.raises(DecompositionError):
        parse_decomposition("target=T^1 n=1 terms=1\nweight=1 desc=2 0;1000 0;0010 0;0000 0\n")


def test_format_round_trip_keeps_weights_exact():
    dec = lib("T3_cnc.qpd")
    again = parse_decomposition(format_decomposition(dec))
    assert [w for w, _ in again.terms] == [w for w, _ in dec.terms]
    assert [d for _, d in again.terms] == [d for _, d in dec.terms]


# -- Hoeffding ------------------------------------------------------------------


def test_hoeffding_examples():
    assert abs(hoeffding_samples(0.1, 0.1, 4.82) - 13914) <= 10
    assert abs(hoeffding_samples(0.1, 0.1, 31.1) - 579626) <= 200
    assert hoeffding_samples(1.0, 2 / math.e**2, 1.0) == 4
    for bad in [(0, 0.1, 1), (0.1, 1.0, 1), (0.1, 0.1, 0.5)]:
        with pytest.raises(ValueError):
            hoeffding_samples(*bad)


def test_hoeffding_monotone():
    assert hoeffding_samples(0.05, 0.1, 2) > hoeffding_samples(0.1, 0.1, 2)
    assert hoeffding_samples(0.1, 0.01, 2) > hoeffding_samples(0.1, 0.1, 2)


# -- chunking and sampler ------------------------------------------------------------


CNC = {1: 1.0, 2: 1.0, 3: 1.2828427, 4: 1.7475469}
STAB = {1: 1.4142136, 2: 1.7475469, 3: 2.2189514, 4: 2.8627417}


def test_best_chunking():
    c, s, norm = best_chunking(7, CNC, STAB)
    assert (c, s) == ((3,), (4,))
    assert norm == pytest.approx(CNC[3] * STAB[4])
    c, s, norm = best_chunking(14, CNC, STAB)
    assert c == (3,) and sorted(s) == [3, 4, 4]
    assert best_chunking(0, CNC, STAB) == ((), (), 1.0)
    # stabilizer-only library
    assert best_chunking(2, {}, STAB)[2] == pytest.approx(STAB[2])


def test_product_of_norms_arithmetic():
    # a CNC chunk of norm 1.748 and a stabilizer chunk of norm 2.219 give ~3.88,
    # and a norm of 4.82 reproduces the quoted sample count
    assert CNC[4] * STAB[3] == pytest.approx(3.878, abs=1e-3)
    assert hoeffding_samples(0.1, 0.1, 4.82) == pytest.approx(13914, abs=10)


def test_sampler_m0_is_zero_state():
    s = build_input_sampler(3, 0, [])
    assert s.one_norm == 1.0
    t = s.tableau([])
    rho = cnc_dense(t.to_descriptor())
    assert rho[0, 0] == pytest.approx(1.0) and np.trace(rho) == pytest.approx(1.0)


def test_sampler_errors():
    with pytest.raises(ValueError):
        build_input_sampler(1, 3, [lib("T1_stab.qpd")])
    with pytest.raises(ValueError):
        build_input_sampler(1, 2, [lib("T1_cnc.qpd"), lib("T1_cnc.qpd")])


def test_sampler_expectation_reconstructs_input():
    chunks = [lib("T1_cnc.qpd"), lib("T2_stab.qpd")]
    s = build_input_sampler(1, 3, chunks)
    assert s.one_norm == pytest.approx(chunks[0].one_norm * chunks[1].one_norm)
    acc = 0
    for choice in itertools.product(*(range(len(c.terms)) for c in chunks)):
        prob = math.prod(abs(c.terms[i][0]) / c.one_norm for c, i in zip(chunks, choice))
        t = s.tableau(choice)
        assert t.violations() == []
        acc = acc + prob * s.sign(choice) * s.one_norm * cnc_dense(t.to_descriptor(), check=False)
    zero = np.zeros((2, 2))
    zero[0, 0] = 1
    assert np.max(np.abs(acc - np.kron(zero, t_state_density(3)))) < 1e-12


def test_choose_is_proportional_to_weights():
    dec = lib("T2_stab.qpd")
    s = build_input_sampler(0, 2, [dec])
    rng = np.random.default_rng(1)
    words = rng.integers(0, 2**64, 40000, dtype=np.uint64)
    counts = np.bincount([s.choose([w])[0] for w in words], minlength=len(dec.terms))
    expect = np.array([abs(w) for w, _ in dec.terms]) / dec.one_norm
    assert np.max(np.abs(counts / len(words) - expect)) < 0.01


# -- estimation -----------------------------------------------------------------------


def dense_born(circ: Circuit, x) -> float:
    n = circ.num_qubits
    psi = np.zeros(1 << n, complex)
    psi[0] = 1
    psi = circuit_unitary(dense_gates(circ), n) @ psi
    probs = np.abs(psi.reshape(1 << len(x), -1)) ** 2
    return float(probs[int("".join(map(str, x)), 2)].sum())


def exact_expectation(circ, x, sampler, bits_per_meas=2) -> float:
    """E[E_hat] by enumerating every term choice and every relevant random bit."""
    _, prog = _prepare(circ, sampler, x)
    nm = prog.num_measurements
    chunks = [ch.dec for ch in sampler._chunks]
    total = 0.0
    outcomes = np.zeros(max(nm, 1), np.int64)
    for choice in itertools.product(*(range(len(c.terms)) for c in chunks)):
        prob = math.prod(abs(c.terms[i][0]) / c.one_norm for c, i in zip(chunks, choice))
        sign = sampler.sign(choice)
        acc = 0.0
        for ws in itertools.product(range(1 << bits_per_meas), repeat=nm):
            xs, zs, r, k = sampler.assemble(choice)
            words = np.array(ws, np.uint64)
            weight, _ = K.run_program(xs, zs, r, sampler.N, k, prog.ops, prog.px, prog.pz, words, outcomes)
            acc += weight
        total += prob * sign * sampler.one_norm * acc / (1 << (bits_per_meas * nm))
    return total


def _small_circuits():
    c1 = Circuit(1).h(0).t(0).h(0)
    c2 = Circuit(2).h(0).t(0).cx(0, 1).h(1).tdg(1).h(1)
    c3 = Circuit(3).h(0).h(1).t(0).cx(0, 2).t(2).h(2).cx(1, 2)
    return [(c1, [0]), (c1, [1]), (c2, [0, 1]), (c2, [1, 1]), (c3, [1, 0, 1]), (c3, [0])]


@pytest.mark.parametrize("kind", ["stab", "cnc"])
@pytest.mark.parametrize("case", range(6))
def test_estimator_exactly_unbiased(kind, case):
    circ, x = _small_circuits()[case]
    m = circ.t_count
    if kind == "stab":
        chunks = [lib("T1_stab.qpd")] * m
    else:
        chunks = [lib(f"T{m}_cnc.qpd")]
    sampler = build_input_sampler(circ.num_qubits, m, chunks)
    assert exact_expectation(circ, x, sampler) == pytest.approx(dense_born(circ, x), abs=1e-12)


def test_estimator_unbiased_statistically():
    circ, x = _small_circuits()[2]
    sampler = build_input_sampler(2, 2, [lib("T2_stab.qpd")])
    res = estimate_born(circ, x, sampler, 1_000_000, seed=11, workers=1)
    truth = dense_born(circ, x)
    assert abs(res.p_hat - truth) < 5 * res.std_error
    assert res.std_error > 0


def test_forced_branch_on_clifford_circuits(rng):
    for _ in range(40):
        n = int(rng.integers(1, 4))
        circ = Circuit(n)
        for g in (random_gate(rng, n) for _ in range(12)):
            {"H": circ.h, "S": circ.s, "CX": circ.cx}[g[0]](*g[1:])
        x = [int(v) for v in rng.integers(0, 2, n)]
        sampler = build_input_sampler(n, 0, [])
        res = estimate_born(circ, x, sampler, 1, seed=0, workers=1)
        truth = dense_born(circ, x)
        assert res.p_hat == pytest.approx(truth, abs=1e-12)
        # the engine's value is an exact power of two (or zero)
        assert res.p_hat == 0 or math.log2(res.p_hat) == round(math.log2(res.p_hat))


def test_reproducible_across_workers():
    circ = build_deutsch_jozsa(1, 3, True)
    sampler = build_input_sampler(4, 7, [lib("T3_cnc.qpd"), lib("T4_stab.qpd")])
    a = estimate_born(circ, [0, 0, 1], sampler, 3000, seed=9, workers=1)
    b = estimate_born(circ, [0, 0, 1], sampler, 3000, seed=9, workers=3)
    assert a.p_hat == b.p_hat and a.histogram == b.histogram
    c = estimate_born(circ, [0, 0, 1], sampler, 3000, seed=10, workers=1)
    assert c.histogram != a.histogram


def test_estimate_errors():
    circ = Circuit(1).h(0)
    s = build_input_sampler(1, 0, [])
    with pytest.raises(ValueError):
        estimate_born(circ, [0], s, 0, seed=0)
    with pytest.raises(ValueError):
        estimate_born(circ, [0, 0], s, 10, seed=0)
    with pytest.raises(ValueError):
        estimate_born(Circuit(1).t(0), [0], s, 10, seed=0)


# -- weak simulation --------------------------------------------------------------------


def test_weak_t_state_x_measurement():
    c = Circuit(0 + 1, magic=(0,))
    c.measure("X")
    s = build_input_sampler(0, 1, [lib("T1_cnc.qpd")])
    shots = 100_000
    out = weak_simulate(c, s, shots, seed=3)
    p0 = np.mean(out[:, 0] == 0)
    truth = (1 + 1 / math.sqrt(2)) / 2
    assert abs(p0 - truth) < 3 * math.sqrt(truth * (1 - truth) / shots)


def test_weak_ghz_parity():
    c = Circuit(3).h(0).cx(0, 1).cx(1, 2)
    c.measure("XXX")
    c.measure_z(0)
    c.measure_z(1)
    out = weak_simulate(c, build_input_sampler(3, 0, []), 500, seed=1)
    assert np.all(out[:, 0] == 0)
    assert np.all(out[:, 1] == out[:, 2])


def test_weak_requires_probabilities():
    with pytest.raises(ValueError):
        weak_simulate(Circuit(1).t(0), build_input_sampler(1, 1, [lib("T1_stab.qpd")]), 10, seed=0)
