"""Compiled row kernels for the phase-space tableau.

A tableau is three arrays: ``x`` and ``z`` of shape (2n+1, W) uint64 with
qubit q at bit q % 64 of word q // 64, and ``r`` (2n+1,) uint8 of value bits.
``k = n - m`` is the number of destabilizer (and stabilizer) rows.

Every measurement consumes one uint64 word ``u``:
    bit 0       outcome of Cases III/IV, or the mixing flip of Case II
    bits 1..62  the free values s_2..s_t of Case III (extended through
                splitmix64 when t - 1 > 63)
"""

from __future__ import annotations

import numpy as np
from numba import njit

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)
_SIX = np.uint64(6)
_SM_A = np.uint64(0x9E3779B97F4A7C15)
_SM_B = np.uint64(0xBF58476D1CE4E5B9)
_SM_C = np.uint64(0x94D049BB133111EB)

CASE_I, CASE_II, CASE_III, CASE_IV = 1, 2, 3, 4

OP_H, OP_S, OP_CX, OP_MEAS, OP_CIF = 0, 1, 2, 3, 4


@njit(cache=True, inline="always")
def popcount(v):
    v = v - ((v >> _ONE) & _M1)
    v = (v & _M2) + ((v >> np.uint64(2)) & _M2)
    v = (v + (v >> np.uint64(4))) & _M4
    return np.int64((v * _H01) >> np.uint64(56))


@njit(cache=True)
def splitmix64(v):
    v = v + _SM_A
    v = (v ^ (v >> np.uint64(30))) * _SM_B
    v = (v ^ (v >> np.uint64(27))) * _SM_C
    return v ^ (v >> np.uint64(31))


@njit(cache=True)
def sym_form(xa, za, xb, zb):
    acc = _ZERO
    for w in range(xa.shape[0]):
        acc ^= (xa[w] & zb[w]) ^ (za[w] & xb[w])
    return popcount(acc) & 1


@njit(cache=True)
def beta_words(xa, za, xb, zb):
    num = 0
    for w in range(xa.shape[0]):
        num += popcount(xa[w] & za[w]) + popcount(xb[w] & zb[w])
        num += 2 * popcount(za[w] & xb[w])
        num -= popcount((xa[w] ^ xb[w]) & (za[w] ^ zb[w]))
    return (num & 3) >> 1


@njit(cache=True)
def commutation_vector(x, z, bx, bz):
    R = x.shape[0]
    out = np.empty(R, np.uint8)
    for i in range(R):
        out[i] = sym_form(x[i], z[i], bx, bz)
    return out


@njit(cache=True)
def rowmul(x, z, r, i, j):
    """Row i <- row i * row j (rows must commute)."""
    b = beta_words(x[i], z[i], x[j], z[j])
    r[i] = r[i] ^ r[j] ^ b
    for w in range(x.shape[1]):
        x[i, w] ^= x[j, w]
        z[i, w] ^= z[j, w]


@njit(cache=True)
def acc_mul(ax, az, av, x, z, r, j):
    """Scratch row (ax, az, av) <- scratch * row j; returns the new value bit."""
    b = beta_words(ax, az, x[j], z[j])
    for w in range(ax.shape[0]):
        ax[w] ^= x[j, w]
        az[w] ^= z[j, w]
    return np.int64(av) ^ np.int64(r[j]) ^ b


# ---------------------------------------------------------------------------
# Clifford gates
# ---------------------------------------------------------------------------


@njit(cache=True)
def gate_h(x, z, r, k, q):
    w = q >> 6
    sh = np.uint64(q & 63)
    mask = _ONE << sh
    for i in range(x.shape[0]):
        xb = (x[i, w] >> sh) & _ONE
        zb = (z[i, w] >> sh) & _ONE
        if i >= k:
            r[i] ^= np.uint8(xb & zb)
        if xb != zb:
            x[i, w] ^= mask
            z[i, w] ^= mask


@njit(cache=True)
def gate_s(x, z, r, k, q):
    w = q >> 6
    sh = np.uint64(q & 63)
    for i in range(x.shape[0]):
        xb = (x[i, w] >> sh) & _ONE
        zb = (z[i, w] >> sh) & _ONE
        if i >= k:
            r[i] ^= np.uint8(xb & zb)
        z[i, w] ^= xb << sh


@njit(cache=True)
def gate_cx(x, z, r, k, c, t):
    wc = c >> 6
    sc = np.uint64(c & 63)
    wt = t >> 6
    st = np.uint64(t & 63)
    for i in range(x.shape[0]):
        xc = (x[i, wc] >> sc) & _ONE
        zc = (z[i, wc] >> sc) & _ONE
        xt = (x[i, wt] >> st) & _ONE
        zt = (z[i, wt] >> st) & _ONE
        if i >= k:
            r[i] ^= np.uint8(xc & zt & (xt ^ zc ^ _ONE))
        x[i, wt] ^= xc << st
        z[i, wc] ^= zt << sc


@njit(cache=True)
def apply_gate(x, z, r, k, op, a, b):
    if op == OP_H:
        gate_h(x, z, r, k, a)
    elif op == OP_S:
        gate_s(x, z, r, k, a)
    else:
        gate_cx(x, z, r, k, a, b)


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------


@njit(cache=True)
def classify_case(comm, n, k):
    """(case, aux): aux = lambda (IV), commuting JW row (II), 2t (III), -1 (I)."""
    for i in range(k, 2 * k):
        if comm[i]:
            return CASE_IV, i
    anti = 0
    last_comm = -1
    for i in range(2 * k, 2 * n + 1):
        if comm[i]:
            anti += 1
        else:
            last_comm = i
    m = n - k
    if anti == 0:
        return CASE_I, -1
    if anti == 2 * m:
        return CASE_II, last_comm
    return CASE_III, anti


@njit(cache=True)
def _center_part(x, z, r, k, comm):
    """(c, gamma(c)) with c = sum of stabilizers whose destabilizer anti-commutes with b."""
    W = x.shape[1]
    cx = np.zeros(W, np.uint64)
    cz = np.zeros(W, np.uint64)
    cv = 0
    for i in range(k):
        if comm[i]:
            cv = acc_mul(cx, cz, cv, x, z, r, k + i)
    return cx, cz, cv


@njit(cache=True)
def _s_bit(u, i):
    """Free value s_{i+2} (i = 0 .. t-2) drawn from the measurement word."""
    if i < 63:
        return np.uint8((u >> np.uint64(i + 1)) & _ONE)
    v = u
    for _ in range((i - 63) // 64 + 1):
        v = splitmix64(v)
    return np.uint8((v >> np.uint64((i - 63) % 64)) & _ONE)


@njit(cache=True)
def measure(x, z, r, n, k, bx, bz, sign, u, forced):
    """Measure (-1)^sign T_b in place.

    ``forced`` in {0, 1} fixes the reported outcome of a random case; -1 draws
    it from ``u``. Returns (outcome, is_random, new_k, case).
    """
    comm = commutation_vector(x, z, bx, bz)
    case, aux = classify_case(comm, n, k)
    W = x.shape[1]
    R = 2 * n + 1
    if case == CASE_I or case == CASE_II:
        ax = np.zeros(W, np.uint64)
        az = np.zeros(W, np.uint64)
        av = 0
        if case == CASE_II:
            av = acc_mul(ax, az, av, x, z, r, aux)
        for i in range(k):
            if comm[i]:
                av = acc_mul(ax, az, av, x, z, r, k + i)
        if case == CASE_II and (u & _ONE):
            for i in range(2 * k, R):
                if i != aux:
                    r[i] ^= np.uint8(1)
        return (av ^ sign) & 1, 0, k, case

    if forced < 0:
        rb = np.int64(u & _ONE)
    else:
        rb = np.int64((forced ^ sign) & 1)

    if case == CASE_IV:
        lam = aux
        partner = lam - k
        for i in range(R):
            if i == lam or i == partner or not comm[i]:
                continue
            if i < k:
                for w in range(W):
                    x[i, w] ^= x[lam, w]
                    z[i, w] ^= z[lam, w]
            else:
                rowmul(x, z, r, i, lam)
        for w in range(W):
            x[partner, w] = x[lam, w]
            z[partner, w] = z[lam, w]
            x[lam, w] = bx[w]
            z[lam, w] = bz[w]
        r[partner] = 0
        r[lam] = rb
        return (rb ^ sign) & 1, 1, k, case

    # Case III
    t = aux // 2
    K = 2 * k
    # stable partition of the JW block: anti-commuting rows first
    order = np.empty(R - K, np.int64)
    p = 0
    for i in range(K, R):
        if comm[i]:
            order[p] = i
            p += 1
    for i in range(K, R):
        if not comm[i]:
            order[p] = i
            p += 1
    x[K:] = x[order]
    z[K:] = z[order]
    r[K:] = r[order]
    # value of the projection bbar = b + c, c in the center
    cx, cz, cv = _center_part(x, z, r, k, comm)
    vbar = rb ^ cv ^ beta_words(bx, bz, cx, cz)
    # R_K <- bbar = sum of commuting JW rows
    for w in range(W):
        sx = _ZERO
        sz = _ZERO
        for i in range(K + 2 * t, R):
            sx ^= x[i, w]
            sz ^= z[i, w]
        x[K, w] = sx
        z[K, w] = sz
    r[K] = vbar
    r[K + 1] = 0
    # new stabilizer/destabilizer pairs via the scratch row
    Sx = np.empty(W, np.uint64)
    Sz = np.empty(W, np.uint64)
    for w in range(W):
        Sx[w] = x[K, w] ^ x[K + 1, w]
        Sz[w] = z[K, w] ^ z[K + 1, w]
    for i in range(1, t):
        e = K + 2 * i
        f = e + 1
        for w in range(W):
            x[e, w] ^= Sx[w]
            z[e, w] ^= Sz[w]
            x[f, w] ^= Sx[w]
            z[f, w] ^= Sz[w]
            Sx[w] ^= x[e, w] ^ x[f, w]
            Sz[w] ^= z[e, w] ^ z[f, w]
        r[e] = _s_bit(u, i - 1)
        r[f] = 0
    # commuting JW rows pick up bbar
    for i in range(K + 2 * t, R):
        rowmul(x, z, r, i, K)
    # relocate: old D, new D, old S, new S, JW
    perm = np.empty(R, np.int64)
    p = 0
    for i in range(k):
        perm[p] = i
        p += 1
    for i in range(t):
        perm[p] = K + 2 * i + 1
        p += 1
    for i in range(k, 2 * k):
        perm[p] = i
        p += 1
    for i in range(t):
        perm[p] = K + 2 * i
        p += 1
    for i in range(K + 2 * t, R):
        perm[p] = i
        p += 1
    x[:] = x[perm]
    z[:] = z[perm]
    r[:] = r[perm]
    return (rb ^ sign) & 1, 1, k + t, case


# ---------------------------------------------------------------------------
# Program execution
# ---------------------------------------------------------------------------


@njit(cache=True)
def run_program(x, z, r, n, k, prog, px, pz, words, outcomes):
    """Execute a compiled circuit in place.

    ``prog`` rows are (op, a, b, c, d, e):
        H/S q          (op, q, 0, ...)
        CX c t         (op, c, t, ...)
        MEAS           (op, pauli index, sign, label, forced, 0)
        CIF            (op, label, value, gate op, q1, q2)
    ``words`` supplies one uint64 per measurement in program order.
    Returns (weight, k): weight is the product of 1/2 over forced random
    outcomes, or 0.0 as soon as a forced outcome contradicts a deterministic one.
    """
    weight = 1.0
    mcount = 0
    for pc in range(prog.shape[0]):
        op = prog[pc, 0]
        if op <= OP_CX:
            apply_gate(x, z, r, k, op, prog[pc, 1], prog[pc, 2])
        elif op == OP_MEAS:
            forced = prog[pc, 4]
            out, rnd, k, case = measure(
                x, z, r, n, k, px[prog[pc, 1]], pz[prog[pc, 1]], prog[pc, 2], words[mcount], forced
            )
            mcount += 1
            outcomes[prog[pc, 3]] = out
            if forced >= 0:
                if rnd:
                    weight *= 0.5
                elif out != forced:
                    return 0.0, k
        else:
            if outcomes[prog[pc, 1]] == prog[pc, 2]:
                apply_gate(x, z, r, k, prog[pc, 3], prog[pc, 4], prog[pc, 5])
    return weight, k
