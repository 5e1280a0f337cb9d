"""Linear algebra over the qubit phase space E_n = Z_2^{2n}.

A point ``a = (a_X | a_Z)`` is stored as two Python integers used as bit
sets, bit ``i`` holding qubit ``i`` (0-based). Inner products reduce to
``int.bit_count`` on word-aligned masks, so the symplectic form costs
O(n / 64) machine operations.

The Jordan-Wigner (JW) helpers live here as well: JW sets, the JW transform
and its inverse, expansion in a JW basis, completion of anti-commuting sets
and construction of a full JW decomposition ``E_n = I + W + I'`` from an
isotropic basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

__all__ = [
    "DimensionError",
    "NotSymplecticError",
    "PauliPoint",
    "PhasedRow",
    "symplectic_form",
    "phi",
    "beta",
    "row_product",
    "gaussian_elimination",
    "EliminationResult",
    "span_coordinates",
    "in_span",
    "solve_gf2",
    "symplectic_complement",
    "sgso",
    "JwSet",
    "jw_transform",
    "inverse_jw_transform",
    "jw_expand",
    "split_commuting",
    "complete_to_jw",
    "JwDecomposition",
    "build_jw_decomposition",
    "conjugate_basis",
]


class DimensionError(ValueError):
    """Raised when points from different phase spaces are combined."""


class NotSymplecticError(ValueError):
    """Raised when an input violates a required commutation pattern."""


_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LETTERS.items()}


@dataclass(frozen=True, slots=True)
class PauliPoint:
    """An element of E_n; ``x`` and ``z`` are n-bit masks (qubit i -> bit i)."""

    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self) -> None:
        limit = 1 << self.n
        if self.n < 0 or not (0 <= self.x < limit and 0 <= self.z < limit):
            raise DimensionError(f"bits do not fit in {self.n} qubits")

    @classmethod
    def zero(cls, n: int) -> PauliPoint:
        return cls(n, 0, 0)

    @classmethod
    def unit_x(cls, i: int, n: int) -> PauliPoint:
        return cls(n, 1 << i, 0)

    @classmethod
    def unit_z(cls, i: int, n: int) -> PauliPoint:
        return cls(n, 0, 1 << i)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> PauliPoint:
        """Build from the row layout ``(x_1..x_n, z_1..z_n)``."""
        if len(bits) % 2:
            raise DimensionError("row length must be even")
        n = len(bits) // 2
        x = sum(1 << i for i in range(n) if bits[i] & 1)
        z = sum(1 << i for i in range(n) if bits[n + i] & 1)
        return cls(n, x, z)

    @classmethod
    def from_bitstring(cls, text: str) -> PauliPoint:
        return cls.from_bits([int(c) for c in text.strip()])

    @classmethod
    def from_label(cls, text: str) -> PauliPoint:
        point, sign = cls.parse(text)
        if sign:
            raise ValueError("signed label; use PauliPoint.parse")
        return point

    @classmethod
    def parse(cls, text: str) -> tuple[PauliPoint, int]:
        """Parse ``"-XZY"`` style strings into ``(point, sign_bit)``."""
        text = text.strip()
        sign = 0
        if text[:1] in "+-":
            sign = int(text[0] == "-")
            text = text[1:]
        x = z = 0
        for i, c in enumerate(text.upper()):
            if c not in "IXYZ_":
                raise ValueError(f"bad Pauli letter {c!r}")
            bx, bz = _BITS["I" if c == "_" else c]
            x |= bx << i
            z |= bz << i
        return cls(len(text), x, z), sign

    @property
    def packed(self) -> int:
        """Single 2n-bit integer ``x | z << n``; bit order matches the row layout."""
        return self.x | (self.z << self.n)

    @classmethod
    def from_packed(cls, value: int, n: int) -> PauliPoint:
        mask = (1 << n) - 1
        return cls(n, value & mask, value >> n)

    def bits(self) -> tuple[int, ...]:
        return tuple((self.x >> i) & 1 for i in range(self.n)) + tuple(
            (self.z >> i) & 1 for i in range(self.n)
        )

    def bitstring(self) -> str:
        return "".join(map(str, self.bits()))

    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    def is_zero(self) -> bool:
        return not (self.x or self.z)

    def __add__(self, other: PauliPoint) -> PauliPoint:
        if self.n != other.n:
            raise DimensionError(f"n={self.n} vs n={other.n}")
        return PauliPoint(self.n, self.x ^ other.x, self.z ^ other.z)

    __xor__ = __add__

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __str__(self) -> str:
        return "".join(
            _LETTERS[((self.x >> i) & 1, (self.z >> i) & 1)] for i in range(self.n)
        )

    def __repr__(self) -> str:
        return f"PauliPoint({str(self) or '<n=0>'})"

    def sort_key(self) -> tuple[int, int]:
        return (self.n, self.packed)


def _check(a: PauliPoint, b: PauliPoint) -> None:
    if a.n != b.n:
        raise DimensionError(f"n={a.n} vs n={b.n}")


def symplectic_form(a: PauliPoint, b: PauliPoint) -> int:
    """[a, b] = a_X . b_Z + a_Z . b_X over Z_2."""
    _check(a, b)
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) & 1


def phi(a: PauliPoint) -> int:
    """Phase exponent a_X . a_Z as an integer (T_a = i^phi X^{a_X} Z^{a_Z})."""
    return (a.x & a.z).bit_count()


def _beta_raw(ax: int, az: int, bx: int, bz: int) -> int:
    num = (
        (ax & az).bit_count()
        + (bx & bz).bit_count()
        + 2 * (az & bx).bit_count()
        - ((ax ^ bx) & (az ^ bz)).bit_count()
    )
    return (num & 3) >> 1


def beta(a: PauliPoint, b: PauliPoint) -> int:
    """Sign bit with T_a T_b = (-1)^beta T_{a+b}; defined for commuting a, b."""
    if symplectic_form(a, b):
        raise NotSymplecticError(f"beta undefined: {a} and {b} anti-commute")
    return _beta_raw(a.x, a.z, b.x, b.z)


class PhasedRow(NamedTuple):
    """A tableau row: a point together with its value bit."""

    point: PauliPoint
    value: int = 0


def row_product(r1: PhasedRow, r2: PhasedRow) -> PhasedRow:
    """(a, s) * (b, r) = (a + b, s + r + beta(a, b)) for commuting a, b."""
    a, b = r1.point, r2.point
    return PhasedRow(a + b, (r1.value ^ r2.value ^ beta(a, b)) & 1)


# ---------------------------------------------------------------------------
# Gaussian elimination
# ---------------------------------------------------------------------------


class EliminationResult(NamedTuple):
    rank: int
    pivots: tuple[int, ...]
    """Pivot columns of the reduced basis (0..2n-1, x-half first)."""
    basis: tuple[PauliPoint, ...]
    """Fully reduced row-echelon basis, ordered by pivot column."""
    independent: tuple[int, ...]
    """Indices of input rows forming a basis (earliest rows preferred)."""


class _Reducer:
    """Incremental GF(2) elimination on packed integers with combination tracking."""

    __slots__ = ("rows", "combos")

    def __init__(self) -> None:
        # pivot bit -> packed row whose lowest set bit is the pivot
        self.rows: dict[int, int] = {}
        self.combos: dict[int, int] = {}

    def reduce(self, v: int, combo: int = 0) -> tuple[int, int]:
        while v:
            low = v & -v
            row = self.rows.get(low)
            if row is None:
                break
            v ^= row
            combo ^= self.combos[low]
        return v, combo

    def reduce_full(self, v: int, combo: int = 0) -> tuple[int, int]:
        """Clear every pivot bit from v, not just the leading one."""
        for low, row in self.rows.items():
            if v & low:
                v ^= row
                combo ^= self.combos[low]
        return v, combo

    def insert(self, v: int, combo: int) -> bool:
        v, combo = self.reduce(v, combo)
        if not v:
            return False
        low = v & -v
        self.rows[low] = v
        self.combos[low] = combo
        return True


def gaussian_elimination(rows: Iterable[PauliPoint]) -> EliminationResult:
    """Row-reduce over Z_2 with lowest-index pivoting."""
    rows = list(rows)
    if not rows:
        return EliminationResult(0, (), (), ())
    n = rows[0].n
    red = _Reducer()
    independent = []
    for i, r in enumerate(rows):
        if r.n != n:
            raise DimensionError("rows of mixed dimension")
        if red.insert(r.packed, 1 << i):
            independent.append(i)
    # back-substitute to reduced form
    pivots = sorted(red.rows)
    for p in pivots:
        row = red.rows[p]
        for q in pivots:
            if q != p and red.rows[q] & p:
                red.rows[q] ^= row
                red.combos[q] ^= red.combos[p]
    basis = tuple(PauliPoint.from_packed(red.rows[p], n) for p in pivots)
    return EliminationResult(
        len(pivots),
        tuple(p.bit_length() - 1 for p in pivots),
        basis,
        tuple(independent),
    )


def span_coordinates(b: PauliPoint, basis: Sequence[PauliPoint]) -> list[int] | None:
    """Coefficients c with b = sum c_i basis_i, or None if b is outside the span.

    ``basis`` must be linearly independent.
    """
    red = _Reducer()
    for i, v in enumerate(basis):
        _check(b, v)
        if not red.insert(v.packed, 1 << i):
            raise ValueError("basis is linearly dependent")
    rest, combo = red.reduce(b.packed)
    if rest:
        return None
    return [(combo >> i) & 1 for i in range(len(basis))]


def in_span(b: PauliPoint, vectors: Sequence[PauliPoint]) -> bool:
    red = _Reducer()
    for v in vectors:
        red.insert(v.packed, 0)
    return red.reduce(b.packed)[0] == 0


def solve_gf2(equations: Sequence[int], rhs: Sequence[int], nvars: int) -> list[int] | None:
    """Solve A y = rhs over Z_2; row i of A is the bit mask ``equations[i]``.

    Returns the solution with free variables set to zero, or None.
    """
    # augment with the rhs bit above all variable bits
    aug = [(eq & ((1 << nvars) - 1)) | ((r & 1) << nvars) for eq, r in zip(equations, rhs)]
    pivots: list[tuple[int, int]] = []
    row_idx = 0
    for col in range(nvars):
        bit = 1 << col
        sel = next((i for i in range(row_idx, len(aug)) if aug[i] & bit), None)
        if sel is None:
            continue
        aug[row_idx], aug[sel] = aug[sel], aug[row_idx]
        for i in range(len(aug)):
            if i != row_idx and aug[i] & bit:
                aug[i] ^= aug[row_idx]
        pivots.append((row_idx, col))
        row_idx += 1
    for i in range(row_idx, len(aug)):
        if aug[i] >> nvars:
            return None
    y = [0] * nvars
    for r, c in pivots:
        y[c] = (aug[r] >> nvars) & 1
    return y


def _combine(coeffs: Sequence[int], basis: Sequence[PauliPoint], n: int) -> PauliPoint:
    x = z = 0
    for c, v in zip(coeffs, basis):
        if c:
            x ^= v.x
            z ^= v.z
    return PauliPoint(n, x, z)


def symplectic_complement(vectors: Sequence[PauliPoint], n: int) -> list[PauliPoint]:
    """Basis of {u : [u, v] = 0 for all v in vectors}."""
    # [u, v] = u_X . v_Z + u_Z . v_X, i.e. u.packed dotted with swap(v)
    eqs = [v.z | (v.x << n) for v in vectors]
    red = _Reducer()
    for e in eqs:
        red.insert(e, 0)
    rows = dict(red.rows)
    pivots = sorted(rows)
    for p in pivots:
        for q in pivots:
            if q != p and rows[q] & p:
                rows[q] ^= rows[p]
    pivot_cols = {p.bit_length() - 1: rows[p] for p in pivots}
    out = []
    for free in range(2 * n):
        if free in pivot_cols:
            continue
        u = 1 << free
        for col, row in pivot_cols.items():
            if row >> free & 1:
                u |= 1 << col
        out.append(PauliPoint.from_packed(u, n))
    return out


# ---------------------------------------------------------------------------
# Symplectic Gram-Schmidt
# ---------------------------------------------------------------------------


def sgso(
    generators: Sequence[PauliPoint],
) -> tuple[list[tuple[PauliPoint, PauliPoint]], list[PauliPoint]]:
    """Symplectic Gram-Schmidt.

    Returns pairs ``(e'_i, f'_i)`` with [e'_i, f'_j] = delta_ij, mutually
    orthogonal across pairs, plus an independent residual basis for the radical
    of the span (vectors commuting with the whole span).
    """
    work = [g for g in generators]
    if not work:
        return [], []
    pairs: list[tuple[PauliPoint, PauliPoint]] = []
    residual: list[PauliPoint] = []
    while work:
        v = work.pop(0)
        if v.is_zero():
            continue
        j = next((i for i, w in enumerate(work) if symplectic_form(v, w)), None)
        if j is None:
            residual.append(v)
            continue
        w = work.pop(j)
        pairs.append((v, w))
        nxt = []
        for u in work:
            if symplectic_form(u, w):
                u = u + v
            if symplectic_form(u, v):
                u = u + w
            nxt.append(u)
        work = nxt
    # residual vectors already commute with all pairs; drop dependencies
    if residual:
        res = gaussian_elimination(residual)
        residual = [residual[i] for i in res.independent]
    return pairs, residual


# ---------------------------------------------------------------------------
# Jordan-Wigner sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JwSet:
    """A maximal anti-commuting set of 2m+1 points spanning a 2m-dim subspace.

    The degenerate m = 0 set is the single zero point.
    """

    n: int
    elements: tuple[PauliPoint, ...]

    @property
    def m(self) -> int:
        return (len(self.elements) - 1) // 2

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, k: int) -> PauliPoint:
        return self.elements[k]

    def violations(self) -> list[str]:
        out = []
        els = self.elements
        if len(els) % 2 == 0:
            out.append(f"even size {len(els)}")
        if len(els) == 1:
            if not els[0].is_zero():
                out.append("single-element JW set must be zero")
            return out
        for i in range(len(els)):
            for j in range(i + 1, len(els)):
                if not symplectic_form(els[i], els[j]):
                    out.append(f"elements {i} and {j} commute")
        total = PauliPoint.zero(self.n)
        for a in els:
            total = total + a
        if not total.is_zero():
            out.append("elements do not sum to zero")
        if gaussian_elimination(els[:-1]).rank != len(els) - 1:
            out.append("basis part is dependent")
        return out

    def is_valid(self) -> bool:
        return not self.violations()


def jw_transform(pairs: Sequence[tuple[PauliPoint, PauliPoint]]) -> JwSet:
    """JW set from a symplectic basis {(e_i, f_i)}; the last element is the total sum."""
    if not pairs:
        raise ValueError("empty basis; use JwSet(n, (zero,)) for m = 0")
    n = pairs[0][0].n
    for i, (e, f) in enumerate(pairs):
        for j, (e2, f2) in enumerate(pairs):
            want = int(i == j)
            if (
                symplectic_form(e, f2) != want
                or (i != j and (symplectic_form(e, e2) or symplectic_form(f, f2)))
            ):
                raise NotSymplecticError("input is not a symplectic basis")
    out = []
    prefix = PauliPoint.zero(n)
    for e, f in pairs:
        out.append(e + prefix)
        out.append(f + prefix)
        prefix = prefix + e + f
    out.append(prefix)
    return JwSet(n, tuple(out))


def inverse_jw_transform(
    elements: Sequence[PauliPoint],
) -> list[tuple[PauliPoint, PauliPoint]]:
    """Symplectic pairs from an anti-commuting list a_1..a_{2m} (a 2m+1-st entry is ignored)."""
    els = list(elements)
    if len(els) % 2 == 1:
        els = els[:-1]
    for i in range(len(els)):
        for j in range(i + 1, len(els)):
            if not symplectic_form(els[i], els[j]):
                raise NotSymplecticError(f"elements {i}, {j} commute")
    if not els:
        return []
    n = els[0].n
    pairs = []
    prefix = PauliPoint.zero(n)
    for i in range(0, len(els), 2):
        pairs.append((els[i] + prefix, els[i + 1] + prefix))
        prefix = prefix + els[i] + els[i + 1]
    return pairs


def jw_expand(b: PauliPoint, jw: JwSet) -> list[int]:
    """Coordinates nu_k = [a_{2m+1} + a_k, b] of b in the JW basis a_1..a_{2m}."""
    els = jw.elements
    if len(els) == 1:
        if b.is_zero():
            return []
        raise ValueError(f"{b} is outside the span of the JW basis")
    last = els[-1]
    nu = [symplectic_form(last + a, b) for a in els[:-1]]
    if _combine(nu, els[:-1], b.n) != b:
        raise ValueError(f"{b} is outside the span of the JW basis")
    return nu


def split_commuting(b: PauliPoint, jw: JwSet) -> tuple[list[int], list[int]]:
    """Indices of JW elements anti-commuting (A_b) and commuting (C_b) with b."""
    anti, comm = [], []
    for k, a in enumerate(jw.elements):
        (anti if symplectic_form(a, b) else comm).append(k)
    return anti, comm


def _sum(points: Iterable[PauliPoint], n: int) -> PauliPoint:
    total = PauliPoint.zero(n)
    for p in points:
        total = total + p
    return total


def complete_to_jw(
    S: Sequence[PauliPoint],
    n: int,
    within: Sequence[PauliPoint] | None = None,
) -> JwSet:
    """Extend a non-maximal anti-commuting set to a JW set.

    Without ``within`` the completion lives in E_n (2n+1 elements). With
    ``within`` (a basis of a symplectic subspace W containing S) it has
    dim W + 1 elements inside W. New elements are chosen deterministically:
    the first basis vector of the ambient space outside the current span.
    """
    S = list(S)
    for i in range(len(S)):
        if S[i].n != n:
            raise DimensionError("point dimension mismatch")
        for j in range(i + 1, len(S)):
            if not symplectic_form(S[i], S[j]):
                raise NotSymplecticError(f"elements {i}, {j} commute")
    if within is None:
        space = _canonical_space(n)
    else:
        space = list(within)
    dim = gaussian_elimination(space).rank if space else 0
    if dim % 2:
        raise NotSymplecticError("ambient subspace has odd dimension")
    for a in S:
        if not in_span(a, space):
            raise ValueError(f"{a} lies outside the ambient subspace")
    if len(S) % 2 == 1 and _sum(S, n).is_zero():
        raise NotSymplecticError("anti-commuting set is already maximal")
    if dim == 0:
        return JwSet(n, (PauliPoint.zero(n),))
    basis = gaussian_elimination(space)
    bvecs = list(basis.basis)
    # a zero point is not a valid element of a non-trivial JW set
    S = [a for a in S if not a.is_zero()]
    while len(S) < dim:
        if len(S) % 2 == 1:
            # solve [a_i, y] = 1 for all i with y in the ambient subspace
            eqs = []
            for a in S:
                mask = 0
                for j, v in enumerate(bvecs):
                    if symplectic_form(a, v):
                        mask |= 1 << j
                eqs.append(mask)
            y = solve_gf2(eqs, [1] * len(S), len(bvecs))
            if y is None:
                raise NotSymplecticError("anti-commuting set is already maximal")
            S.append(_combine(y, bvecs, n))
        else:
            c = next(v for v in space if not in_span(v, S))
            anti = [a for a in S if symplectic_form(a, c)]
            comm = [a for a in S if not symplectic_form(a, c)]
            if len(comm) % 2 == 1:
                c = c + _sum(anti, n)
            elif comm:
                c = c + _sum(comm, n)
            S.append(c)
    S.append(_sum(S, n))
    return JwSet(n, tuple(S))


# ---------------------------------------------------------------------------
# Jordan-Wigner decompositions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JwDecomposition:
    """E_n = I + W + I' with conjugate bases e_i (of I), f_i (of I') and a JW set of W."""

    n: int
    stabilizers: tuple[PauliPoint, ...]
    destabilizers: tuple[PauliPoint, ...]
    jw: JwSet

    @property
    def m(self) -> int:
        return self.n - len(self.stabilizers)

    def violations(self) -> list[str]:
        out = []
        es, fs = self.stabilizers, self.destabilizers
        if len(es) != len(fs):
            out.append("basis sizes differ")
        for i, e in enumerate(es):
            for j, f in enumerate(fs):
                if symplectic_form(e, f) != int(i == j):
                    out.append(f"[e_{i}, f_{j}] wrong")
            for e2 in es:
                if symplectic_form(e, e2):
                    out.append("stabilizers not isotropic")
        for f in fs:
            for f2 in fs:
                if symplectic_form(f, f2):
                    out.append("destabilizers not isotropic")
        for a in self.jw:
            for v in es + fs:
                if symplectic_form(a, v):
                    out.append(f"JW element {a} does not commute with {v}")
        out.extend(self.jw.violations())
        if len(es) + len(fs) + 2 * self.jw.m != 2 * self.n:
            out.append("dimensions do not add up to 2n")
        return out


def conjugate_basis(
    stabilizers: Sequence[PauliPoint],
    ambient: Sequence[PauliPoint],
    n: int,
) -> list[PauliPoint]:
    """Find f_1..f_k in span(ambient) with [e_i, f_j] = delta_ij and [f_i, f_j] = 0.

    Each f_j is obtained by GE on the linear conditions it must satisfy.
    """
    basis = list(ambient)
    fs: list[PauliPoint] = []
    for j in range(len(stabilizers)):
        eqs, rhs = [], []
        for i, e in enumerate(stabilizers):
            eqs.append(sum(symplectic_form(e, v) << t for t, v in enumerate(basis)))
            rhs.append(int(i == j))
        for f in fs:
            eqs.append(sum(symplectic_form(f, v) << t for t, v in enumerate(basis)))
            rhs.append(0)
        y = solve_gf2(eqs, rhs, len(basis))
        if y is None:
            raise NotSymplecticError("no conjugate basis in the given ambient space")
        fs.append(_combine(y, basis, n))
    return fs


def _canonical_space(n: int) -> list[PauliPoint]:
    return [v for i in range(n) for v in (PauliPoint.unit_x(i, n), PauliPoint.unit_z(i, n))]


def build_jw_decomposition(stabilizers: Sequence[PauliPoint], n: int | None = None) -> JwDecomposition:
    """JW decomposition of type m from an isotropic basis of dimension n - m."""
    es = list(stabilizers)
    if n is None:
        if not es:
            raise ValueError("n is required for an empty basis")
        n = es[0].n
    for e in es:
        if e.n != n:
            raise DimensionError("point dimension mismatch")
    if gaussian_elimination(es).rank != len(es):
        raise ValueError("stabilizer basis is linearly dependent")
    for i in range(len(es)):
        for j in range(i + 1, len(es)):
            if symplectic_form(es[i], es[j]):
                raise NotSymplecticError("stabilizer basis is not isotropic")
    fs = conjugate_basis(es, _canonical_space(n), n)
    w_basis = symplectic_complement(es + fs, n)
    pairs, residual = sgso(w_basis)
    if residual:
        raise NotSymplecticError("complement is degenerate")
    if pairs:
        jw = jw_transform(pairs)
    else:
        jw = JwSet(n, (PauliPoint.zero(n),))
    return JwDecomposition(n, tuple(es), tuple(fs), jw)
