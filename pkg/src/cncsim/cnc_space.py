"""Closed non-contextual (CNC) sets, value assignments and their enumeration.

A CNC set of type (n, m) is ``Omega = I  u  U_k (a_k + I)`` where ``I`` is an
isotropic center of dimension n - m and ``a_1..a_{2m+1}`` is a JW set in a
complement ``W`` of ``I`` inside ``I^perp``. A value assignment is stored on
generators only (center basis and JW elements); values elsewhere in Omega are
obtained by accumulating row products.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import factorial, prod
from typing import Iterable, Iterator, Sequence

from .symplectic import (
    NotSymplecticError,
    PauliPoint,
    PhasedRow,
    beta,
    build_jw_decomposition,
    complete_to_jw,
    gaussian_elimination,
    jw_transform,
    row_product,
    sgso,
    span_coordinates,
    symplectic_form,
)

__all__ = [
    "CncDescriptor",
    "InvalidDescriptorError",
    "canonical_cnc",
    "classify",
    "validate",
    "enlarge_center",
    "enlarge_jw",
    "count_formulas",
    "symplectic_group_order",
    "isotropic_subspace_count",
    "enumerate_maximal",
    "iter_maximal",
    "iter_stabilizer_states",
    "iter_isotropic_subspaces",
    "iter_jw_sets",
    "conjugate_row",
    "apply_clifford",
]


class InvalidDescriptorError(ValueError):
    pass


@dataclass(frozen=True)
class CncDescriptor:
    """Generators of a CNC set with optional value bits.

    ``center`` is a basis of I (n - m points); ``jw`` lists the JW elements
    (2m + 1 of them when maximal, a single zero point for m = 0). Value tuples
    are parallel to the point tuples, or None when only the set is described.
    """

    n: int
    m: int
    center: tuple[PauliPoint, ...]
    jw: tuple[PauliPoint, ...]
    center_values: tuple[int, ...] | None = None
    jw_values: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.center) != self.n - self.m:
            raise InvalidDescriptorError(
                f"center has {len(self.center)} generators, type ({self.n},{self.m}) needs {self.n - self.m}"
            )
        for v, pts in ((self.center_values, self.center), (self.jw_values, self.jw)):
            if v is not None and len(v) != len(pts):
                raise InvalidDescriptorError("value tuple length mismatch")

    @property
    def has_values(self) -> bool:
        return self.center_values is not None and self.jw_values is not None

    @property
    def is_maximal(self) -> bool:
        return len(self.jw) == 2 * self.m + 1

    def center_rows(self) -> list[PhasedRow]:
        vals = self.center_values or (0,) * len(self.center)
        return [PhasedRow(p, v) for p, v in zip(self.center, vals)]

    def jw_rows(self) -> list[PhasedRow]:
        vals = self.jw_values or (0,) * len(self.jw)
        return [PhasedRow(p, v) for p, v in zip(self.jw, vals)]

    def with_values(self, center_values: Sequence[int], jw_values: Sequence[int]) -> CncDescriptor:
        return replace(
            self,
            center_values=tuple(int(v) & 1 for v in center_values),
            jw_values=tuple(int(v) & 1 for v in jw_values),
        )

    # -- membership and values ---------------------------------------------

    def _locate(self, b: PauliPoint) -> tuple[int | None, list[int]] | None:
        """Write b = a_k + sum c_i e_i (k may be None); None if b is outside Omega."""
        if self.center:
            coords = span_coordinates(b, self.center)
        else:
            coords = [] if b.is_zero() else None
        if coords is not None:
            return None, coords
        for k, a in enumerate(self.jw):
            if a.is_zero():
                continue
            rest = b + a
            if self.center:
                coords = span_coordinates(rest, self.center)
            else:
                coords = [] if rest.is_zero() else None
            if coords is not None:
                return k, coords
        return None

    def contains(self, b: PauliPoint) -> bool:
        return self._locate(b) is not None

    def gamma(self, b: PauliPoint) -> int:
        """Value of b by row-product accumulation over its generator expansion."""
        if not self.has_values:
            raise InvalidDescriptorError("descriptor carries no values")
        loc = self._locate(b)
        if loc is None:
            raise ValueError(f"{b} is not in Omega")
        k, coords = loc
        acc = PhasedRow(PauliPoint.zero(self.n), 0)
        if k is not None:
            acc = PhasedRow(self.jw[k], self.jw_values[k])
        for c, row in zip(coords, self.center_rows()):
            if c:
                acc = row_product(acc, row)
        assert acc.point == b
        return acc.value

    def omega(self) -> list[PauliPoint]:
        """All points of Omega (exponential in n - m; intended for small n)."""
        return [p for p, _ in self.omega_with_values()]

    def omega_with_values(self) -> list[tuple[PauliPoint, int]]:
        """Points of Omega with values, one entry per distinct point.

        Raises InvalidDescriptorError if two generator expansions of the same
        point disagree on its value.
        """
        seen: dict[PauliPoint, int] = {}
        center = self.center_rows()
        starts = [PhasedRow(PauliPoint.zero(self.n), 0)] + self.jw_rows()
        for start in starts:
            for mask in range(1 << len(center)):
                acc = start
                for i, row in enumerate(center):
                    if mask >> i & 1:
                        acc = row_product(acc, row)
                prev = seen.get(acc.point)
                if prev is None:
                    seen[acc.point] = acc.value
                elif prev != acc.value and self.has_values:
                    raise InvalidDescriptorError(
                        f"inconsistent values for {acc.point}: {prev} vs {acc.value}"
                    )
        return sorted(seen.items(), key=lambda kv: kv[0].packed)

    # -- text form -----------------------------------------------------------

    def to_lines(self) -> list[str]:
        lines = [f"{self.n} {self.m}"]
        for row in self.center_rows() + self.jw_rows():
            lines.append(f"{row.point.bitstring()} {row.value}")
        return lines

    def to_text(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    def to_inline(self) -> str:
        return ";".join(self.to_lines())

    @classmethod
    def from_lines(cls, lines: Sequence[str]) -> CncDescriptor:
        lines = [ln.strip() for ln in lines if ln.strip() and not ln.strip().startswith("#")]
        if not lines:
            raise InvalidDescriptorError("empty descriptor")
        try:
            n, m = (int(t) for t in lines[0].split())
        except ValueError as exc:
            raise InvalidDescriptorError(f"bad header {lines[0]!r}") from exc
        rows = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2 or len(parts[0]) != 2 * n or set(parts[0]) - {"0", "1"} or parts[1] not in ("0", "1"):
                raise InvalidDescriptorError(f"bad row {ln!r}")
            rows.append((PauliPoint.from_bitstring(parts[0]), int(parts[1])))
        k = n - m
        if len(rows) < k + 1:
            raise InvalidDescriptorError("too few rows")
        return cls(
            n,
            m,
            tuple(p for p, _ in rows[:k]),
            tuple(p for p, _ in rows[k:]),
            tuple(v for _, v in rows[:k]),
            tuple(v for _, v in rows[k:]),
        )

    @classmethod
    def from_text(cls, text: str) -> CncDescriptor:
        return cls.from_lines(text.splitlines())

    @classmethod
    def from_inline(cls, text: str) -> CncDescriptor:
        return cls.from_lines(text.split(";"))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    ok: bool
    problems: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _structure_problems(desc: CncDescriptor) -> list[str]:
    out = []
    n = desc.n
    pts = list(desc.center) + list(desc.jw)
    if any(p.n != n for p in pts):
        return ["point dimension mismatch"]
    if desc.center and gaussian_elimination(desc.center).rank != len(desc.center):
        out.append("center basis is dependent")
    for i, e in enumerate(desc.center):
        for e2 in desc.center[i + 1 :]:
            if symplectic_form(e, e2):
                out.append(f"center elements {e} and {e2} anti-commute")
        for a in desc.jw:
            if symplectic_form(e, a):
                out.append(f"center element {e} anti-commutes with JW element {a}")
    jw = list(desc.jw)
    if desc.m == 0:
        if len(jw) != 1 or not jw[0].is_zero():
            out.append("type (n,0) needs the single zero JW element")
        return out
    for i in range(len(jw)):
        for j in range(i + 1, len(jw)):
            if not symplectic_form(jw[i], jw[j]):
                out.append(f"JW elements {i} and {j} commute")
    # JW elements must be independent modulo the center
    free = jw[:-1] if desc.is_maximal else jw
    if gaussian_elimination(list(desc.center) + free).rank != len(desc.center) + len(free):
        out.append("JW elements are dependent modulo the center")
    if len(jw) > 2 * desc.m + 1:
        out.append("more JW elements than 2m+1")
    if desc.is_maximal:
        total = PauliPoint.zero(n)
        for a in jw:
            total = total + a
        if desc.center:
            if span_coordinates(total, desc.center) is None:
                out.append("JW elements do not sum into the center")
        elif not total.is_zero():
            out.append("JW elements do not sum to zero")
    return out


def validate(desc: CncDescriptor, exhaustive_limit: int = 3) -> ValidationReport:
    """Check structure and the value-assignment law.

    For n <= ``exhaustive_limit`` every commuting pair of Omega is tested;
    beyond that the structural checks guarantee every point has a unique
    generator expansion, so the law holds by construction of the accumulation.
    """
    problems = _structure_problems(desc)
    if problems:
        return ValidationReport(False, problems)
    if not desc.has_values:
        return ValidationReport(False, ["descriptor carries no values"])
    if desc.n <= exhaustive_limit:
        try:
            table = dict(desc.omega_with_values())
        except InvalidDescriptorError as exc:
            return ValidationReport(False, [str(exc)])
        if table.get(PauliPoint.zero(desc.n), 0) != 0:
            problems.append("gamma(0) != 0")
        items = list(table.items())
        for i, (a, ga) in enumerate(items):
            for b, gb in items[i:]:
                if symplectic_form(a, b):
                    continue
                c = a + b
                if c not in table:
                    problems.append(f"Omega not closed: {a} + {b}")
                    continue
                if table[c] != (ga ^ gb ^ beta(a, b)):
                    problems.append(f"value law fails on {a}, {b}")
    return ValidationReport(not problems, problems)


# ---------------------------------------------------------------------------
# Construction and classification
# ---------------------------------------------------------------------------


def canonical_cnc(n: int, m: int) -> CncDescriptor:
    """Center <z_1..z_{n-m}>, canonical JW set on the last m qubits, zero values."""
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    center = tuple(PauliPoint.unit_z(i, n) for i in range(n - m))
    if m == 0:
        jw = (PauliPoint.zero(n),)
    else:
        pairs = [(PauliPoint.unit_x(i, n), PauliPoint.unit_z(i, n)) for i in range(n - m, n)]
        jw = jw_transform(pairs).elements
    return CncDescriptor(n, m, center, jw, (0,) * len(center), (0,) * len(jw))


def _span_points(basis: Sequence[PauliPoint], n: int) -> set[PauliPoint]:
    pts = {PauliPoint.zero(n)}
    for b in basis:
        pts |= {p + b for p in pts}
    return pts


def classify(omega: Iterable[PauliPoint]) -> CncDescriptor:
    """Recover (center, JW representatives) from an explicit closed set."""
    pts = set(omega)
    if not pts:
        raise ValueError("empty set")
    n = next(iter(pts)).n
    zero = PauliPoint.zero(n)
    if zero not in pts:
        raise ValueError("set does not contain the identity")
    for a in pts:
        for b in pts:
            if not symplectic_form(a, b) and (a + b) not in pts:
                raise ValueError(f"set is not closed: {a} + {b}")
    center_pts = [a for a in pts if all(not symplectic_form(a, b) for b in pts)]
    elim = gaussian_elimination(center_pts)
    center = elim.basis
    if len(_span_points(center, n)) != len(center_pts):
        raise ValueError("center is not a subspace")
    dec = build_jw_decomposition(list(center), n)
    # project each point onto W = complement spanned by the decomposition's JW set
    w_basis = list(dec.jw.elements[:-1]) if dec.jw.m else []
    full = list(center) + w_basis
    reps: set[PauliPoint] = set()
    for a in pts:
        coords = span_coordinates(a, full)
        if coords is None:
            raise ValueError(f"{a} is not in the commutant of the center")
        proj = zero
        for c, v in zip(coords[len(center):], w_basis):
            if c:
                proj = proj + v
        if not proj.is_zero():
            reps.add(proj)
    reps_list = sorted(reps, key=lambda p: p.packed)
    for i in range(len(reps_list)):
        for j in range(i + 1, len(reps_list)):
            if not symplectic_form(reps_list[i], reps_list[j]):
                raise ValueError("coset representatives do not anti-commute")
    center_span = _span_points(center, n)
    expected = set(center_span)
    for r in reps_list:
        expected |= {r + c for c in center_span}
    if expected != pts:
        raise ValueError("set is not a union of center cosets")
    m = n - len(center)
    jw = tuple(reps_list) if reps_list else (zero,)
    return CncDescriptor(n, m, tuple(center), jw)


# ---------------------------------------------------------------------------
# Enlargement
# ---------------------------------------------------------------------------


def _project_onto(desc_center: Sequence[PauliPoint], n: int) -> tuple[list[PauliPoint], list[PauliPoint]]:
    """Return (center, W basis) for a JW decomposition built on the center."""
    dec = build_jw_decomposition(list(desc_center), n)
    w = list(dec.jw.elements[:-1]) if dec.jw.m else []
    return list(dec.stabilizers), w


def _projected_jw_rows(
    rows: Sequence[PhasedRow], center: Sequence[PhasedRow], w_basis: Sequence[PauliPoint], n: int
) -> list[PhasedRow]:
    """Replace each JW row (a, g) by (proj_W a, value) with the center part divided out."""
    basis = [r.point for r in center] + list(w_basis)
    out = []
    for row in rows:
        coords = span_coordinates(row.point, basis)
        if coords is None:
            raise NotSymplecticError(f"{row.point} is not in the commutant of the center")
        acc = row
        for c, crow in zip(coords, center):
            if c:
                acc = row_product(acc, crow)
        out.append(acc)
    return out


def enlarge_center(desc: CncDescriptor, J: Sequence[PauliPoint], s: Sequence[int]) -> CncDescriptor:
    """Extend the center by an isotropic J, new values s on J's basis."""
    if not desc.has_values:
        raise InvalidDescriptorError("descriptor carries no values")
    l_ = (len(desc.jw) - 1) // 2
    t = desc.m - l_
    J = list(J)
    if len(J) != t or len(s) != t:
        raise ValueError(f"need dim J = m - l = {t}")
    for v in J:
        for e in desc.center:
            if symplectic_form(v, e):
                raise NotSymplecticError("J is not inside the commutant of the center")
        for a in desc.jw:
            if symplectic_form(v, a):
                raise NotSymplecticError("J does not commute with the JW elements")
        for v2 in J:
            if symplectic_form(v, v2):
                raise NotSymplecticError("J is not isotropic")
    new_center = list(desc.center) + J
    if gaussian_elimination(new_center).rank != len(new_center):
        raise ValueError("J meets the center")
    center_rows = desc.center_rows() + [PhasedRow(v, int(b) & 1) for v, b in zip(J, s)]
    _, w = _project_onto(new_center, desc.n)
    jw_rows = _projected_jw_rows(desc.jw_rows(), center_rows, w, desc.n)
    return CncDescriptor(
        desc.n,
        l_,
        tuple(new_center),
        tuple(r.point for r in jw_rows),
        tuple(r.value for r in center_rows),
        tuple(r.value for r in jw_rows),
    )


def enlarge_jw(desc: CncDescriptor, s: Sequence[int]) -> CncDescriptor:
    """Complete a non-maximal JW part inside W, new values s."""
    if not desc.has_values:
        raise InvalidDescriptorError("descriptor carries no values")
    if desc.m == 0:
        # a stabilizer state is never a maximal CNC set: release e_n from the
        # center and complete {e_n} to a JW triple in the freed plane
        if desc.n == 0:
            raise NotSymplecticError("nothing to enlarge in E_0")
        *keep, last = desc.center
        keep_vals = desc.center_values[:-1]
        widened = CncDescriptor(desc.n, 1, tuple(keep), (last,), tuple(keep_vals), (desc.center_values[-1],))
        return enlarge_jw(widened, s)
    if desc.is_maximal:
        raise NotSymplecticError("anti-commuting set is already maximal")
    n = desc.n
    center, w = _project_onto(desc.center, n)
    center_rows = desc.center_rows()
    rows = [r for r in desc.jw_rows() if not r.point.is_zero()]
    rows = _projected_jw_rows(rows, center_rows, w, n)
    full = complete_to_jw([r.point for r in rows], n, within=w)
    extra = full.elements[len(rows):]
    if len(s) != len(extra):
        raise ValueError(f"need {len(extra)} new values")
    jw_rows = rows + [PhasedRow(p, int(b) & 1) for p, b in zip(extra, s)]
    return CncDescriptor(
        n,
        desc.m,
        desc.center,
        tuple(r.point for r in jw_rows),
        desc.center_values,
        tuple(r.value for r in jw_rows),
    )


# ---------------------------------------------------------------------------
# Counting
# ---------------------------------------------------------------------------


def symplectic_group_order(m: int) -> int:
    return 2 ** (m * m) * prod(4**j - 1 for j in range(1, m + 1))


def isotropic_subspace_count(n: int, d: int) -> int:
    """Number of d-dimensional isotropic subspaces of E_n."""
    num = prod(4 ** (n - k + 1) - 1 for k in range(1, d + 1))
    den = prod(2**k - 1 for k in range(1, d + 1))
    assert num % den == 0
    return num // den


def count_formulas(n: int, m: int) -> tuple[int, int, int]:
    """(N_{n,m}, V_{n,m}, M_{n,m}) for maximal CNC sets of type (n, m)."""
    if not 1 <= m <= n:
        raise ValueError("counting formulas need 1 <= m <= n")
    jw_sets = symplectic_group_order(m) // factorial(2 * m + 1)
    N = isotropic_subspace_count(n, n - m) * jw_sets
    V = 2 ** (n + m + 1)
    return N, V, N * V


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def _rref_key(basis: Sequence[PauliPoint]) -> tuple[int, ...]:
    return tuple(sorted(p.packed for p in gaussian_elimination(basis).basis))


def iter_isotropic_subspaces(n: int, d: int) -> Iterator[tuple[PauliPoint, ...]]:
    """All d-dimensional isotropic subspaces of E_n, as reduced bases."""
    nonzero = [PauliPoint.from_packed(v, n) for v in range(1, 1 << (2 * n))]
    level: dict[tuple[int, ...], tuple[PauliPoint, ...]] = {(): ()}
    for _ in range(d):
        nxt: dict[tuple[int, ...], tuple[PauliPoint, ...]] = {}
        for basis in level.values():
            span = _span_points(basis, n)
            for v in nonzero:
                if v in span or any(symplectic_form(v, b) for b in basis):
                    continue
                new = basis + (v,)
                key = _rref_key(new)
                if key not in nxt:
                    nxt[key] = tuple(gaussian_elimination(new).basis)
        level = nxt
    yield from (level[k] for k in sorted(level))


def iter_jw_sets(m: int) -> Iterator[tuple[PauliPoint, ...]]:
    """All JW sets of E_m (as sorted tuples), for small m."""
    if m == 0:
        yield (PauliPoint.zero(0),)
        return
    pts = [PauliPoint.from_packed(v, m) for v in range(1, 1 << (2 * m))]
    found: set[tuple[int, ...]] = set()

    def extend(chosen: list[PauliPoint], start: int) -> Iterator[tuple[PauliPoint, ...]]:
        if len(chosen) == 2 * m:
            total = PauliPoint.zero(m)
            for a in chosen:
                total = total + a
            full = sorted(chosen + [total], key=lambda p: p.packed)
            key = tuple(p.packed for p in full)
            if key not in found:
                found.add(key)
                yield tuple(full)
            return
        for i in range(start, len(pts)):
            v = pts[i]
            if all(symplectic_form(v, c) for c in chosen):
                # anti-commuting sets smaller than 2m+1 with distinct elements are independent
                yield from extend(chosen + [v], i + 1)

    yield from extend([], 0)


def _embed(p: PauliPoint, pairs: Sequence[tuple[PauliPoint, PauliPoint]], n: int) -> PauliPoint:
    out = PauliPoint.zero(n)
    for i, (e, f) in enumerate(pairs):
        if p.x >> i & 1:
            out = out + e
        if p.z >> i & 1:
            out = out + f
    return out


def iter_maximal(n: int, m: int | None = None, values: bool = True) -> Iterator[CncDescriptor]:
    """All maximal CNC descriptors of type (n, m) for m >= 1 (or every m >= 1 if None).

    Exponential; practical up to n = 3.
    """
    ms = range(1, n + 1) if m is None else [m]
    jw_cache = {mm: list(iter_jw_sets(mm)) for mm in ms}
    for mm in ms:
        for center in iter_isotropic_subspaces(n, n - mm):
            dec = build_jw_decomposition(list(center), n)
            pairs, _ = sgso(list(dec.jw.elements[:-1]))
            for local in jw_cache[mm]:
                jw = tuple(_embed(p, pairs, n) for p in local)
                base = CncDescriptor(n, mm, tuple(center), jw)
                if not values:
                    yield base
                    continue
                k = len(center)
                for bits in range(1 << (k + len(jw))):
                    cv = tuple(bits >> i & 1 for i in range(k))
                    jv = tuple(bits >> (k + i) & 1 for i in range(len(jw)))
                    yield base.with_values(cv, jv)


def iter_stabilizer_states(n: int) -> Iterator[CncDescriptor]:
    """All type (n, 0) descriptors: maximal isotropic subspaces with all sign choices."""
    zero = (PauliPoint.zero(n),)
    for center in iter_isotropic_subspaces(n, n):
        for bits in range(1 << n):
            yield CncDescriptor(n, 0, tuple(center), zero, tuple(bits >> i & 1 for i in range(n)), (0,))


def enumerate_maximal(n: int) -> list[CncDescriptor]:
    """Every maximal CNC operator (m >= 1) for n <= 2, deduplicated."""
    if n > 2:
        raise ValueError("exhaustive enumeration is limited to n <= 2")
    if n < 1:
        raise ValueError("n must be positive")
    out: dict[tuple, CncDescriptor] = {}
    for desc in iter_maximal(n):
        table = desc.omega_with_values()
        key = tuple((p.packed, v) for p, v in table)
        out.setdefault(key, desc)
    return list(out.values())


# ---------------------------------------------------------------------------
# Clifford action on rows
# ---------------------------------------------------------------------------


def conjugate_row(row: PhasedRow, gate: tuple) -> PhasedRow:
    """Conjugate (point, value) by a gate ("H", q), ("S", q) or ("CX", c, t); 0-based qubits."""
    p, s = row
    x, z = p.x, p.z
    name = gate[0]
    if name == "H":
        q = gate[1]
        xb, zb = x >> q & 1, z >> q & 1
        s ^= xb & zb
        x = (x & ~(1 << q)) | (zb << q)
        z = (z & ~(1 << q)) | (xb << q)
    elif name == "S":
        q = gate[1]
        xb, zb = x >> q & 1, z >> q & 1
        s ^= xb & zb
        z ^= xb << q
    elif name == "CX":
        c, t = gate[1], gate[2]
        if c == t:
            raise ValueError("CX needs distinct qubits")
        xc, zc, xt, zt = x >> c & 1, z >> c & 1, x >> t & 1, z >> t & 1
        s ^= xc & zt & (xt ^ zc ^ 1)
        x ^= xc << t
        z ^= zt << c
    else:
        raise ValueError(f"unknown gate {name!r}")
    return PhasedRow(PauliPoint(p.n, x, z), s & 1)


def apply_clifford(desc: CncDescriptor, gates: Iterable[tuple]) -> CncDescriptor:
    """Image of a descriptor under conjugation by a gate word (applied left to right)."""
    crows, jrows = desc.center_rows(), desc.jw_rows()
    for g in gates:
        crows = [conjugate_row(r, g) for r in crows]
        jrows = [conjugate_row(r, g) for r in jrows]
    return CncDescriptor(
        desc.n,
        desc.m,
        tuple(r.point for r in crows),
        tuple(r.point for r in jrows),
        tuple(r.value for r in crows) if desc.center_values is not None else None,
        tuple(r.value for r in jrows) if desc.jw_values is not None else None,
    )
