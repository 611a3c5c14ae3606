"""Finite groupoids as dense index tables.

Objects and morphisms are non-negative integers.  A groupoid is stored as its
source/target maps, unit and inverse assignments, and a partial composition
table with ``UNDEFINED`` (-1) marking non-composable pairs.  ``compose(a, b)``
means "b first, then a" and is defined exactly when ``src[a] == tgt[b]``.

All instances are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

UNDEFINED = -1


class CompositionError(ValueError):
    """Composition requested for a non-composable pair."""


class InvalidGroupError(ValueError):
    """A multiplication table fails the group axioms."""


class GroupoidFormatError(ValueError):
    """A groupoid description file cannot be parsed into a well-formed table set."""


@dataclass(frozen=True)
class Violation:
    kind: str  # 'range' | 'domain' | 'unit' | 'inverse' | 'associativity'
    message: str

    def __str__(self):
        return f"[{self.kind}] {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def summary(self) -> str:
        if self.ok:
            return "ok: all groupoid axioms hold"
        lines = [f"{len(self.violations)} violation(s):"]
        lines += [f"  {v}" for v in self.violations]
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class FiniteGroupoid:
    """Dense-table groupoid: src/tgt maps, units, inverses, composition table."""

    n_objects: int
    src: np.ndarray
    tgt: np.ndarray
    unit_of: np.ndarray     # object -> morphism id of its unit
    inverse_of: np.ndarray  # morphism -> morphism id of its inverse
    table: np.ndarray       # table[a, b] = a∘b, UNDEFINED where src[a] != tgt[b]
    name: str = "groupoid"

    def __post_init__(self):
        for arr in (self.src, self.tgt, self.unit_of, self.inverse_of, self.table):
            arr.setflags(write=False)

    @property
    def n_morphisms(self) -> int:
        return int(self.src.shape[0])

    def source(self, m: int) -> int:
        return int(self.src[m])

    def target(self, m: int) -> int:
        return int(self.tgt[m])

    def unit(self, x: int) -> int:
        return int(self.unit_of[x])

    def inverse(self, m: int) -> int:
        return int(self.inverse_of[m])

    def is_unit(self, m: int) -> bool:
        return int(self.unit_of[self.src[m]]) == m

    def is_composable(self, a: int, b: int) -> bool:
        return bool(self.src[a] == self.tgt[b])

    def compose(self, a: int, b: int) -> int:
        c = int(self.table[a, b])
        if c == UNDEFINED:
            raise CompositionError(
                f"morphisms {a} and {b} are not composable "
                f"(src({a})={self.source(a)} != tgt({b})={self.target(b)})"
            )
        return c

    def compose_chain(self, ms) -> int:
        """Compose ms[-1] first, ..., ms[0] last (same order as a∘b∘c)."""
        ms = list(ms)
        if not ms:
            raise ValueError("empty composition chain")
        acc = ms[-1]
        for m in reversed(ms[:-1]):
            acc = self.compose(m, acc)
        return acc

    @cached_property
    def _hom(self) -> dict[tuple[int, int], tuple[int, ...]]:
        d: dict[tuple[int, int], list[int]] = {}
        for m in range(self.n_morphisms):
            d.setdefault((int(self.src[m]), int(self.tgt[m])), []).append(m)
        return {k: tuple(v) for k, v in d.items()}

    def hom_set(self, a: int, b: int) -> tuple[int, ...]:
        """Morphisms a -> b in ascending index order."""
        if not (0 <= a < self.n_objects and 0 <= b < self.n_objects):
            raise IndexError(f"object pair ({a}, {b}) out of range for {self.n_objects} objects")
        return self._hom.get((a, b), ())

    @cached_property
    def fibers(self) -> tuple[np.ndarray, ...]:
        """fibers[y] = morphism ids with target y (the fiber over y)."""
        out = []
        for y in range(self.n_objects):
            out.append(np.flatnonzero(self.tgt == y))
        return tuple(out)

    def __repr__(self):
        return (f"FiniteGroupoid({self.name!r}, objects={self.n_objects}, "
                f"morphisms={self.n_morphisms})")


# ---------------------------------------------------------------------------
# constructors


def pair_groupoid(n: int) -> FiniteGroupoid:
    """Groupoid of pairs on n objects: morphism (y, x): x -> y has id y*n + x."""
    if n < 1:
        raise ValueError("pair groupoid needs at least one object")
    ids = np.arange(n * n)
    y, x = np.divmod(ids, n)
    unit_of = np.arange(n) * n + np.arange(n)
    inverse_of = x * n + y
    # (ya,xa)∘(yb,xb) = (ya,xb) defined iff xa == yb
    res = y[:, None] * n + x[None, :]
    table = np.where(x[:, None] == y[None, :], res, UNDEFINED)
    return FiniteGroupoid(n, x, y, unit_of, inverse_of, table.astype(np.int32),
                          name=f"pair:{n}")


def _check_group_table(cayley: np.ndarray) -> tuple[int, np.ndarray]:
    """Validate a multiplication table; return (identity, inverses)."""
    k = cayley.shape[0]
    if cayley.shape != (k, k) or k == 0:
        raise InvalidGroupError("multiplication table must be a nonempty square matrix")
    if cayley.min() < 0 or cayley.max() >= k:
        raise InvalidGroupError("table entries out of range: not closed")
    idx = np.arange(k)
    ident = [e for e in range(k)
             if np.array_equal(cayley[e], idx) and np.array_equal(cayley[:, e], idx)]
    if len(ident) != 1:
        raise InvalidGroupError("table has no (or no unique) identity element")
    e = ident[0]
    # associativity, full triple scan
    lhs = cayley[cayley, :]            # lhs[a,b,c] = (ab)c
    rhs = cayley[:, cayley]            # rhs[a,b,c] = a(bc)
    if not np.array_equal(lhs, rhs):
        a, b, c = map(int, np.argwhere(lhs != rhs)[0])
        raise InvalidGroupError(f"table is not associative at ({a},{b},{c})")
    inverses = np.full(k, -1, dtype=np.int64)
    for a in range(k):
        cand = np.flatnonzero((cayley[a] == e) & (cayley[:, a] == e))
        if len(cand) != 1:
            raise InvalidGroupError(f"element {a} has no unique two-sided inverse")
        inverses[a] = cand[0]
    return e, inverses


def group_groupoid(cayley, inverses=None, identity=None, name=None) -> FiniteGroupoid:
    """One-object groupoid from a group multiplication table (validated)."""
    cayley = np.asarray(cayley, dtype=np.int64)
    e, inv = _check_group_table(cayley)
    if identity is not None and identity != e:
        raise InvalidGroupError(f"declared identity {identity} but table identity is {e}")
    if inverses is not None and not np.array_equal(np.asarray(inverses), inv):
        raise InvalidGroupError("declared inverses disagree with the table")
    k = cayley.shape[0]
    zeros = np.zeros(k, dtype=np.int64)
    return FiniteGroupoid(1, zeros, zeros.copy(), np.array([e]), inv,
                          cayley.astype(np.int32), name=name or f"group:{k}")


def cyclic_groupoid(k: int) -> FiniteGroupoid:
    """The cyclic group Z_k as a one-object groupoid."""
    if k < 1:
        raise ValueError("cyclic group order must be >= 1")
    a = np.arange(k)
    table = (a[:, None] + a[None, :]) % k
    return group_groupoid(table, name=f"cyclic:{k}")


def product_with_group(n: int, group: FiniteGroupoid) -> FiniteGroupoid:
    """Pair groupoid on n objects times a one-object group: morphisms (y; g; x)."""
    if group.n_objects != 1:
        raise ValueError("second factor must be a one-object groupoid (a group)")
    if n < 1:
        raise ValueError("pair factor needs at least one object")
    k = group.n_morphisms
    ids = np.arange(n * n * k)
    x = ids % n
    g = (ids // n) % k
    y = ids // (n * k)
    e = group.unit(0)
    ginv = np.asarray(group.inverse_of)
    unit_of = (np.arange(n) * k + e) * n + np.arange(n)
    inverse_of = (x * k + ginv[g]) * n + y
    # (ya; ga; xa)∘(yb; gb; xb) = (ya; ga·gb; xb) defined iff xa == yb
    gg = np.asarray(group.table)[g[:, None], g[None, :]]
    res = (y[:, None] * k + gg) * n + x[None, :]
    table = np.where(x[:, None] == y[None, :], res, UNDEFINED)
    return FiniteGroupoid(n, x, y, unit_of, inverse_of, table.astype(np.int32),
                          name=f"{group.name}-pairs:{n}")


# ---------------------------------------------------------------------------
# axiom validation


def validate_axioms(g: FiniteGroupoid, limit: int | None = None) -> ValidationReport:
    """Exhaustive axiom scan: ranges, composability domain, units, inverses,
    associativity on all composable triples.  Violations are report entries,
    never exceptions."""
    out: list[Violation] = []

    def full() -> bool:
        return limit is not None and len(out) >= limit

    M, n = g.n_morphisms, g.n_objects
    src, tgt, unit, inv, C = g.src, g.tgt, g.unit_of, g.inverse_of, g.table

    for x in np.flatnonzero((src < 0) | (src >= n)):
        out.append(Violation("range", f"src[{x}] out of range"))
    for x in np.flatnonzero((tgt < 0) | (tgt >= n)):
        out.append(Violation("range", f"tgt[{x}] out of range"))
    unit_ok = (unit >= 0) & (unit < M)
    inv_ok = (inv >= 0) & (inv < M)
    for x in np.flatnonzero(~unit_ok):
        out.append(Violation("unit", f"unit_of[{x}] = {int(unit[x])} is not a morphism"))
    for m in np.flatnonzero(~inv_ok):
        out.append(Violation("inverse", f"inverse_of[{m}] = {int(inv[m])} is not a morphism"))
    bad_entries = (C < UNDEFINED) | (C >= M)
    for a, b in np.argwhere(bad_entries):
        out.append(Violation("range", f"table[{a},{b}] = {int(C[a, b])} out of range"))
        if full():
            return ValidationReport(tuple(out))
    if out and (not unit_ok.all() or not inv_ok.all() or bad_entries.any()):
        # tables unusable for the law checks below where broken; still try the rest
        pass

    defined = (C >= 0) & (C < M)
    need = src[:, None] == tgt[None, :]

    # composability domain: defined exactly where src[a] == tgt[b]
    for a, b in np.argwhere(need != (C != UNDEFINED)):
        word = "missing" if need[a, b] else "spurious"
        out.append(Violation("domain", f"table[{a},{b}] {word}: defined iff src(a)=tgt(b)"))
        if full():
            return ValidationReport(tuple(out))

    # endpoints of defined compositions: s(a∘b)=s(b), t(a∘b)=t(a)
    da, db = np.nonzero(need & defined)
    res = C[da, db]
    bad = (src[res] != src[db]) | (tgt[res] != tgt[da])
    for i in np.flatnonzero(bad):
        out.append(Violation("domain",
                             f"table[{da[i]},{db[i]}] = {res[i]} has wrong endpoints"))
        if full():
            return ValidationReport(tuple(out))

    # unit endpoints and unit laws
    for x in range(n):
        if not unit_ok[x]:
            continue
        u = int(unit[x])
        if src[u] != x or tgt[u] != x:
            out.append(Violation("unit", f"unit_of[{x}] = {u} is not an endomorphism of {x}"))
    if unit_ok.all():
        r = C[np.arange(M), unit[src]]
        for m in np.flatnonzero(r != np.arange(M)):
            out.append(Violation("unit", f"m∘1_src(m) != m for morphism {m}"))
            if full():
                return ValidationReport(tuple(out))
        l = C[unit[tgt], np.arange(M)]
        for m in np.flatnonzero(l != np.arange(M)):
            out.append(Violation("unit", f"1_tgt(m)∘m != m for morphism {m}"))
            if full():
                return ValidationReport(tuple(out))

    # inverse laws
    if unit_ok.all():
        for m in range(M):
            if not inv_ok[m]:
                continue
            i = int(inv[m])
            if C[i, m] != unit[src[m]] or C[m, i] != unit[tgt[m]]:
                out.append(Violation("inverse", f"inverse law fails for morphism {m}"))
                if full():
                    return ValidationReport(tuple(out))

    # associativity on all composable triples, chunked over the first index
    chunk = max(1, min(64, (1 << 22) // max(M * M, 1)))
    Csafe = np.where(defined, C, 0)
    for a0 in range(0, M, chunk):
        A = np.arange(a0, min(a0 + chunk, M))
        AB = C[A]                          # (k, M)
        ab_def = (AB >= 0) & (AB < M)
        lhs = C[np.where(ab_def, AB, 0), :]          # lhs[i,b,c] = (a_i∘b)∘c
        rhs = C[A][:, Csafe]                         # rhs[i,b,c] = a_i∘(b∘c)
        mask = ab_def[:, :, None] & defined[None, :, :]
        bad = mask & (lhs != rhs)
        if bad.any():
            for i, b, c in np.argwhere(bad):
                out.append(Violation(
                    "associativity",
                    f"({int(A[i])}∘{b})∘{c} != {int(A[i])}∘({b}∘{c})"))
                if full():
                    return ValidationReport(tuple(out))
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# description files and builtin names


def builtin_groupoid(name: str) -> FiniteGroupoid:
    """Builtin constructors by name: pair:<n>, cyclic:<k>, pair_x_cyclic:<n>,<k>."""
    kind, _, arg = name.partition(":")
    try:
        if kind == "pair":
            return pair_groupoid(int(arg))
        if kind == "cyclic":
            return cyclic_groupoid(int(arg))
        if kind == "pair_x_cyclic":
            ns, ks = arg.split(",")
            return product_with_group(int(ns), cyclic_groupoid(int(ks)))
    except InvalidGroupError:
        raise
    except ValueError as exc:
        raise GroupoidFormatError(f"bad builtin groupoid spec {name!r}: {exc}") from exc
    raise GroupoidFormatError(f"unknown builtin groupoid {name!r}")


def _unique(seq, what):
    if len(seq) != 1:
        raise GroupoidFormatError(
            f"cannot infer {what}: expected exactly one candidate, found {len(seq)}")
    return seq[0]


def load_groupoid_file(path) -> FiniteGroupoid:
    """Load a groupoid description file (YAML).

    Required sections: ``objects: <n>`` and ``morphisms: [{id, src, tgt}, ...]``.
    Optional: ``compose: [[a, b, a∘b], ...]``, ``inverse: [[m, m⁻¹], ...]``,
    ``units: [[object, unit_id], ...]``.  Missing sections are inferred when the
    relevant hom sets are singletons; otherwise loading fails.
    """
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise GroupoidFormatError(f"cannot read groupoid file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise GroupoidFormatError(f"groupoid file {path} must be a mapping")
    try:
        n = int(data["objects"])
        morphs = data["morphisms"]
    except (KeyError, TypeError, ValueError) as exc:
        raise GroupoidFormatError(f"{path}: missing/invalid 'objects' or 'morphisms'") from exc
    if n < 1 or not isinstance(morphs, list) or not morphs:
        raise GroupoidFormatError(f"{path}: need at least one object and one morphism")
    M = len(morphs)
    src = np.full(M, -1, dtype=np.int64)
    tgt = np.full(M, -1, dtype=np.int64)
    for row in morphs:
        try:
            i, s, t = int(row["id"]), int(row["src"]), int(row["tgt"])
        except (KeyError, TypeError, ValueError) as exc:
            raise GroupoidFormatError(f"{path}: bad morphism row {row!r}") from exc
        if not (0 <= i < M):
            raise GroupoidFormatError(f"{path}: morphism id {i} not in 0..{M-1}")
        if src[i] != -1:
            raise GroupoidFormatError(f"{path}: duplicate morphism id {i}")
        if not (0 <= s < n and 0 <= t < n):
            raise GroupoidFormatError(f"{path}: morphism {i} endpoints out of range")
        src[i], tgt[i] = s, t

    hom: dict[tuple[int, int], list[int]] = {}
    for m in range(M):
        hom.setdefault((int(src[m]), int(tgt[m])), []).append(m)

    if "units" in data:
        unit_of = np.full(n, -1, dtype=np.int64)
        for x, u in data["units"]:
            if not (0 <= int(x) < n and 0 <= int(u) < M):
                raise GroupoidFormatError(f"{path}: bad units row [{x}, {u}]")
            unit_of[int(x)] = int(u)
    else:
        unit_of = np.array([_unique(hom.get((x, x), []), f"unit at object {x}")
                            for x in range(n)], dtype=np.int64)

    if "inverse" in data:
        inverse_of = np.full(M, -1, dtype=np.int64)
        for m, i in data["inverse"]:
            if not (0 <= int(m) < M and 0 <= int(i) < M):
                raise GroupoidFormatError(f"{path}: bad inverse row [{m}, {i}]")
            inverse_of[int(m)] = int(i)
    else:
        inverse_of = np.array(
            [_unique(hom.get((int(tgt[m]), int(src[m])), []), f"inverse of morphism {m}")
             for m in range(M)], dtype=np.int64)

    table = np.full((M, M), UNDEFINED, dtype=np.int32)
    if "compose" in data:
        for a, b, c in data["compose"]:
            a, b, c = int(a), int(b), int(c)
            if not (0 <= a < M and 0 <= b < M and 0 <= c < M):
                raise GroupoidFormatError(f"{path}: bad compose row [{a}, {b}, {c}]")
            table[a, b] = c
    else:
        for a in range(M):
            for b in range(M):
                if src[a] == tgt[b]:
                    table[a, b] = _unique(
                        hom.get((int(src[b]), int(tgt[a])), []),
                        f"composition {a}∘{b}")

    return FiniteGroupoid(n, src, tgt, unit_of, inverse_of, table, name=path.stem)


def save_groupoid_file(g: FiniteGroupoid, path) -> None:
    """Write the full description of g (explicit tables) as YAML."""
    data = {
        "objects": g.n_objects,
        "morphisms": [{"id": m, "src": g.source(m), "tgt": g.target(m)}
                      for m in range(g.n_morphisms)],
        "units": [[x, g.unit(x)] for x in range(g.n_objects)],
        "inverse": [[m, g.inverse(m)] for m in range(g.n_morphisms)],
        "compose": [[int(a), int(b), int(g.table[a, b])]
                    for a, b in np.argwhere(g.table != UNDEFINED)],
    }
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))


def resolve_groupoid(source: str) -> FiniteGroupoid:
    """Resolve a builtin constructor name or a path to a description file."""
    if source.partition(":")[0] in ("pair", "cyclic", "pair_x_cyclic"):
        return builtin_groupoid(source)
    if Path(source).exists():
        return load_groupoid_file(source)
    raise GroupoidFormatError(f"groupoid source {source!r}: not a builtin name or a file")
