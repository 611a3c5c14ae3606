"""Discrete histories over finite time grids.

A future-oriented history over times t_0 < ... < t_N stores its accumulated
transitions w(t_k, t_0) (entry 0 is a unit, all entries share the source
object).  A past-oriented history stores the transitions in the opposite
sense, x_k -> reference, so inversion is an entrywise table lookup.  The
assignment of a transition to every ordered pair of grid slices satisfies the
cocycle law acc(l, k) = acc(l, j) ∘ acc(j, k) exactly.

Mixed-orientation products do not merge into single histories; they live in
reduced words whose adjacent (segment, inverse-segment) pairs cancel.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .groupoid import FiniteGroupoid

FUTURE = "future"
PAST = "past"


class GridError(ValueError):
    """A time is not on the grid, or sub-interval endpoints are invalid."""


class ChainError(ValueError):
    """Links are inconsistent, or history endpoints do not match."""


@dataclass(frozen=True)
class TimeGrid:
    times: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times:
            raise GridError("a time grid needs at least one time")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise GridError("grid times must be strictly increasing")
        object.__setattr__(self, "times", times)

    @classmethod
    def uniform(cls, t0: float, t1: float, n: int) -> "TimeGrid":
        if n < 1:
            raise GridError("uniform grid needs at least one interval")
        return cls(tuple(t0 + (t1 - t0) * k / n for k in range(n + 1)))

    @classmethod
    def single(cls, t: float) -> "TimeGrid":
        return cls((t,))

    @property
    def n_intervals(self) -> int:
        return len(self.times) - 1

    def dt(self, k: int) -> float:
        return self.times[k + 1] - self.times[k]

    @property
    def is_uniform(self) -> bool:
        if self.n_intervals <= 1:
            return True
        steps = np.diff(self.times)
        return bool(np.max(np.abs(steps - steps[0])) <= 1e-12 * max(abs(self.times[-1]), 1.0))

    def index_of(self, t: float) -> int:
        for k, tk in enumerate(self.times):
            if tk == t or abs(tk - t) <= 1e-12 * max(abs(tk), abs(t), 1.0):
                return k
        raise GridError(f"time {t} is not on the grid")

    def sub(self, i: int, j: int) -> "TimeGrid":
        if not (0 <= i <= j < len(self.times)):
            raise GridError(f"bad sub-interval indices ({i}, {j})")
        return TimeGrid(self.times[i:j + 1])


@dataclass(frozen=True)
class History:
    groupoid: FiniteGroupoid
    grid: TimeGrid
    accumulated: tuple[int, ...]
    orientation: str = FUTURE

    def __post_init__(self):
        g = self.groupoid
        acc = tuple(int(m) for m in self.accumulated)
        object.__setattr__(self, "accumulated", acc)
        if self.orientation not in (FUTURE, PAST):
            raise ValueError(f"unknown orientation {self.orientation!r}")
        if len(acc) != len(self.grid.times):
            raise ChainError("history needs one accumulated transition per grid time")
        ref = g.source(acc[0])
        if not g.is_unit(acc[0]):
            raise ChainError("the first accumulated transition must be a unit")
        anchored = g.src if self.orientation == FUTURE else g.tgt
        if any(anchored[m] != ref for m in acc):
            raise ChainError("accumulated transitions must share the reference object")

    @property
    def reference_object(self) -> int:
        return self.groupoid.source(self.accumulated[0])

    @property
    def n_intervals(self) -> int:
        return self.grid.n_intervals

    @property
    def length(self) -> int:
        """Link count including the normalising unit (= n_intervals + 1)."""
        return len(self.accumulated)

    @property
    def source(self) -> tuple[int, float]:
        if self.orientation == FUTURE:
            return (self.reference_object, self.grid.times[0])
        return (self.groupoid.source(self.accumulated[-1]), self.grid.times[-1])

    @property
    def target(self) -> tuple[int, float]:
        if self.orientation == FUTURE:
            return (self.groupoid.target(self.accumulated[-1]), self.grid.times[-1])
        return (self.reference_object, self.grid.times[0])

    def object_at(self, k: int) -> int:
        g = self.groupoid
        m = self.accumulated[k]
        return g.target(m) if self.orientation == FUTURE else g.source(m)


def trivial_history(g: FiniteGroupoid, x: int, t: float,
                    orientation: str = FUTURE) -> History:
    return History(g, TimeGrid.single(t), (g.unit(x),), orientation)


def from_links(g: FiniteGroupoid, grid: TimeGrid, links, x0: int | None = None) -> History:
    """Future history from its consistent link sequence (one link per interval).

    An empty link list on a single-time grid yields the trivial history at x0.
    """
    links = [int(m) for m in links]
    if len(links) != grid.n_intervals:
        raise ChainError(f"need {grid.n_intervals} links, got {len(links)}")
    if not links:
        if x0 is None:
            raise ChainError("an empty link list needs an explicit start object")
        return History(g, grid, (g.unit(x0),), FUTURE)
    for a, b in zip(links[1:], links):
        if g.source(a) != g.target(b):
            raise ChainError(f"inconsistent links: src({a}) != tgt({b})")
    start = g.source(links[0])
    if x0 is not None and x0 != start:
        raise ChainError(f"declared start object {x0} != src of first link {start}")
    acc = [g.unit(start)]
    for m in links:
        acc.append(g.compose(m, acc[-1]))
    return History(g, grid, tuple(acc), FUTURE)


def links_of(w: History) -> tuple[int, ...]:
    """Per-interval transitions.  Future: slice k-1 -> k; past: slice k -> k-1."""
    g = w.groupoid
    acc = w.accumulated
    if w.orientation == FUTURE:
        return tuple(g.compose(acc[k], g.inverse(acc[k - 1])) for k in range(1, len(acc)))
    return tuple(g.compose(g.inverse(acc[k - 1]), acc[k]) for k in range(1, len(acc)))


def accumulated(w: History, l: int, k: int) -> int:
    """Transition the history assigns to the slice pair: future x_k -> x_l,
    past x_l -> x_k.  Satisfies the cocycle law in both orientations."""
    acc = w.accumulated
    if not (0 <= l < len(acc) and 0 <= k < len(acc)):
        raise IndexError(f"slice indices ({l}, {k}) out of range")
    g = w.groupoid
    if w.orientation == FUTURE:
        return g.compose(acc[l], g.inverse(acc[k]))
    return g.compose(g.inverse(acc[k]), acc[l])


def invert_history(w: History) -> History:
    """Orientation flip with entrywise inversion of the accumulated transitions."""
    g = w.groupoid
    flipped = PAST if w.orientation == FUTURE else FUTURE
    return History(g, w.grid, tuple(g.inverse(m) for m in w.accumulated), flipped)


def compose_histories(w2: History, w1: History):
    """w2 after w1.  Same orientation with matching endpoints merges into one
    history; an orientation mismatch is routed to the word machinery and the
    result is a reduced word."""
    if w1.groupoid is not w2.groupoid:
        raise ChainError("histories live on different groupoids")
    if w1.orientation != w2.orientation:
        return reduce_word([w1, w2])
    if w1.target != w2.source:
        raise ChainError(f"endpoint mismatch: target {w1.target} != source {w2.source}")
    g = w1.groupoid
    if w1.orientation == FUTURE:
        grid = TimeGrid(w1.grid.times + w2.grid.times[1:])
        junction = w1.accumulated[-1]
        acc = w1.accumulated + tuple(g.compose(m, junction) for m in w2.accumulated[1:])
        return History(g, grid, acc, FUTURE)
    return invert_history(compose_histories(invert_history(w1), invert_history(w2)))


def change_reference(w: History, tau: float) -> tuple[int, ...]:
    """Accumulated transitions re-anchored at grid time tau."""
    j = w.grid.index_of(tau)
    g = w.groupoid
    acc = w.accumulated
    if w.orientation == FUTURE:
        base = g.inverse(acc[j])
        return tuple(g.compose(m, base) for m in acc)
    base = g.inverse(acc[j])
    return tuple(g.compose(base, m) for m in acc)


def restrict(w: History, t_lo: float, t_hi: float) -> History:
    """Restriction to the grid sub-interval [t_lo, t_hi], re-anchored at t_lo."""
    i, j = w.grid.index_of(t_lo), w.grid.index_of(t_hi)
    if i > j:
        raise GridError("sub-interval endpoints out of order")
    g = w.groupoid
    acc = w.accumulated
    if w.orientation == FUTURE:
        base = g.inverse(acc[i])
        new = tuple(g.compose(acc[k], base) for k in range(i, j + 1))
    else:
        base = g.inverse(acc[i])
        new = tuple(g.compose(base, acc[k]) for k in range(i, j + 1))
    return History(g, w.grid.sub(i, j), new, w.orientation)


def link_walks(g: FiniteGroupoid, x0: int, x1: int, n_steps: int):
    """Deterministic stream of consistent link tuples from x0 to x1.

    Lexicographic first in the interior object tuple, then in the per-step
    morphism indices.  This fixed order is the canonical summation order for
    every path sum downstream.
    """
    if n_steps < 1:
        raise ValueError("need at least one interval")
    objs = range(g.n_objects)
    for mids in itertools.product(objs, repeat=n_steps - 1):
        chain = (x0, *mids, x1)
        homs = [g.hom_set(chain[k], chain[k + 1]) for k in range(n_steps)]
        if any(not h for h in homs):
            continue
        for links in itertools.product(*homs):
            yield links, mids


def enumerate_histories(g: FiniteGroupoid, grid: TimeGrid, x0: int, x1: int):
    """Every future history on the grid from (x0, t_0) to (x1, t_N), each
    exactly once, in the canonical lexicographic order."""
    for links, _ in link_walks(g, x0, x1, grid.n_intervals):
        yield from_links(g, grid, links)


def count_histories(g: FiniteGroupoid, x0: int, x1: int, n_steps: int) -> int:
    """Product-formula count of the enumeration stream."""
    total = 0
    for mids in itertools.product(range(g.n_objects), repeat=n_steps - 1):
        chain = (x0, *mids, x1)
        prod = 1
        for k in range(n_steps):
            prod *= len(g.hom_set(chain[k], chain[k + 1]))
            if prod == 0:
                break
        total += prod
    return total


# ---------------------------------------------------------------------------
# reduced words (free-product elements)


@dataclass(frozen=True)
class HistoryWord:
    """Reduced word of history segments in application order:
    segments[i].target == segments[i+1].source.  The empty word is anchored at
    its base point."""

    segments: tuple[History, ...]
    base: tuple[int, float]

    def __post_init__(self):
        for a, b in zip(self.segments, self.segments[1:]):
            if a.target != b.source:
                raise ChainError("word segments do not chain")
        if self.segments and self.segments[0].source != self.base:
            raise ChainError("base point must be the source of the first segment")

    @property
    def source(self) -> tuple[int, float]:
        return self.segments[0].source if self.segments else self.base

    @property
    def target(self) -> tuple[int, float]:
        return self.segments[-1].target if self.segments else self.base

    @property
    def is_empty(self) -> bool:
        return not self.segments


def _try_merge(a: History, b: History):
    if a.orientation != b.orientation or a.target != b.source:
        return None
    return compose_histories(b, a)


def reduce_word(segments, base: tuple[int, float] | None = None) -> HistoryWord:
    """Cancel adjacent (segment, inverse) pairs and merge adjacent
    same-orientation segments until the word is reduced."""
    segs = list(segments)
    for a, b in zip(segs, segs[1:]):
        if a.target != b.source:
            raise ChainError(f"word segments do not chain at {a.target} vs {b.source}")
    if base is None:
        if not segs:
            raise ChainError("an empty word needs an explicit base point")
        base = segs[0].source
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(segs) - 1:
            a, b = segs[i], segs[i + 1]
            if b == invert_history(a):
                del segs[i:i + 2]
                changed = True
                i = max(i - 1, 0)
                continue
            merged = _try_merge(a, b)
            if merged is not None:
                segs[i:i + 2] = [merged]
                changed = True
                i = max(i - 1, 0)
                continue
            i += 1
    return HistoryWord(tuple(segs), base)
