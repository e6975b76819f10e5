"""Pareto dominance, bounded front maintenance, and exact 2-D hypervolume.

Dominance here is strict in every objective: `a` dominates `b` only when
every component of `a` exceeds the matching component of `b`.  One
consequence is that identical fitness vectors never dominate each other, so
duplicates can coexist in a front; exact duplicates (equal fitness AND equal
genotype) are dropped by default to keep fronts clean.  The conventional
weak definition (>= everywhere, > somewhere) is available for sensitivity
checks via ``get_dominance("weak")``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Solution

DominanceFn = Callable[[np.ndarray, np.ndarray], bool]


class UnsupportedDimensionError(ValueError):
    """Raised when an exact algorithm only covers a fixed objective count."""


def _check_lengths(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"fitness vectors differ in shape: {a.shape} vs {b.shape}")


def dominates(a, b) -> bool:
    """True iff `a` is strictly better than `b` in every objective."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_lengths(a, b)
    return bool(np.all(a > b))


def weakly_dominates(a, b) -> bool:
    """Conventional dominance: `a` >= `b` everywhere and > somewhere."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_lengths(a, b)
    return bool(np.all(a >= b) and np.any(a > b))


def get_dominance(convention: str) -> DominanceFn:
    if convention == "strict":
        return dominates
    if convention == "weak":
        return weakly_dominates
    raise ValueError(f"unknown dominance convention: {convention!r}")


def dominance_matrix(fitness: np.ndarray, convention: str = "strict") -> np.ndarray:
    """Boolean matrix D with D[i, j] true iff row i dominates row j."""
    f = np.asarray(fitness, dtype=float)
    if f.ndim != 2:
        raise ValueError("expected a (n, k) fitness matrix")
    gt = f[:, None, :] > f[None, :, :]
    if convention == "strict":
        return gt.all(axis=2)
    if convention == "weak":
        ge = f[:, None, :] >= f[None, :, :]
        return ge.all(axis=2) & gt.any(axis=2)
    raise ValueError(f"unknown dominance convention: {convention!r}")


@dataclass
class InsertReport:
    """Outcome of one front insertion."""

    added: bool
    removed_ids: list[int] = field(default_factory=list)
    reason: str = "added"  # added | dominated | duplicate
    cell: int | None = None


class ParetoFront:
    """A mutually non-dominated set holding at most `capacity` solutions.

    Insertion follows the drop/add rules of the per-niche front update:
    a candidate strictly dominated by any member is dropped, otherwise it is
    added and every member it strictly dominates is removed.  When the front
    then exceeds capacity, incumbent members (never the just-added
    candidate) are evicted uniformly at random until the size is back at
    capacity.  Owned by exactly one archive cell; not safe for two writers.
    """

    def __init__(
        self,
        capacity: int,
        dominance: DominanceFn = dominates,
        drop_exact_duplicates: bool = True,
    ):
        if capacity < 1:
            raise ValueError("front capacity must be >= 1")
        self.capacity = int(capacity)
        self.dominance = dominance
        self.drop_exact_duplicates = drop_exact_duplicates
        self.members: list[Solution] = []

    def __len__(self) -> int:
        return len(self.members)

    def fitness_matrix(self) -> np.ndarray:
        if not self.members:
            return np.empty((0, 0))
        return np.stack([m.fitness for m in self.members])

    def _is_exact_duplicate(self, candidate: Solution) -> bool:
        for m in self.members:
            if np.array_equal(m.fitness, candidate.fitness) and np.array_equal(
                m.genotype, candidate.genotype
            ):
                return True
        return False

    def insert(self, candidate: Solution, rng: np.random.Generator) -> InsertReport:
        if self.members:
            _check_lengths(self.members[0].fitness, candidate.fitness)

        if self.drop_exact_duplicates and self._is_exact_duplicate(candidate):
            return InsertReport(added=False, reason="duplicate")

        for m in self.members:
            if self.dominance(m.fitness, candidate.fitness):
                return InsertReport(added=False, reason="dominated")

        removed = [m for m in self.members if self.dominance(candidate.fitness, m.fitness)]
        removed_ids = [m.id for m in removed]
        if removed:
            gone = {id(m) for m in removed}
            self.members = [m for m in self.members if id(m) not in gone]
        self.members.append(candidate)

        # Capacity eviction: uniform over incumbents, never the new candidate.
        while len(self.members) > self.capacity:
            victim_pos = int(rng.integers(len(self.members) - 1))
            removed_ids.append(self.members[victim_pos].id)
            del self.members[victim_pos]

        return InsertReport(added=True, removed_ids=removed_ids, reason="added")

    def check_invariants(self):
        """Raise AssertionError if size or mutual non-domination is violated."""
        assert len(self.members) <= self.capacity, "front exceeds capacity"
        for i, a in enumerate(self.members):
            for j, b in enumerate(self.members):
                if i != j:
                    assert not self.dominance(a.fitness, b.fitness) or not self.dominance(
                        b.fitness, a.fitness
                    ), "mutual domination"
                    assert not self.dominance(a.fitness, b.fitness), (
                        f"member {a.id} dominates member {b.id}"
                    )


def front_insert(
    front: ParetoFront, candidate: Solution, rng: np.random.Generator
) -> InsertReport:
    """Insert `candidate` into `front` under the drop/add/evict rules."""
    return front.insert(candidate, rng)


def hypervolume(front_fitnesses, reference) -> float:
    """Exact area dominated by a 2-objective front, bounded by `reference`.

    Computed by a sort-and-sweep over points that strictly dominate the
    reference; points that do not contribute zero.  Invariant under
    permutation and duplication of the input.
    """
    ref = np.asarray(reference, dtype=float)
    if ref.shape != (2,):
        raise UnsupportedDimensionError(
            f"exact hypervolume supports exactly 2 objectives, got reference shape {ref.shape}"
        )
    pts = np.asarray(list(front_fitnesses), dtype=float)
    if pts.size == 0:
        return 0.0
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise UnsupportedDimensionError(
            f"exact hypervolume supports exactly 2 objectives, got points of shape {pts.shape}"
        )
    pts = pts[(pts > ref).all(axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    order = np.argsort(-pts[:, 0], kind="stable")
    pts = pts[order]
    area = 0.0
    y_covered = ref[1]
    for x, y in pts:
        if y > y_covered:
            area += (x - ref[0]) * (y - y_covered)
            y_covered = y
    return float(area)


def _strict_front_mask_2d(f: np.ndarray) -> np.ndarray:
    """Non-dominated mask for k=2 strict dominance via a descending sweep."""
    n = f.shape[0]
    keep = np.ones(n, dtype=bool)
    order = np.argsort(-f[:, 0], kind="stable")
    best_y = -np.inf
    i = 0
    while i < n:
        j = i
        x = f[order[i], 0]
        # Points sharing the same first objective cannot dominate each other.
        while j < n and f[order[j], 0] == x:
            j += 1
        group = order[i:j]
        keep[group] = ~(f[group, 1] < best_y)
        gmax = f[group, 1].max()
        if gmax > best_y:
            best_y = gmax
        i = j
    return keep


def pareto_front_of(
    solutions: Sequence[Solution], convention: str = "strict"
) -> list[Solution]:
    """The non-dominated subset of `solutions`, ordered by ascending id.

    Idempotent: applying it to its own output returns the same set.
    """
    sols = list(solutions)
    if len(sols) <= 1:
        return sorted(sols, key=lambda s: s.id)
    f = np.stack([s.fitness for s in sols])
    if f.shape[0] != len(sols):
        raise ValueError("fitness stacking failed")
    if convention == "strict" and f.shape[1] == 2:
        keep = _strict_front_mask_2d(f)
    else:
        dom = dominance_matrix(f, convention)
        keep = ~dom.any(axis=0)
    kept = [s for s, k in zip(sols, keep) if k]
    return sorted(kept, key=lambda s: s.id)
