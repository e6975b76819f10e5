"""Grid archives: Pareto-front-per-cell, scalar-elite-per-cell, passive sink.

The MOQD grid keeps one bounded Pareto front per tessellation cell.  The
scalar grid is the classic one-elite-per-cell archive on sum-of-objectives
fitness.  A passive sink wraps a MOQD grid so that a baseline algorithm can
feed it offspring without any way of reading it back; metrics are computed
from the wrapped grid by the harness only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .core import Solution
from .pareto import DominanceFn, InsertReport, ParetoFront, dominates, hypervolume
from .tessellation import CvtTessellation


class EmptyArchiveError(RuntimeError):
    """Raised when sampling from an archive with no stored solutions."""


class MoqdArchive:
    """One bounded Pareto front per CVT cell.

    Eviction randomness is owned by the archive so that replaying the same
    insertion stream into a fresh archive with the same eviction seed
    reproduces the archive exactly.
    """

    def __init__(
        self,
        tessellation: CvtTessellation,
        front_capacity: int,
        eviction_rng: np.random.Generator,
        dominance: DominanceFn = dominates,
        drop_exact_duplicates: bool = True,
    ):
        self.tessellation = tessellation
        self.front_capacity = int(front_capacity)
        self.eviction_rng = eviction_rng
        self.dominance = dominance
        self.drop_exact_duplicates = drop_exact_duplicates
        self.fronts: list[ParetoFront] = [
            ParetoFront(front_capacity, dominance, drop_exact_duplicates)
            for _ in range(tessellation.num_cells)
        ]

    @property
    def num_cells(self) -> int:
        return self.tessellation.num_cells

    def insert(self, batch: Sequence[Solution]) -> list[InsertReport]:
        """Route each solution to its cell and insert, in batch order."""
        batch = list(batch)
        if not batch:
            return []
        descriptors = np.stack([s.descriptor for s in batch])
        cells = self.tessellation.cell_indices(descriptors)
        reports = []
        for sol, cell in zip(batch, cells):
            report = self.fronts[cell].insert(sol, self.eviction_rng)
            report.cell = int(cell)
            reports.append(report)
        return reports

    def nonempty_cells(self) -> np.ndarray:
        return np.array([i for i, f in enumerate(self.fronts) if len(f) > 0], dtype=np.int64)

    def coverage(self) -> int:
        return int(sum(1 for f in self.fronts if len(f) > 0))

    def total_solutions(self) -> int:
        return int(sum(len(f) for f in self.fronts))

    def solutions(self) -> Iterator[Solution]:
        for front in self.fronts:
            yield from front.members

    def items(self) -> Iterator[tuple[int, Solution]]:
        for i, front in enumerate(self.fronts):
            for sol in front.members:
                yield i, sol

    def sample_solutions(self, count: int, rng: np.random.Generator) -> list[Solution]:
        """Two-stage uniform sampling: uniform over non-empty cells with
        replacement, then uniform over that cell's front members."""
        if count < 0:
            raise ValueError("count must be non-negative")
        if count == 0:
            return []
        nonempty = self.nonempty_cells()
        if nonempty.size == 0:
            raise EmptyArchiveError("cannot sample from an archive with no solutions")
        cell_picks = nonempty[rng.integers(nonempty.size, size=count)]
        out = []
        for cell in cell_picks:
            members = self.fronts[cell].members
            out.append(members[int(rng.integers(len(members)))])
        return out

    def cell_hypervolumes(self, reference: np.ndarray) -> np.ndarray:
        """Hypervolume of each cell's front against a fixed reference."""
        return np.array(
            [hypervolume(f.fitness_matrix(), reference) if len(f) else 0.0 for f in self.fronts]
        )

    def check_integrity(self):
        """Full-scan verification of cell routing and front invariants."""
        for i, front in enumerate(self.fronts):
            front.check_invariants()
            for sol in front.members:
                actual = self.tessellation.cell_index(sol.descriptor)
                if actual != i:
                    raise AssertionError(
                        f"solution {sol.id} stored in cell {i} but maps to cell {actual}"
                    )


def moqd_insert(archive: MoqdArchive, batch: Sequence[Solution]) -> list[InsertReport]:
    return archive.insert(batch)


def sample_solutions(
    archive: MoqdArchive, count: int, rng: np.random.Generator
) -> list[Solution]:
    return archive.sample_solutions(count, rng)


class ScalarArchive:
    """Classic one-elite-per-cell grid on scalarized (sum) fitness.

    Replacement is strict: a candidate takes a cell only when its objective
    sum exceeds the incumbent's, so per-cell fitness is monotone
    non-decreasing and ties keep the incumbent.
    """

    def __init__(self, tessellation: CvtTessellation):
        self.tessellation = tessellation
        self.slots: list[Optional[Solution]] = [None] * tessellation.num_cells
        self._sums = np.full(tessellation.num_cells, -np.inf)

    @property
    def num_cells(self) -> int:
        return self.tessellation.num_cells

    def insert(self, batch: Sequence[Solution]) -> list[InsertReport]:
        batch = list(batch)
        if not batch:
            return []
        descriptors = np.stack([s.descriptor for s in batch])
        cells = self.tessellation.cell_indices(descriptors)
        reports = []
        for sol, cell in zip(batch, cells):
            cell = int(cell)
            s = sol.sum_fitness()
            if s > self._sums[cell]:
                old = self.slots[cell]
                self.slots[cell] = sol
                self._sums[cell] = s
                reports.append(
                    InsertReport(
                        added=True,
                        removed_ids=[old.id] if old is not None else [],
                        reason="added",
                        cell=cell,
                    )
                )
            else:
                reports.append(InsertReport(added=False, reason="dominated", cell=cell))
        return reports

    def occupied_cells(self) -> np.ndarray:
        return np.array(
            [i for i, s in enumerate(self.slots) if s is not None], dtype=np.int64
        )

    def coverage(self) -> int:
        return int(sum(1 for s in self.slots if s is not None))

    def solutions(self) -> Iterator[Solution]:
        for s in self.slots:
            if s is not None:
                yield s

    def cell_sum(self, cell: int) -> float:
        return float(self._sums[cell])

    def best_sum(self) -> float:
        occupied = self._sums[np.isfinite(self._sums)]
        if occupied.size == 0:
            raise EmptyArchiveError("scalar archive is empty")
        return float(occupied.max())

    def sample_solutions(self, count: int, rng: np.random.Generator) -> list[Solution]:
        """Uniform over occupied cells with replacement."""
        if count == 0:
            return []
        occupied = self.occupied_cells()
        if occupied.size == 0:
            raise EmptyArchiveError("cannot sample from an empty scalar archive")
        picks = occupied[rng.integers(occupied.size, size=count)]
        return [self.slots[int(c)] for c in picks]

    def check_integrity(self):
        for i, sol in enumerate(self.slots):
            if sol is None:
                continue
            actual = self.tessellation.cell_index(sol.descriptor)
            if actual != i:
                raise AssertionError(
                    f"solution {sol.id} stored in cell {i} but maps to cell {actual}"
                )
            if sol.sum_fitness() != self._sums[i]:
                raise AssertionError(f"cached sum out of date in cell {i}")


def scalar_insert(archive: ScalarArchive, batch: Sequence[Solution]) -> list[InsertReport]:
    return archive.insert(batch)


@dataclass
class PassiveSink:
    """Insert-only handle on a MOQD grid.

    Baseline algorithms receive this wrapper instead of the archive itself,
    so mirrored offspring can never influence their behavior; the harness
    keeps the wrapped grid for metrics.
    """

    _archive: MoqdArchive = field(repr=False)
    inserted: int = 0

    def insert(self, batch: Sequence[Solution]) -> None:
        self._archive.insert(batch)
        self.inserted += len(batch)


def passive_mirror_insert(passive: MoqdArchive, batch: Sequence[Solution]):
    """Mirror a produced-offspring stream into a passive grid.

    Same semantics as `moqd_insert`; kept separate so call sites document
    that the target is a metrics-only archive.
    """
    return passive.insert(batch)


def write_snapshot(archive: MoqdArchive, path, include_genotypes: bool = False):
    """Dump one JSON record per stored solution, grouped by cell order."""
    with open(path, "w") as fh:
        for cell, sol in archive.items():
            record = {
                "cell_index": int(cell),
                "solution_id": int(sol.id),
                "fitness": [float(v) for v in sol.fitness],
                "descriptor": [float(v) for v in sol.descriptor],
            }
            if include_genotypes:
                record["genotype"] = [float(v) for v in sol.genotype]
            fh.write(json.dumps(record) + "\n")


def read_snapshot(path) -> list[dict]:
    """Load the records written by `write_snapshot`."""
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
