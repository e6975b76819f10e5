"""Shared domain types and the batch-evaluation entry point.

Genotypes, fitness vectors and descriptors are plain float ndarrays; a
:class:`Solution` binds the three together with a run-unique id assigned at
evaluation time.  All objectives follow the maximization convention:
problems whose natural form is minimization negate at the problem boundary.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

Genotype = np.ndarray
FitnessVector = np.ndarray
DescriptorVector = np.ndarray


def frozen_array(values, dtype=float) -> np.ndarray:
    """Copy `values` into a read-only float array."""
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Bounds:
    """Per-dimension closed box [lower_i, upper_i]."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = frozen_array(np.atleast_1d(self.lower))
        hi = frozen_array(np.atleast_1d(self.upper))
        if lo.shape != hi.shape:
            raise ValueError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if np.any(lo >= hi):
            raise ValueError("each lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, lo: float, hi: float, dim: int) -> "Bounds":
        return cls(np.full(dim, lo), np.full(dim, hi))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "Bounds":
        arr = np.asarray(pairs, dtype=float)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray, atol: float = 0.0) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw `count` points uniformly inside the box, shape (count, dim)."""
        return rng.uniform(self.lower, self.upper, size=(count, self.dim))


@dataclass(frozen=True, eq=False)
class Solution:
    """An evaluated candidate: genotype plus its scored fitness and descriptor.

    Solutions are immutable after scoring; the id is unique within a run and
    provides reproducible tie-breaking and traceable lineage in snapshots.
    """

    genotype: np.ndarray
    fitness: np.ndarray
    descriptor: np.ndarray
    id: int

    def sum_fitness(self) -> float:
        return float(self.fitness.sum())

    def __repr__(self):  # pragma: no cover - debugging aid
        f = np.array2string(self.fitness, precision=3)
        return f"Solution(id={self.id}, fitness={f})"


class IdAllocator:
    """Monotonic per-run id source for solutions."""

    def __init__(self, start: int = 0):
        self._next = int(start)

    def take(self, count: int) -> list[int]:
        ids = list(range(self._next, self._next + count))
        self._next += count
        return ids

    @property
    def issued(self) -> int:
        return self._next


@dataclass(frozen=True)
class ProblemDefinition:
    """A fully specified optimization problem.

    `evaluate` is a deterministic, side-effect-free map from one genotype to
    a (fitness, descriptor) pair.  `evaluate_many` is an optional vectorized
    fast path taking a (batch, search_dim) matrix and returning stacked
    (batch, num_objectives) and (batch, descriptor_dim) matrices; when given
    it must agree elementwise with `evaluate`.

    `hypervolume_reference` should be worse in every objective than any
    fitness the problem is expected to produce in practice; it is echoed
    into run output for auditability.
    """

    name: str
    search_dim: int
    num_objectives: int
    descriptor_dim: int
    genotype_bounds: Bounds
    descriptor_bounds: Bounds
    hypervolume_reference: np.ndarray
    evaluate: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    evaluate_many: Optional[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = None

    def __post_init__(self):
        object.__setattr__(
            self, "hypervolume_reference", frozen_array(self.hypervolume_reference)
        )
        if self.hypervolume_reference.shape != (self.num_objectives,):
            raise ValueError("hypervolume_reference length must equal num_objectives")
        if self.genotype_bounds.dim != self.search_dim:
            raise ValueError("genotype_bounds dimension must equal search_dim")
        if self.descriptor_bounds.dim != self.descriptor_dim:
            raise ValueError("descriptor_bounds dimension must equal descriptor_dim")


def _validate_genotypes(problem: ProblemDefinition, genotypes: Sequence[np.ndarray]):
    n = problem.search_dim
    for i, g in enumerate(genotypes):
        g = np.asarray(g)
        if g.ndim != 1 or g.shape[0] != n:
            raise ValueError(
                f"genotype {i} has shape {g.shape}, expected length {n}"
            )
        if not np.all(np.isfinite(g)):
            raise ValueError(f"genotype {i} contains non-finite entries")


def _evaluate_chunk(problem: ProblemDefinition, chunk: np.ndarray):
    if problem.evaluate_many is not None:
        return problem.evaluate_many(chunk)
    fits, descs = [], []
    for row in chunk:
        f, d = problem.evaluate(row)
        fits.append(np.asarray(f, dtype=float))
        descs.append(np.asarray(d, dtype=float))
    return np.stack(fits), np.stack(descs)


def evaluate_batch(
    problem: ProblemDefinition,
    genotypes: Sequence[np.ndarray],
    ids: IdAllocator,
    workers: int = 1,
) -> list[Solution]:
    """Score a batch of genotypes, returning one Solution per input in order.

    Fresh unique ids come from `ids`.  With workers > 1 the batch is split
    into contiguous chunks evaluated on a thread pool; because evaluation is
    pure and chunks are reassembled by position, the result is independent
    of the parallelism level.
    """
    genotypes = list(genotypes)
    if not genotypes:
        return []
    _validate_genotypes(problem, genotypes)
    batch = np.asarray(genotypes, dtype=float)

    if workers <= 1 or len(genotypes) == 1:
        fitness, descriptors = _evaluate_chunk(problem, batch)
    else:
        chunks = np.array_split(batch, min(workers, len(genotypes)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _evaluate_chunk(problem, c), chunks))
        fitness = np.concatenate([p[0] for p in parts])
        descriptors = np.concatenate([p[1] for p in parts])

    if fitness.shape != (len(genotypes), problem.num_objectives):
        raise ValueError(
            f"problem returned fitness of shape {fitness.shape}, "
            f"expected {(len(genotypes), problem.num_objectives)}"
        )
    if descriptors.shape != (len(genotypes), problem.descriptor_dim):
        raise ValueError(
            f"problem returned descriptors of shape {descriptors.shape}, "
            f"expected {(len(genotypes), problem.descriptor_dim)}"
        )

    id_block = ids.take(len(genotypes))
    return [
        Solution(
            genotype=frozen_array(batch[i]),
            fitness=frozen_array(fitness[i]),
            descriptor=frozen_array(descriptors[i]),
            id=id_block[i],
        )
        for i in range(len(genotypes))
    ]


def solutions_fitness_matrix(solutions: Iterable[Solution]) -> np.ndarray:
    """Stack solution fitness vectors into one (n, k) matrix."""
    sols = list(solutions)
    if not sols:
        return np.empty((0, 0))
    return np.stack([s.fitness for s in sols])
