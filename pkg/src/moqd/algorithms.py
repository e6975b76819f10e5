"""The four evolutionary loops behind one uniform generation-step interface.

Every algorithm consumes exactly `batch_size` evaluations per generation
and shares the same variation operators and rng discipline; only the
selection scheme differs:

* ``mome``       - grid of bounded Pareto fronts; parents sampled uniformly
                   over non-empty cells, then uniformly within the cell front.
* ``map_elites`` - scalar grid of cells * front_capacity cells on the sum of
                   objectives; offspring mirrored into a passive MOQD grid.
* ``nsga2``      - non-dominated sorting plus crowding-distance selection.
* ``spea2``      - strength-based fitness with k-NN density and environmental
                   selection.

The multi-objective baselines never see their passive grids: generation
code only receives an insert-only sink, while the harness keeps the
underlying archive for metrics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from .archive import MoqdArchive, PassiveSink, ScalarArchive
from .core import IdAllocator, ProblemDefinition, Solution, evaluate_batch
from .pareto import dominance_matrix, get_dominance
from .rng import RunStreams
from .tessellation import CvtTessellation
from .variation import VariationConfig, make_offspring, offspring_counts


@dataclass(frozen=True)
class AlgorithmContext:
    """Static per-run wiring shared by all algorithms."""

    problem: ProblemDefinition
    cells: int
    front_capacity: int
    batch_size: int
    variation: VariationConfig
    tessellation: CvtTessellation
    scalar_tessellation: Optional[CvtTessellation] = None
    dominance: str = "strict"
    drop_exact_duplicates: bool = True
    spea2_scoring: str = "strength"  # strength | count
    init_population: Optional[int] = None  # None -> batch_size
    eval_workers: int = 1

    @property
    def population_size(self) -> int:
        return self.cells * self.front_capacity

    @property
    def init_count(self) -> int:
        return self.init_population if self.init_population is not None else self.batch_size


class AlgorithmState(Protocol):
    name: str
    generation: int
    evaluations: int

    @property
    def metrics_archive(self) -> MoqdArchive: ...

    def max_sum(self) -> float: ...


def _initial_solutions(ctx: AlgorithmContext, streams: RunStreams, ids: IdAllocator):
    genotypes = ctx.problem.genotype_bounds.sample(streams.init, ctx.init_count)
    return evaluate_batch(ctx.problem, list(genotypes), ids, ctx.eval_workers)


def _parents_to_offspring(
    parents: Sequence[Solution],
    ctx: AlgorithmContext,
    streams: RunStreams,
    ids: IdAllocator,
) -> list[Solution]:
    genotypes = make_offspring(
        [p.genotype for p in parents], ctx.batch_size, ctx.variation, streams.variation
    )
    return evaluate_batch(ctx.problem, genotypes, ids, ctx.eval_workers)


def _new_moqd_archive(ctx: AlgorithmContext, eviction_rng) -> MoqdArchive:
    return MoqdArchive(
        ctx.tessellation,
        ctx.front_capacity,
        eviction_rng,
        get_dominance(ctx.dominance),
        ctx.drop_exact_duplicates,
    )


def _max_sum_of(solutions) -> float:
    return max(s.sum_fitness() for s in solutions)


# ---------------------------------------------------------------------------
# MOME


@dataclass
class MomeState:
    archive: MoqdArchive
    ids: IdAllocator
    streams: RunStreams
    generation: int = 0
    evaluations: int = 0
    name: str = "mome"

    @property
    def metrics_archive(self) -> MoqdArchive:
        return self.archive

    def max_sum(self) -> float:
        return _max_sum_of(self.archive.solutions())


def mome_init(ctx: AlgorithmContext, streams: RunStreams) -> MomeState:
    """Warm start: uniform random initial population inserted into the grid."""
    ids = IdAllocator()
    archive = _new_moqd_archive(ctx, streams.eviction)
    init = _initial_solutions(ctx, streams, ids)
    archive.insert(init)
    return MomeState(archive=archive, ids=ids, streams=streams, evaluations=len(init))


def mome_generation(state: MomeState, ctx: AlgorithmContext) -> MomeState:
    """One iteration: sample parents from the grid, vary, evaluate, insert."""
    _, _, needed = offspring_counts(ctx.batch_size, ctx.variation.p_mut)
    parents = state.archive.sample_solutions(needed, state.streams.selection)
    offspring = _parents_to_offspring(parents, ctx, state.streams, state.ids)
    state.archive.insert(offspring)
    state.generation += 1
    state.evaluations += len(offspring)
    return state


# ---------------------------------------------------------------------------
# MAP-Elites (scalarized baseline)


@dataclass
class MapElitesState:
    grid: ScalarArchive
    passive_archive: MoqdArchive = field(repr=False)
    passive_sink: PassiveSink = field(repr=False)
    ids: IdAllocator = field(default_factory=IdAllocator)
    streams: RunStreams = None
    generation: int = 0
    evaluations: int = 0
    name: str = "map_elites"

    @property
    def metrics_archive(self) -> MoqdArchive:
        return self.passive_archive

    def max_sum(self) -> float:
        # The algorithm's own grid, not the passive mirror: eviction in the
        # mirror could drop the best-sum solution, the grid never does.
        return self.grid.best_sum()


def map_elites_init(ctx: AlgorithmContext, streams: RunStreams) -> MapElitesState:
    if ctx.scalar_tessellation is None:
        raise ValueError("map_elites requires a scalar tessellation of cells*capacity cells")
    ids = IdAllocator()
    grid = ScalarArchive(ctx.scalar_tessellation)
    passive = _new_moqd_archive(ctx, streams.eviction_passive)
    sink = PassiveSink(passive)
    init = _initial_solutions(ctx, streams, ids)
    grid.insert(init)
    sink.insert(init)
    return MapElitesState(
        grid=grid,
        passive_archive=passive,
        passive_sink=sink,
        ids=ids,
        streams=streams,
        evaluations=len(init),
    )


def map_elites_generation(state: MapElitesState, ctx: AlgorithmContext) -> MapElitesState:
    _, _, needed = offspring_counts(ctx.batch_size, ctx.variation.p_mut)
    parents = state.grid.sample_solutions(needed, state.streams.selection)
    offspring = _parents_to_offspring(parents, ctx, state.streams, state.ids)
    state.grid.insert(offspring)
    state.passive_sink.insert(offspring)
    state.generation += 1
    state.evaluations += len(offspring)
    return state


# ---------------------------------------------------------------------------
# NSGA-II


def non_dominated_sort(fitness: np.ndarray, convention: str = "strict") -> np.ndarray:
    """Rank each row: 0 for the non-dominated set, 1 for points dominated
    only by rank 0, and so on."""
    f = np.asarray(fitness, dtype=float)
    n = f.shape[0]
    dom = dominance_matrix(f, convention)
    dominators = dom.sum(axis=0).astype(np.int64)
    ranks = np.full(n, -1, dtype=np.int64)
    current = np.flatnonzero(dominators == 0)
    rank = 0
    counts = dominators.copy()
    while current.size:
        ranks[current] = rank
        counts = counts - dom[current].sum(axis=0)
        counts[ranks >= 0] = -1
        current = np.flatnonzero(counts == 0)
        rank += 1
    return ranks


def crowding_distances(fitness: np.ndarray, ranks: np.ndarray) -> np.ndarray:
    """Per-point crowding distance computed within each rank.

    Boundary points of every rank get infinity; interior points accumulate
    normalized gaps between their neighbors along each objective.
    """
    f = np.asarray(fitness, dtype=float)
    crowding = np.zeros(f.shape[0])
    for rank in np.unique(ranks):
        idx = np.flatnonzero(ranks == rank)
        if idx.size <= 2:
            crowding[idx] = np.inf
            continue
        for m in range(f.shape[1]):
            order = idx[np.argsort(f[idx, m], kind="stable")]
            spread = f[order[-1], m] - f[order[0], m]
            crowding[order[0]] = np.inf
            crowding[order[-1]] = np.inf
            if spread > 0:
                gaps = (f[order[2:], m] - f[order[:-2], m]) / spread
                crowding[order[1:-1]] += gaps
    return crowding


def _crowded_tournament(
    ranks: np.ndarray,
    crowding: np.ndarray,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Binary tournament on (rank asc, crowding desc); full ties coin-flip."""
    n = ranks.shape[0]
    picks = rng.integers(n, size=(count, 2))
    a, b = picks[:, 0], picks[:, 1]
    a_wins = (ranks[a] < ranks[b]) | ((ranks[a] == ranks[b]) & (crowding[a] > crowding[b]))
    tie = (ranks[a] == ranks[b]) & (crowding[a] == crowding[b])
    coin = rng.random(count) < 0.5
    return np.where(tie, np.where(coin, a, b), np.where(a_wins, a, b))


def _nsga2_survivors(
    fitness: np.ndarray, target: int, convention: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indices surviving truncation, with their ranks and crowding."""
    ranks = non_dominated_sort(fitness, convention)
    crowding = crowding_distances(fitness, ranks)
    chosen: list[int] = []
    for rank in range(int(ranks.max()) + 1):
        idx = np.flatnonzero(ranks == rank)
        if len(chosen) + idx.size <= target:
            chosen.extend(idx.tolist())
        else:
            room = target - len(chosen)
            # Descending crowding; equal crowding resolves by lower index.
            order = idx[np.argsort(-crowding[idx], kind="stable")]
            chosen.extend(order[:room].tolist())
            break
    chosen_arr = np.array(chosen, dtype=np.int64)
    return chosen_arr, ranks[chosen_arr], crowding[chosen_arr]


@dataclass
class Nsga2State:
    population: list[Solution]
    ranks: np.ndarray
    crowding: np.ndarray
    passive_archive: MoqdArchive = field(repr=False)
    passive_sink: PassiveSink = field(repr=False)
    ids: IdAllocator = field(default_factory=IdAllocator)
    streams: RunStreams = None
    generation: int = 0
    evaluations: int = 0
    name: str = "nsga2"

    @property
    def metrics_archive(self) -> MoqdArchive:
        return self.passive_archive

    def max_sum(self) -> float:
        return _max_sum_of(self.passive_archive.solutions())


def nsga2_init(ctx: AlgorithmContext, streams: RunStreams) -> Nsga2State:
    ids = IdAllocator()
    passive = _new_moqd_archive(ctx, streams.eviction_passive)
    sink = PassiveSink(passive)
    init = _initial_solutions(ctx, streams, ids)
    sink.insert(init)
    f = np.stack([s.fitness for s in init])
    ranks = non_dominated_sort(f, ctx.dominance)
    crowding = crowding_distances(f, ranks)
    return Nsga2State(
        population=init,
        ranks=ranks,
        crowding=crowding,
        passive_archive=passive,
        passive_sink=sink,
        ids=ids,
        streams=streams,
        evaluations=len(init),
    )


def nsga2_generation(state: Nsga2State, ctx: AlgorithmContext) -> Nsga2State:
    """Tournament parents, shared variation, elitist truncation survival.

    The population grows by batch-size per generation until it reaches
    cells * front_capacity and stays fixed there.
    """
    _, _, needed = offspring_counts(ctx.batch_size, ctx.variation.p_mut)
    winners = _crowded_tournament(state.ranks, state.crowding, needed, state.streams.selection)
    parents = [state.population[int(i)] for i in winners]
    offspring = _parents_to_offspring(parents, ctx, state.streams, state.ids)

    union = state.population + offspring
    f = np.stack([s.fitness for s in union])
    target = min(ctx.population_size, len(union))
    keep, ranks, crowding = _nsga2_survivors(f, target, ctx.dominance)
    state.population = [union[int(i)] for i in keep]
    state.ranks = ranks
    state.crowding = crowding

    state.passive_sink.insert(offspring)
    state.generation += 1
    state.evaluations += len(offspring)
    return state


# ---------------------------------------------------------------------------
# SPEA2


def domination_counts(fitness: np.ndarray, convention: str = "strict") -> np.ndarray:
    """Number of candidates dominating each row (0 for the Pareto front)."""
    return dominance_matrix(np.asarray(fitness, dtype=float), convention).sum(axis=0)


def spea2_fitness(
    fitness: np.ndarray, convention: str = "strict", scoring: str = "strength"
) -> np.ndarray:
    """Raw dominance fitness plus k-NN density term; lower is better.

    `strength` is the canonical raw fitness (sum of dominator strengths);
    `count` is the simpler number-of-dominators ablation.  The density term
    is 1 / (sigma_k + 2) with k = floor(sqrt(population size)), computed in
    objective space, so non-dominated candidates always score below 1.
    """
    f = np.asarray(fitness, dtype=float)
    n = f.shape[0]
    dom = dominance_matrix(f, convention)
    if scoring == "strength":
        strengths = dom.sum(axis=1)
        raw = (dom * strengths[:, None]).sum(axis=0).astype(float)
    elif scoring == "count":
        raw = dom.sum(axis=0).astype(float)
    else:
        raise ValueError(f"unknown spea2 scoring: {scoring!r}")
    diff = f[:, None, :] - f[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    k = min(int(np.floor(np.sqrt(n))), n - 1)
    sigma_k = np.sort(dist, axis=1)[:, k] if n > 1 else np.zeros(n)
    return raw + 1.0 / (sigma_k + 2.0)


def _truncate_by_nearest_neighbor(dist: np.ndarray, target: int) -> np.ndarray:
    """Iteratively drop the point with the lexicographically smallest sorted
    distance vector until `target` points remain.  Ties resolve to the
    lowest index.  Returns the surviving indices in ascending order."""
    m = dist.shape[0]
    work = dist.copy()
    np.fill_diagonal(work, np.inf)
    alive = np.ones(m, dtype=bool)
    remaining = m
    while remaining > target:
        nearest = np.where(alive, work.min(axis=1), np.inf)
        low = nearest.min()
        candidates = np.flatnonzero(nearest == low)
        if candidates.size == 1:
            victim = int(candidates[0])
        else:
            rows = np.sort(work[candidates], axis=1)
            order = np.lexsort(rows.T[::-1])
            victim = int(candidates[order[0]])
        alive[victim] = False
        work[:, victim] = np.inf
        work[victim, :] = np.inf
        remaining -= 1
    return np.flatnonzero(alive)


def spea2_environmental_selection(
    fitness: np.ndarray, scores: np.ndarray, target: int
) -> np.ndarray:
    """Keep the non-dominated set; truncate it by nearest-neighbor removal
    when oversized, fill with the best dominated candidates when undersized."""
    f = np.asarray(fitness, dtype=float)
    nd = np.flatnonzero(scores < 1.0)
    if nd.size > target:
        sub = f[nd]
        diff = sub[:, None, :] - sub[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        keep_local = _truncate_by_nearest_neighbor(dist, target)
        return nd[keep_local]
    if nd.size == target:
        return nd
    dominated = np.flatnonzero(scores >= 1.0)
    order = dominated[np.argsort(scores[dominated], kind="stable")]
    fill = order[: target - nd.size]
    return np.sort(np.concatenate([nd, fill]))


@dataclass
class Spea2State:
    population: list[Solution]
    scores: np.ndarray
    passive_archive: MoqdArchive = field(repr=False)
    passive_sink: PassiveSink = field(repr=False)
    ids: IdAllocator = field(default_factory=IdAllocator)
    streams: RunStreams = None
    generation: int = 0
    evaluations: int = 0
    name: str = "spea2"

    @property
    def metrics_archive(self) -> MoqdArchive:
        return self.passive_archive

    def max_sum(self) -> float:
        return _max_sum_of(self.passive_archive.solutions())


def spea2_init(ctx: AlgorithmContext, streams: RunStreams) -> Spea2State:
    ids = IdAllocator()
    passive = _new_moqd_archive(ctx, streams.eviction_passive)
    sink = PassiveSink(passive)
    init = _initial_solutions(ctx, streams, ids)
    sink.insert(init)
    f = np.stack([s.fitness for s in init])
    scores = spea2_fitness(f, ctx.dominance, ctx.spea2_scoring)
    return Spea2State(
        population=init,
        scores=scores,
        passive_archive=passive,
        passive_sink=sink,
        ids=ids,
        streams=streams,
        evaluations=len(init),
    )


def _score_tournament(
    scores: np.ndarray, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Binary tournament on SPEA2 fitness (lower wins); ties coin-flip."""
    n = scores.shape[0]
    picks = rng.integers(n, size=(count, 2))
    a, b = picks[:, 0], picks[:, 1]
    a_wins = scores[a] < scores[b]
    tie = scores[a] == scores[b]
    coin = rng.random(count) < 0.5
    return np.where(tie, np.where(coin, a, b), np.where(a_wins, a, b))


def spea2_generation(state: Spea2State, ctx: AlgorithmContext) -> Spea2State:
    _, _, needed = offspring_counts(ctx.batch_size, ctx.variation.p_mut)
    winners = _score_tournament(state.scores, needed, state.streams.selection)
    parents = [state.population[int(i)] for i in winners]
    offspring = _parents_to_offspring(parents, ctx, state.streams, state.ids)

    union = state.population + offspring
    f = np.stack([s.fitness for s in union])
    scores = spea2_fitness(f, ctx.dominance, ctx.spea2_scoring)
    target = min(ctx.population_size, len(union))
    keep = spea2_environmental_selection(f, scores, target)
    state.population = [union[int(i)] for i in keep]
    state.scores = scores[keep]

    state.passive_sink.insert(offspring)
    state.generation += 1
    state.evaluations += len(offspring)
    return state


# ---------------------------------------------------------------------------
# Registry


@dataclass(frozen=True)
class Algorithm:
    name: str
    init: Callable[[AlgorithmContext, RunStreams], AlgorithmState]
    step: Callable[[AlgorithmState, AlgorithmContext], AlgorithmState]


ALGORITHMS: dict[str, Algorithm] = {
    "mome": Algorithm("mome", mome_init, mome_generation),
    "map_elites": Algorithm("map_elites", map_elites_init, map_elites_generation),
    "nsga2": Algorithm("nsga2", nsga2_init, nsga2_generation),
    "spea2": Algorithm("spea2", spea2_init, spea2_generation),
}


def available_algorithms() -> list[str]:
    return sorted(ALGORITHMS)
