"""Archive metrics and the rank tests used to compare runs.

All archive metrics are pure functions of a snapshot: the per-cell
hypervolume sum (the quantity the front-per-cell grid maximizes), cell
coverage, the global Pareto front over every stored solution regardless of
cell, and the best objective sum.  Baselines are instrumented through
passive grids, so the same functions apply to every algorithm.

The signed-rank test uses the exact permutation distribution (subset-sum
counting over midranks) for up to 25 non-zero differences and a
continuity-corrected normal approximation with tie correction above that.
Zero differences are excluded; an all-zero sample is an error at this
layer (run comparison handles the identical-samples case explicitly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .archive import MoqdArchive
from .core import Solution
from .pareto import hypervolume, pareto_front_of

METRICS_CSV_HEADER = (
    "generation,evaluations,moqd_score,coverage_count,coverage_fraction,"
    "global_hypervolume,max_sum,total_solutions,wall_time_s"
)


class DegenerateSampleError(ValueError):
    """Raised when a rank test receives samples it cannot rank."""


@dataclass(frozen=True)
class MetricsRecord:
    generation: int
    evaluations: int
    moqd_score: float
    coverage_count: int
    coverage_fraction: float
    global_hypervolume: float
    max_sum: float
    total_solutions: int
    wall_time_s: float = 0.0

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.generation),
                str(self.evaluations),
                repr(float(self.moqd_score)),
                str(self.coverage_count),
                repr(float(self.coverage_fraction)),
                repr(float(self.global_hypervolume)),
                repr(float(self.max_sum)),
                str(self.total_solutions),
                format(self.wall_time_s, ".3f"),
            ]
        )


def moqd_score(archive: MoqdArchive, reference: np.ndarray) -> float:
    """Sum over cells of the hypervolume of the cell's front.

    The reference point must stay fixed for the whole experiment; empty
    cells contribute zero.
    """
    return float(archive.cell_hypervolumes(reference).sum())


def coverage(archive: MoqdArchive) -> tuple[int, float]:
    count = archive.coverage()
    return count, count / archive.num_cells


def global_pareto_front(archive: MoqdArchive, convention: str = "strict") -> list[Solution]:
    """Non-dominated set over all stored solutions regardless of cell.

    Often mixes solutions from several niches, so its hypervolume can
    exceed the largest per-cell hypervolume.
    """
    return pareto_front_of(list(archive.solutions()), convention)


def global_hypervolume(
    archive: MoqdArchive, reference: np.ndarray, convention: str = "strict"
) -> float:
    front = global_pareto_front(archive, convention)
    if not front:
        return 0.0
    return hypervolume(np.stack([s.fitness for s in front]), reference)


def max_sum(source: Iterable[Solution]) -> float:
    """Best sum of objectives over an archive's or population's solutions."""
    best = None
    for s in source:
        v = s.sum_fitness()
        if best is None or v > best:
            best = v
    if best is None:
        raise ValueError("max_sum of an empty solution set")
    return float(best)


# ---------------------------------------------------------------------------
# Rank tests


@dataclass(frozen=True)
class RankTestResult:
    statistic: float
    p_value: float
    n_effective: int
    method: str  # exact | normal


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j < len(values) and sorted_vals[j] == sorted_vals[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + 1 + j)  # average of ranks i+1 .. j
        i = j
    return ranks


def _signed_rank_exact_p(ranks2: np.ndarray, w2: int) -> float:
    """Two-sided exact p for the doubled-rank statistic via subset-sum DP."""
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in ranks2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    cdf = counts[: w2 + 1].sum() / counts.sum()
    return min(1.0, 2.0 * cdf)


def wilcoxon_signed_rank(
    scores_a: Sequence[float], scores_b: Sequence[float], exact_limit: int = 25
) -> RankTestResult:
    """Two-sided paired signed-rank test of equal medians.

    The statistic is min(W+, W-) over the non-zero paired differences.
    """
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be equal-length 1-D sequences")
    d = a - b
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise DegenerateSampleError("all paired differences are zero")
    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    statistic = min(w_plus, w_minus)

    if n <= exact_limit:
        ranks2 = np.rint(2.0 * ranks).astype(np.int64)
        w2 = int(np.rint(2.0 * statistic))
        p = _signed_rank_exact_p(ranks2, w2)
        return RankTestResult(statistic, p, n, "exact")

    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts) / 48.0).sum())
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    if var <= 0:
        raise DegenerateSampleError("zero variance in signed-rank statistic")
    z = (statistic - mean + 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * 0.5 * (1.0 + math.erf(z / math.sqrt(2.0))))
    return RankTestResult(statistic, p, n, "normal")


def rank_sum_test(scores_a: Sequence[float], scores_b: Sequence[float]) -> RankTestResult:
    """Two-sided Mann-Whitney rank-sum test (unpaired alternative).

    Normal approximation with tie correction and continuity correction;
    suited to the >= 6-per-group sample sizes used for run comparison.
    """
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty 1-D sequences")
    n1, n2 = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    u = min(u1, n1 * n2 - u1)
    mean = n1 * n2 / 2.0
    n = n1 + n2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts)).sum()) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        raise DegenerateSampleError("zero variance in rank-sum statistic")
    z = (u - mean + 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * 0.5 * (1.0 + math.erf(z / math.sqrt(2.0))))
    return RankTestResult(u, p, n, "normal")


def wilcoxon_rank_test(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    paired: bool = True,
) -> RankTestResult:
    """Default run-comparison test: seed-paired signed-rank; set
    ``paired=False`` for the unpaired rank-sum alternative."""
    if paired:
        return wilcoxon_signed_rank(scores_a, scores_b)
    return rank_sum_test(scores_a, scores_b)
