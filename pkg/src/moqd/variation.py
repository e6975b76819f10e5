"""Mutation and crossover operators shared by every algorithm.

The same operator stack, with the same hyper-parameters and the same
mutation/crossover split, is used by all algorithms so that comparisons
isolate the selection scheme.  `make_offspring` is the single entry point:
it consumes `p_mut * B + 2 * (1 - p_mut) * B` parents and emits exactly B
children, mutants first, then one child per consecutive parent pair.

All batch randomness is drawn from the supplied generator in a fixed
documented order (mutation mask, mutation magnitudes, crossover draws), so
offspring are a pure function of (parents, config, generator state).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Bounds


@dataclass(frozen=True)
class VariationConfig:
    """Operator hyper-parameters plus the genotype box used for clipping."""

    genotype_bounds: Bounds
    p_mut: float = 0.5
    eta: float = 1.0
    per_gene_mut_prob: Optional[float] = None  # None -> 1 / search_dim
    iso_sigma: float = 0.005
    line_sigma: float = 0.05
    sbx_eta: float = 15.0
    crossover: str = "blend"  # blend | sbx | iso_line_dd

    def __post_init__(self):
        if not 0.0 <= self.p_mut <= 1.0:
            raise ValueError("p_mut must lie in [0, 1]")
        if self.per_gene_mut_prob is not None and not 0.0 <= self.per_gene_mut_prob <= 1.0:
            raise ValueError("per_gene_mut_prob must lie in [0, 1]")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.iso_sigma < 0 or self.line_sigma < 0:
            raise ValueError("sigmas must be non-negative")
        if self.crossover not in ("blend", "sbx", "iso_line_dd"):
            raise ValueError(f"unknown crossover kind: {self.crossover!r}")

    def gene_mut_prob(self, n: int) -> float:
        return self.per_gene_mut_prob if self.per_gene_mut_prob is not None else 1.0 / n


def _polynomial_core(
    x: np.ndarray, mask: np.ndarray, u: np.ndarray, cfg: VariationConfig
) -> np.ndarray:
    """Bounded polynomial perturbation applied where `mask` is set.

    u < 0.5 perturbs toward the lower bound with delta = (2u)^(1/(eta+1)) - 1,
    u >= 0.5 toward the upper bound with delta = 1 - (2(1-u))^(1/(eta+1)).
    A gene sitting on a bound cannot move past it because the perturbation
    scales with the gap to that bound.
    """
    lo = cfg.genotype_bounds.lower
    hi = cfg.genotype_bounds.upper
    exponent = 1.0 / (cfg.eta + 1.0)
    delta_low = np.power(2.0 * u, exponent) - 1.0
    delta_high = 1.0 - np.power(2.0 * (1.0 - u), exponent)
    moved = np.where(u < 0.5, x + delta_low * (x - lo), x + delta_high * (hi - x))
    out = np.where(mask, moved, x)
    return np.clip(out, lo, hi)


def _mutate_batch(x: np.ndarray, cfg: VariationConfig, rng: np.random.Generator) -> np.ndarray:
    prob = cfg.gene_mut_prob(x.shape[-1])
    mask = rng.random(x.shape) < prob
    u = rng.random(x.shape)
    return _polynomial_core(x, mask, u, cfg)


def polynomial_mutation(
    x: np.ndarray, cfg: VariationConfig, rng: np.random.Generator
) -> np.ndarray:
    """Mutate each gene independently with the bounded polynomial operator."""
    x = np.asarray(x, dtype=float)
    return _mutate_batch(x[None, :], cfg, rng)[0]


def _iso_line_batch(
    x1: np.ndarray, x2: np.ndarray, cfg: VariationConfig, rng: np.random.Generator
) -> np.ndarray:
    eps = rng.standard_normal(x1.shape)
    zeta = rng.standard_normal((x1.shape[0], 1))
    child = x1 + cfg.iso_sigma * eps + cfg.line_sigma * zeta * (x2 - x1)
    return np.clip(child, cfg.genotype_bounds.lower, cfg.genotype_bounds.upper)


def iso_line_dd(
    x1: np.ndarray, x2: np.ndarray, cfg: VariationConfig, rng: np.random.Generator
) -> np.ndarray:
    """Isotropic Gaussian noise plus Gaussian noise along the parent line:
    child = x1 + iso_sigma * N(0, I) + line_sigma * N(0, 1) * (x2 - x1)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise ValueError(f"parent shapes differ: {x1.shape} vs {x2.shape}")
    return _iso_line_batch(x1[None, :], x2[None, :], cfg, rng)[0]


def _blend_batch(x1: np.ndarray, x2: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    alpha = rng.random(x1.shape)
    return alpha * x1 + (1.0 - alpha) * x2


def crossover_blend(x1: np.ndarray, x2: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per-gene uniform blend: child_i = a_i*x1_i + (1-a_i)*x2_i, a_i ~ U(0,1).

    The child is gene-wise inside [min(x1_i, x2_i), max(x1_i, x2_i)], so it
    respects any box that contains both parents.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise ValueError(f"parent shapes differ: {x1.shape} vs {x2.shape}")
    return _blend_batch(x1[None, :], x2[None, :], rng)[0]


def _sbx_batch(
    x1: np.ndarray, x2: np.ndarray, cfg: VariationConfig, rng: np.random.Generator
) -> np.ndarray:
    u = rng.random(x1.shape)
    exponent = 1.0 / (cfg.sbx_eta + 1.0)
    beta = np.where(
        u <= 0.5,
        np.power(2.0 * u, exponent),
        np.power(1.0 / (2.0 * (1.0 - u)), exponent),
    )
    child = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2)
    return np.clip(child, cfg.genotype_bounds.lower, cfg.genotype_bounds.upper)


def crossover_sbx(
    x1: np.ndarray, x2: np.ndarray, cfg: VariationConfig, rng: np.random.Generator
) -> np.ndarray:
    """Simulated binary crossover (one child), clipped to bounds."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise ValueError(f"parent shapes differ: {x1.shape} vs {x2.shape}")
    return _sbx_batch(x1[None, :], x2[None, :], cfg, rng)[0]


def offspring_counts(batch_size: int, p_mut: float) -> tuple[int, int, int]:
    """(mutants, crossover children, parents needed) for one batch."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    mutants = int(round(p_mut * batch_size))
    crossovers = batch_size - mutants
    return mutants, crossovers, mutants + 2 * crossovers


def make_offspring(
    parents: Sequence[np.ndarray],
    batch_size: int,
    cfg: VariationConfig,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Build exactly `batch_size` children from the sampled parents.

    The first round(p_mut * B) children are mutants of single parents; the
    rest are crossover children of consecutive parent pairs.
    """
    mutants, crossovers, needed = offspring_counts(batch_size, cfg.p_mut)
    if len(parents) != needed:
        raise ValueError(
            f"expected {needed} parents for batch_size={batch_size}, "
            f"p_mut={cfg.p_mut}, got {len(parents)}"
        )
    stacked = np.asarray(parents, dtype=float)
    out = []
    if mutants:
        out.extend(_mutate_batch(stacked[:mutants], cfg, rng))
    if crossovers:
        left = stacked[mutants::2]
        right = stacked[mutants + 1 :: 2]
        if cfg.crossover == "blend":
            children = _blend_batch(left, right, rng)
        elif cfg.crossover == "sbx":
            children = _sbx_batch(left, right, cfg, rng)
        else:
            children = _iso_line_batch(left, right, cfg, rng)
        out.extend(children)
    return [np.array(c) for c in out]
