"""Benchmark problems: two bi-objective Rastrigin variants plus a registry.

Both variants score a 100-dimensional real vector with two shifted
Rastrigin objectives.  The raw Rastrigin sum is a minimization landscape,
so the objectives are NEGATED here: the shift points (all-components equal
to lambda_1 or lambda_2) are then the global maximizers of their objective,
each attaining +10 * n.  Everything downstream assumes maximization.

Descriptors always land inside the clip box [-2, 4]^2:

* ``rastrigin_multi``  - first two components of the vector, clipped.
* ``rastrigin_proj``   - means of the clipped first and second halves.

The registry is the seam where new problems (for example simulator-backed
control tasks) attach without touching the rest of the library.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Callable

import numpy as np

from .core import Bounds, ProblemDefinition

# Conventional Rastrigin search box; variation operators clip against it.
SEARCH_LO = -5.12
SEARCH_HI = 5.12

CLIP_LO = -2.0
CLIP_HI = 4.0


@dataclass(frozen=True)
class RastriginConfig:
    n: int = 100
    lambda1: float = 0.0
    lambda2: float = 2.2
    clip_lo: float = CLIP_LO
    clip_hi: float = CLIP_HI

    def __post_init__(self):
        if self.lambda1 == self.lambda2:
            raise ValueError("objective shifts must differ")
        if self.clip_lo >= self.clip_hi:
            raise ValueError("clip range must be non-empty")


def _rastrigin_sum(x: np.ndarray, shift: float) -> np.ndarray:
    """Sum of (x_i - shift)^2 - 10 cos(2 pi (x_i - shift)) over the last axis."""
    z = x - shift
    return (z * z - 10.0 * np.cos(2.0 * np.pi * z)).sum(axis=-1)


def rastrigin_objectives(x: np.ndarray, cfg: RastriginConfig) -> np.ndarray:
    """Negated shifted-Rastrigin pair; maximized at the shift points."""
    x = np.asarray(x, dtype=float)
    f1 = -_rastrigin_sum(x, cfg.lambda1)
    f2 = -_rastrigin_sum(x, cfg.lambda2)
    return np.stack([f1, f2], axis=-1)


def _clip(x: np.ndarray, cfg: RastriginConfig) -> np.ndarray:
    return np.clip(x, cfg.clip_lo, cfg.clip_hi)


def rastrigin_multi_descriptor(x: np.ndarray, cfg: RastriginConfig) -> np.ndarray:
    """Clipped projection on the first two search dimensions."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise ValueError("need at least 2 dimensions for the projection descriptor")
    return _clip(x[..., :2], cfg)


def rastrigin_proj_descriptor(x: np.ndarray, cfg: RastriginConfig) -> np.ndarray:
    """Means of the clipped first and second halves of the vector."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n % 2 != 0:
        raise ValueError(f"half-mean descriptor needs an even dimension, got {n}")
    half = n // 2
    clipped = _clip(x, cfg)
    c1 = clipped[..., :half].mean(axis=-1)
    c2 = clipped[..., half:].mean(axis=-1)
    return np.stack([c1, c2], axis=-1)


def default_reference_point() -> np.ndarray:
    """Hypervolume reference for the Rastrigin domains.

    Loaded from calibration data committed with the package: the
    per-objective minimum fitness observed under uniform random search over
    the genotype box, floored to a round value.  See the `calibrate-ref`
    harness command for regenerating it.
    """
    payload = json.loads(
        resources.files("moqd.data").joinpath("rastrigin_reference.json").read_text()
    )
    return np.asarray(payload["reference"], dtype=float)


def _make_rastrigin(variant: str, cfg: RastriginConfig, reference=None) -> ProblemDefinition:
    if variant == "multi":
        descriptor = rastrigin_multi_descriptor
        name = "rastrigin_multi"
    elif variant == "proj":
        descriptor = rastrigin_proj_descriptor
        name = "rastrigin_proj"
    else:
        raise ValueError(f"unknown rastrigin variant: {variant!r}")

    def evaluate(genotype: np.ndarray):
        return rastrigin_objectives(genotype, cfg), descriptor(genotype, cfg)

    def evaluate_many(batch: np.ndarray):
        return rastrigin_objectives(batch, cfg), descriptor(batch, cfg)

    if reference is None:
        reference = default_reference_point()
    return ProblemDefinition(
        name=name,
        search_dim=cfg.n,
        num_objectives=2,
        descriptor_dim=2,
        genotype_bounds=Bounds.uniform(SEARCH_LO, SEARCH_HI, cfg.n),
        descriptor_bounds=Bounds.uniform(cfg.clip_lo, cfg.clip_hi, 2),
        hypervolume_reference=reference,
        evaluate=evaluate,
        evaluate_many=evaluate_many,
    )


ProblemFactory = Callable[..., ProblemDefinition]

_REGISTRY: dict[str, ProblemFactory] = {}


def register_problem(name: str, factory: ProblemFactory):
    """Add a problem constructor to the registry (overwrites quietly)."""
    _REGISTRY[name] = factory


def available_problems() -> list[str]:
    return sorted(_REGISTRY)


def make_problem(name: str, **kwargs) -> ProblemDefinition:
    """Instantiate a registered problem by name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; registered: {available_problems()}"
        ) from None
    return factory(**kwargs)


def _rastrigin_multi_factory(n: int = 100, reference=None) -> ProblemDefinition:
    return _make_rastrigin("multi", RastriginConfig(n=n), reference)


def _rastrigin_proj_factory(n: int = 100, reference=None) -> ProblemDefinition:
    return _make_rastrigin("proj", RastriginConfig(n=n), reference)


register_problem("rastrigin_multi", _rastrigin_multi_factory)
register_problem("rastrigin_proj", _rastrigin_proj_factory)
