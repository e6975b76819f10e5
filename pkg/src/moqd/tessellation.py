"""Centroidal Voronoi tessellation of descriptor space and cell lookup.

Centroids come from Lloyd's k-means over a large uniform sample of the
descriptor box, seeded with k-means++.  Everything is plain numpy so the
result is bitwise reproducible for a given (cell count, bounds, seed,
sample count, iteration cap) regardless of BLAS threading.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import Bounds


@dataclass(frozen=True)
class CvtTessellation:
    """Immutable set of cell centroids over a bounded descriptor space."""

    centroids: np.ndarray  # (num_cells, descriptor_dim)
    descriptor_bounds: Bounds

    def __post_init__(self):
        c = np.array(self.centroids, dtype=float)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("centroids must be a non-empty (M, d) matrix")
        if c.shape[1] != self.descriptor_bounds.dim:
            raise ValueError("centroid dimension does not match descriptor bounds")
        if not self.descriptor_bounds.contains(c):
            raise ValueError("all centroids must lie within the descriptor bounds")
        if np.unique(c, axis=0).shape[0] != c.shape[0]:
            raise ValueError("centroids must be pairwise distinct")
        c.setflags(write=False)
        object.__setattr__(self, "centroids", c)

    @property
    def num_cells(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def cell_index(self, descriptor: np.ndarray) -> int:
        """Index of the Euclidean-nearest centroid; ties go to the lowest index."""
        d = np.asarray(descriptor, dtype=float)
        if d.shape != (self.dim,):
            raise ValueError(f"descriptor has shape {d.shape}, expected ({self.dim},)")
        dist2 = ((self.centroids - d) ** 2).sum(axis=1)
        return int(np.argmin(dist2))

    def cell_indices(self, descriptors: np.ndarray) -> np.ndarray:
        """Vectorized nearest-centroid lookup for a (n, d) matrix."""
        d = np.asarray(descriptors, dtype=float)
        if d.ndim != 2 or d.shape[1] != self.dim:
            raise ValueError(f"descriptors have shape {d.shape}, expected (n, {self.dim})")
        out = np.empty(d.shape[0], dtype=np.int64)
        chunk = max(1, (1 << 22) // max(1, self.num_cells))
        for start in range(0, d.shape[0], chunk):
            block = d[start : start + chunk]
            dist2 = ((block[:, None, :] - self.centroids[None, :, :]) ** 2).sum(axis=2)
            out[start : start + block.shape[0]] = np.argmin(dist2, axis=1)
        return out

    def save_centroids_csv(self, path):
        """Write one row per centroid for external plotting."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"c{i}" for i in range(self.dim)])
            for row in self.centroids:
                writer.writerow([repr(float(v)) for v in row])


def cell_index(tessellation: CvtTessellation, descriptor: np.ndarray) -> int:
    return tessellation.cell_index(descriptor)


def _kmeans_pp_init(samples: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = samples.shape[0]
    centroids = np.empty((k, samples.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = samples[first]
    if k == 1:
        return centroids
    d2 = ((samples - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # All remaining samples coincide with chosen centroids.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = samples[idx]
        d2 = np.minimum(d2, ((samples - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _assign(samples: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    out = np.empty(samples.shape[0], dtype=np.int64)
    chunk = max(1, (1 << 22) // max(1, centroids.shape[0]))
    for start in range(0, samples.shape[0], chunk):
        block = samples[start : start + chunk]
        dist2 = ((block[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        out[start : start + block.shape[0]] = np.argmin(dist2, axis=1)
    return out


def build_cvt(
    num_cells: int,
    bounds: Bounds,
    rng: np.random.Generator,
    num_init_samples: int = 50_000,
    kmeans_iters: int = 100,
) -> CvtTessellation:
    """Construct a CVT with `num_cells` centroids inside `bounds`.

    Lloyd's iterations run on `num_init_samples` uniform points until the
    centroids stop moving or `kmeans_iters` is reached.  Deterministic for
    a given rng state.
    """
    if num_cells < 1:
        raise ValueError("num_cells must be >= 1")
    if num_init_samples < num_cells:
        raise ValueError(
            f"num_init_samples ({num_init_samples}) must be >= num_cells ({num_cells})"
        )
    samples = bounds.sample(rng, num_init_samples)
    centroids = _kmeans_pp_init(samples, num_cells, rng)
    for _ in range(kmeans_iters):
        labels = _assign(samples, centroids)
        counts = np.bincount(labels, minlength=num_cells)
        new_centroids = centroids.copy()
        occupied = counts > 0
        for dim in range(samples.shape[1]):
            sums = np.bincount(labels, weights=samples[:, dim], minlength=num_cells)
            new_centroids[occupied, dim] = sums[occupied] / counts[occupied]
        if np.array_equal(new_centroids, centroids):
            break
        centroids = new_centroids
    return CvtTessellation(centroids=bounds.clip(centroids), descriptor_bounds=bounds)
