"""Codebook training for 2-D vectors: batch LBG and topographic updates.

The topographic trainer orders codebook entries along a 1-D chain.  Each
update pulls the nearest entry toward the sample and its chain neighbours a
little with it, which keeps nearby indices representing nearby vectors; the
codebook grows by midpoint interpolation from 2 entries up to the target
size.  Every random draw goes through the seeded generator in ``rng``, so a
schedule's seed fixes the result exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Xorshift64Star

__all__ = [
    "Codebook",
    "NeighborhoodKernel",
    "TrainSchedule",
    "encode_nn",
    "lbg_train",
    "topo_update",
    "interpolate_double",
    "train_topographic",
    "build_lut",
]


@dataclass(frozen=True)
class Codebook:
    """Ordered list of 2-D reference vectors; index order is meaningful."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 1:
            raise ValueError("codebook must be a non-empty (N, 2) array")
        if not np.all(np.isfinite(v)):
            raise ValueError("codebook vectors must be finite")
        object.__setattr__(self, "vectors", v)

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


@dataclass(frozen=True)
class NeighborhoodKernel:
    """Update weights along the code chain: eps0 at the winner, eps1 at distance 1."""

    eps0: float = 0.1
    eps1: float = 0.05

    def __post_init__(self):
        if not (0.0 <= self.eps1 < self.eps0 < 1.0):
            raise ValueError("kernel must satisfy 0 <= eps1 < eps0 < 1")


@dataclass(frozen=True)
class TrainSchedule:
    """Growth schedule: updates_per_size_factor * N updates at each size N."""

    target_bits: int
    updates_per_size_factor: int = 20
    seed: int = 1

    def __post_init__(self):
        if not (1 <= self.target_bits <= 16):
            raise ValueError("target_bits must be between 1 and 16")
        if self.updates_per_size_factor < 0:
            raise ValueError("updates_per_size_factor must be non-negative")


def encode_nn(cb: Codebook, x) -> int:
    """Index of the nearest codebook entry; ties go to the lowest index."""
    d = cb.vectors - np.asarray(x, dtype=float)
    return int(np.argmin(np.einsum("ij,ij->i", d, d)))


def _nearest_bulk(points: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    d2 = (
        np.einsum("ij,ij->i", points, points)[:, None]
        - 2.0 * points @ vectors.T
        + np.einsum("ij,ij->i", vectors, vectors)[None, :]
    )
    return d2.argmin(axis=1)


def lbg_train(data, cb0: Codebook, iters: int):
    """Batch LBG: alternate nearest-neighbour assignment and centroid replacement.

    Cells that capture no data keep their previous vector.  Returns the final
    codebook and the per-iteration mean squared distortion, measured against
    a fresh assignment after each centroid update; the trace never increases.
    """
    pts = np.asarray(data, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 1:
        raise ValueError("training data must be non-empty")
    if iters < 0:
        raise ValueError("iters must be non-negative")
    vectors = cb0.vectors.copy()
    n = len(vectors)
    trace = np.empty(iters, dtype=float)
    for it in range(iters):
        assign = _nearest_bulk(pts, vectors)
        sums = np.zeros_like(vectors)
        np.add.at(sums, assign, pts)
        counts = np.bincount(assign, minlength=n)
        filled = counts > 0
        vectors[filled] = sums[filled] / counts[filled, None]
        resid = pts - vectors[_nearest_bulk(pts, vectors)]
        trace[it] = float(np.mean(np.einsum("ij,ij->i", resid, resid)))
    return Codebook(vectors), trace


def _topo_step(vectors: np.ndarray, x: np.ndarray, kernel: NeighborhoodKernel) -> None:
    d = vectors - x
    y = int(np.argmin(np.einsum("ij,ij->i", d, d)))
    vectors[y] += kernel.eps0 * (x - vectors[y])
    if kernel.eps1 > 0.0:
        if y > 0:
            vectors[y - 1] += kernel.eps1 * (x - vectors[y - 1])
        if y + 1 < vectors.shape[0]:
            vectors[y + 1] += kernel.eps1 * (x - vectors[y + 1])


def topo_update(cb: Codebook, x, kernel: NeighborhoodKernel) -> Codebook:
    """One topographic update toward sample ``x``; only indices within chain
    distance 1 of the winner move."""
    vectors = cb.vectors.copy()
    _topo_step(vectors, np.asarray(x, dtype=float), kernel)
    return Codebook(vectors)


def _interp_double(vectors: np.ndarray) -> np.ndarray:
    n = vectors.shape[0]
    out = np.empty((2 * n, 2), dtype=float)
    out[0::2] = vectors
    out[1:-1:2] = 0.5 * (vectors[:-1] + vectors[1:])
    out[-1] = vectors[-1]
    return out


def interpolate_double(cb: Codebook) -> Codebook:
    """Double the codebook along the chain: keep each entry, insert midpoints,
    and duplicate the last entry to fill the final slot."""
    return Codebook(_interp_double(cb.vectors))


def train_topographic(data, sched: TrainSchedule,
                      kernel: NeighborhoodKernel = NeighborhoodKernel()) -> Codebook:
    """Grow a codebook from a seeded random pair of training vectors.

    At each size N the trainer applies ``factor * N`` topographic updates on
    uniformly drawn samples, then doubles by interpolation, until the target
    size ``2**target_bits`` is reached; the pass at the final size is the
    last one.  Identical inputs and seed give a bit-identical codebook.
    """
    pts = np.asarray(data, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise ValueError("need at least two training vectors")
    gen = Xorshift64Star(sched.seed)
    vectors = np.stack([
        pts[gen.randrange(pts.shape[0])],
        pts[gen.randrange(pts.shape[0])],
    ]).astype(float)
    target = 1 << sched.target_bits
    while True:
        for _ in range(sched.updates_per_size_factor * vectors.shape[0]):
            _topo_step(vectors, pts[gen.randrange(pts.shape[0])], kernel)
        if vectors.shape[0] == target:
            break
        vectors = _interp_double(vectors)
    return Codebook(vectors)


def build_lut(cb: Codebook, child_bits: int) -> np.ndarray:
    """Tabulate ``encode_nn`` over every integer child-code pair.

    Entry ``(a, b)`` is the index of the codebook vector nearest to the point
    ``(a, b)``.  Distances are evaluated the same way ``encode_nn`` does, so
    the table and the function never disagree on ties.
    """
    if not (1 <= child_bits <= 8):
        raise ValueError("child_bits must be between 1 and 8")
    n = 1 << child_bits
    vx = cb.vectors[:, 0]
    vy = cb.vectors[:, 1]
    lut = np.empty((n, n), dtype=np.int64)
    b = np.arange(n, dtype=float)
    for a in range(n):
        d2 = (a - vx[None, :]) ** 2 + (b[:, None] - vy[None, :]) ** 2
        lut[a] = d2.argmin(axis=1)
    return lut
