"""Per-pixel log-probability fields and their redistribution down the pyramid.

Each layer position contributes a logarithmic source: layer 0 the log
marginal probability of its truncated code, layers 1..L the log ratio of the
pair frequency to the product of its marginal frequencies.  The model's log
probability for the whole image is the weighted total

    total = sum_p S_0[p] + sum_{l=1..L} 2**-l * sum_p S_l[p],

where the 2**-l weight compensates for layer l being kept at full resolution
(its sources overlap 2**l-fold).

Two identities are worth stating because the tests lean on them:

* Backpropagation conserves the total.  Descending one level takes
  c = (carried + source) / 4 and adds c at both child positions, and since
  every child position has exactly two parents on the torus, each level's
  pixel sum is (previous + source sum) / 2.  Unrolled from the top this
  reproduces exactly the 2**-l weights, so the final image's pixel sum
  equals the weighted total.
* The level-1 term can be rewritten in co-occurrence form.  On the torus
  every pixel appears once as the upper and once as the lower partner of a
  level-1 pair, so summing half of (S_1[p] + S_0[p] + S_0[partner of p])
  over p equals 0.5 * sum S_1 + sum S_0: half the log of a reassembled pair
  probability, summed over all overlapping pairs, is the same number as the
  marginal-plus-ratio split used above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pyramid import AceModel, Frame, LayerGeometry
from .stats import leaf_log_prob, pair_log_source, regularize

__all__ = [
    "SourceField",
    "ProbImage",
    "compute_sources",
    "total_logprob",
    "backpropagate",
    "layer_image",
    "to_display",
]


@dataclass(frozen=True)
class SourceField:
    """Full-resolution field of logarithmic probability sources for one level."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("source field must be 2-D")
        if self.level < 0:
            raise ValueError("levels are numbered from 0")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class ProbImage:
    """Pixel map of redistributed log probability plus the levels it came from."""

    values: np.ndarray
    provenance: tuple[int, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("probability image must be 2-D")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "provenance", tuple(int(p) for p in self.provenance))


def compute_sources(model: AceModel, frames: list[Frame]) -> list[SourceField]:
    """Evaluate every layer's log sources for a propagated frame stack.

    Histograms are regularized here, at scoring time, so stored models keep
    raw counts.  Frames must come from ``pyramid.propagate`` with the same
    model: one frame per level, equal shapes, codes within ``vq_bits``.
    """
    if len(frames) != len(model.layers) + 1:
        raise ValueError("frame/model mismatch: need one frame per level")
    base = frames[0]
    for f in frames:
        if f.codes.shape != base.codes.shape:
            raise ValueError("frame/model mismatch: frames differ in shape")
        if f.bits != model.config.vq_bits:
            raise ValueError("frame/model mismatch: frame code width differs from vq_bits")

    shift = model.config.vq_bits - model.config.hist_bits
    fields = [SourceField(0, leaf_log_prob(regularize(model.leaf_hist), base.codes >> shift))]
    for level, layer in enumerate(model.layers, start=1):
        f = frames[level - 1]
        partner = np.roll(f.codes, -layer.geometry.offset, axis=layer.geometry.axis)
        s = pair_log_source(regularize(layer.hist), f.codes >> shift, partner >> shift)
        fields.append(SourceField(level, s))
    return fields


def total_logprob(sources: list[SourceField]) -> float:
    """Weighted total of all sources; the model's log probability of the image."""
    _check_sources(sources)
    total = float(sources[0].values.sum())
    for field in sources[1:]:
        total += 2.0 ** -field.level * float(field.values.sum())
    return total


def _check_sources(sources: list[SourceField]) -> None:
    if not sources:
        raise ValueError("need at least the level-0 source field")
    shape = sources[0].values.shape
    for i, field in enumerate(sources):
        if field.level != i:
            raise ValueError("source fields must be ordered by level from 0")
        if field.values.shape != shape:
            raise ValueError("source fields must share one shape")


def _check_geoms(sources: list[SourceField], geometries: list[LayerGeometry]) -> None:
    if len(geometries) != len(sources) - 1:
        raise ValueError("need one geometry per level above 0")
    for level, g in enumerate(geometries, start=1):
        if g.level != level:
            raise ValueError("geometries must be ordered by level from 1")


def backpropagate(sources: list[SourceField],
                  geometries: list[LayerGeometry]) -> ProbImage:
    """Redistribute all sources to pixel coordinates.

    Descending from the top, each position quarters the sum of what arrived
    from above and its own source, then deposits that on both of its child
    positions (wrapped).  The result's pixel sum equals ``total_logprob``.
    """
    _check_sources(sources)
    _check_geoms(sources, geometries)
    acc = np.zeros_like(sources[0].values)
    for level in range(len(sources) - 1, 0, -1):
        c = (acc + sources[level].values) / 4.0
        g = geometries[level - 1]
        acc = c + np.roll(c, g.offset, axis=g.axis)
    return ProbImage(acc + sources[0].values, tuple(range(len(sources))))


def layer_image(sources: list[SourceField], level: int,
                geometries: list[LayerGeometry]) -> ProbImage:
    """Pixel map of one level's sources alone.

    Each source value spreads uniformly over its receptive-field footprint
    carrying total weight 2**-level, which is the same as running the
    backpropagation with every other level silenced.  Level 0 is returned
    as is.
    """
    _check_sources(sources)
    _check_geoms(sources, geometries)
    if not (0 <= level < len(sources)):
        raise ValueError("level out of range")
    if level == 0:
        return ProbImage(sources[0].values.copy(), (0,))
    acc = np.zeros_like(sources[0].values)
    for l in range(level, 0, -1):
        c = acc / 4.0
        if l == level:
            c = c + sources[level].values / 4.0
        g = geometries[l - 1]
        acc = c + np.roll(c, g.offset, axis=g.axis)
    return ProbImage(acc, (level,))


def to_display(img: ProbImage, invert: bool = False) -> Frame:
    """Affine map of the value range onto 0..255 with round half up.

    The minimum maps to 0 and the maximum to 255; a constant image maps to
    128 everywhere.  With ``invert`` the scale flips so the smallest values
    (least probable, under the usual reading) come out brightest.
    """
    values = img.values
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        out = np.full(values.shape, 128, dtype=np.int64)
        return Frame(out, 8)
    scaled = (values - lo) * (255.0 / (hi - lo))
    if invert:
        scaled = 255.0 - scaled
    out = np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.int64)
    return Frame(out, 8)
