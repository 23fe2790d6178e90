"""Hierarchy of coded image layers with alternating pair directions.

Layer l recodes each position from the pair (frame[p], frame[p + d * dir]),
with the partner direction alternating vertical, horizontal, vertical, ...
and the offset d doubling every second layer.  Every layer keeps full
resolution and wraps toroidally, so each position of every layer is defined
and receptive fields tile the torus; the price is that statistics near the
borders mix opposite edges of the image, which is the intended trade for
never having to shrink or pad frames.

The receptive field of a layer-l code spans 2**floor(l/2) columns and
2**ceil(l/2) rows (with the default vertical start), so the footprint
sequence runs 1x2, 2x2, 2x4, 4x4, ... and squares up at every even layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Xorshift64Star
from .stats import Histogram1D, Histogram2D, accumulate, accumulate1d
from .vq import Codebook, NeighborhoodKernel, TrainSchedule, build_lut, train_topographic

__all__ = [
    "Frame",
    "LayerGeometry",
    "AceConfig",
    "AceLayer",
    "AceModel",
    "min_image_extent",
    "wedge_correct",
    "quantize_bits",
    "layer_geometry",
    "forward_layer",
    "train_model",
    "propagate",
    "layer_distortions",
]


@dataclass(frozen=True)
class Frame:
    """2-D grid of integer codes, each strictly below ``2**bits``."""

    codes: np.ndarray
    bits: int

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[0] < 1 or codes.shape[1] < 1:
            raise ValueError("frame codes must form a non-empty 2-D grid")
        if not (1 <= self.bits <= 16):
            raise ValueError("frame bits must be between 1 and 16")
        if codes.min() < 0 or codes.max() >= (1 << self.bits):
            raise ValueError(f"codes must lie in [0, 2**{self.bits})")
        object.__setattr__(self, "codes", codes)

    @property
    def height(self) -> int:
        return int(self.codes.shape[0])

    @property
    def width(self) -> int:
        return int(self.codes.shape[1])


@dataclass(frozen=True)
class LayerGeometry:
    """Pairing rule of one layer: direction, partner offset, receptive field."""

    level: int
    direction: str
    offset: int
    field_w: int
    field_h: int

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("layer levels start at 1")
        if self.direction not in ("v", "h"):
            raise ValueError("direction must be 'v' or 'h'")
        if self.offset != 1 << ((self.level - 1) // 2):
            raise ValueError("offset must be 2**floor((level - 1) / 2)")
        lo = 1 << (self.level // 2)
        hi = 1 << ((self.level + 1) // 2)
        if sorted((self.field_w, self.field_h)) != sorted((lo, hi)):
            raise ValueError("receptive field must span 2**floor(l/2) by 2**ceil(l/2)")

    @property
    def axis(self) -> int:
        """Array axis the partner offset moves along (0 rows, 1 columns)."""
        return 0 if self.direction == "v" else 1


def layer_geometry(level: int, start: str = "v") -> LayerGeometry:
    """Geometry of layer ``level`` with directions alternating from ``start``."""
    if level < 1:
        raise ValueError("layer levels start at 1")
    if start not in ("v", "h"):
        raise ValueError("start direction must be 'v' or 'h'")
    odd = level % 2 == 1
    direction = start if odd else ("h" if start == "v" else "v")
    offset = 1 << ((level - 1) // 2)
    lo = 1 << (level // 2)
    hi = 1 << ((level + 1) // 2)
    if start == "v":
        field_w, field_h = lo, hi
    else:
        field_w, field_h = hi, lo
    return LayerGeometry(level, direction, offset, field_w, field_h)


@dataclass(frozen=True)
class AceConfig:
    """Training knobs that also define how a model scores images."""

    layers: int = 8
    vq_bits: int = 8
    hist_bits: int = 6
    wedge: bool = True
    seed: int = 1

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("need at least one layer")
        if not (1 <= self.vq_bits <= 8):
            raise ValueError("vq_bits must be between 1 and 8")
        if not (1 <= self.hist_bits <= self.vq_bits):
            raise ValueError("hist_bits must be between 1 and vq_bits")


@dataclass
class AceLayer:
    """One trained layer: geometry, codebook, its code lookup table, and the
    raw joint histogram of the truncated child pairs."""

    geometry: LayerGeometry
    codebook: Codebook
    lut: np.ndarray
    hist: Histogram2D


@dataclass
class AceModel:
    """Everything needed to score an image: config, per-layer codebooks and
    histograms, and the single-value histogram of the base layer."""

    config: AceConfig
    width: int
    height: int
    leaf_hist: Histogram1D
    layers: list[AceLayer]


def min_image_extent(layers: int) -> int:
    """Smallest image side that fits the deepest receptive field."""
    return 1 << ((layers + 1) // 2)


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def wedge_correct(img: Frame) -> Frame:
    """Remove the least-squares plane from an 8-bit image, keeping its mean.

    Compensates a linear illumination gradient: the fitted a*x + b*y + c is
    subtracted and the overall mean added back, then values are rounded half
    up and clamped to [0, 255].
    """
    if img.bits != 8:
        raise ValueError("wedge correction expects an 8-bit frame")
    h, w = img.codes.shape
    ys, xs = np.mgrid[0:h, 0:w]
    values = img.codes.astype(float)
    # On a full grid the centered coordinates are orthogonal to each other
    # and to the constant column, so the normal equations are diagonal and
    # the slopes come out in exact half-integer arithmetic for integer data.
    xc = xs - (w - 1) / 2.0
    yc = ys - (h - 1) / 2.0
    sxx = float((xc * xc).sum())
    syy = float((yc * yc).sum())
    a = float((xc * values).sum()) / sxx if sxx > 0 else 0.0
    b = float((yc * values).sum()) / syy if syy > 0 else 0.0
    flat = values - a * xc - b * yc
    out = np.clip(_round_half_up(flat), 0, 255).astype(np.int64)
    return Frame(out, 8)


def quantize_bits(img: Frame, bits: int) -> Frame:
    """Keep the top ``bits`` bits of every code (right shift by the excess)."""
    if not (1 <= bits <= img.bits):
        raise ValueError("target bits must be between 1 and the frame's bits")
    return Frame(img.codes >> (img.bits - bits), bits)


def forward_layer(frame: Frame, lut: np.ndarray, geom: LayerGeometry) -> Frame:
    """Recode every position from its wrapped (own, partner) value pair."""
    n = 1 << frame.bits
    if lut.shape != (n, n):
        raise ValueError("lookup table must cover the frame's code range squared")
    partner = np.roll(frame.codes, -geom.offset, axis=geom.axis)
    return Frame(lut[frame.codes, partner], frame.bits)


def _preprocess(img: Frame, config: AceConfig) -> Frame:
    if img.bits != 8:
        raise ValueError("expected an 8-bit input image")
    need = min_image_extent(config.layers)
    if img.height < need or img.width < need:
        raise ValueError(
            f"image {img.width}x{img.height} is smaller than the {need}x{need} "
            f"receptive field of layer {config.layers}"
        )
    out = wedge_correct(img) if config.wedge else img
    return quantize_bits(out, config.vq_bits)


def _wrapped_pairs(frame: Frame, geom: LayerGeometry) -> tuple[np.ndarray, np.ndarray]:
    partner = np.roll(frame.codes, -geom.offset, axis=geom.axis)
    return frame.codes.ravel(), partner.ravel()


def train_model(img: Frame, config: AceConfig,
                kernel: NeighborhoodKernel = NeighborhoodKernel(),
                updates_per_size_factor: int = 20,
                start_direction: str = "v") -> AceModel:
    """Learn codebooks and pair histograms for every layer of the hierarchy.

    Each layer's codebook is trained topographically on all wrapped child
    pairs of the previous frame, then frozen into a lookup table that both
    produces the next frame and later recodes scoring images.  Histograms
    store raw counts of the pairs truncated to ``hist_bits``.  Per-layer
    seeds are drawn up front from the config seed, so results depend only on
    the image and the config.
    """
    frame = _preprocess(img, config)
    shift = config.vq_bits - config.hist_bits

    leaf = accumulate1d(Histogram1D.zeros(config.hist_bits), frame.codes >> shift)

    master = Xorshift64Star(config.seed)
    seeds = [master.next_uint64() for _ in range(config.layers)]

    layers: list[AceLayer] = []
    for level in range(1, config.layers + 1):
        geom = layer_geometry(level, start_direction)
        own, partner = _wrapped_pairs(frame, geom)
        pairs = np.stack([own, partner], axis=1).astype(float)
        sched = TrainSchedule(config.vq_bits, updates_per_size_factor, seeds[level - 1])
        cb = train_topographic(pairs, sched, kernel)
        lut = build_lut(cb, frame.bits)
        hist = accumulate(
            Histogram2D.zeros(config.hist_bits),
            np.stack([own >> shift, partner >> shift], axis=1),
        )
        layers.append(AceLayer(geom, cb, lut, hist))
        frame = forward_layer(frame, lut, geom)

    return AceModel(config, img.width, img.height, leaf, layers)


def propagate(model: AceModel, img: Frame) -> list[Frame]:
    """Run an image through the stored preprocessing and layer tables.

    Returns ``layers + 1`` frames, all at the image's full resolution, with
    frame 0 the quantized (and possibly wedge-corrected) input.  Applied to
    the training image this reproduces the training frames bit for bit.
    """
    frame = _preprocess(img, model.config)
    frames = [frame]
    for layer in model.layers:
        frame = forward_layer(frame, layer.lut, layer.geometry)
        frames.append(frame)
    return frames


def layer_distortions(model: AceModel, frames: list[Frame]) -> list[float]:
    """Mean squared quantization error of each layer's child pairs."""
    if len(frames) != len(model.layers) + 1:
        raise ValueError("need one frame per layer plus the base frame")
    out = []
    for layer, frame in zip(model.layers, frames):
        own, partner = _wrapped_pairs(frame, layer.geometry)
        codes = layer.lut[own, partner]
        chosen = layer.codebook.vectors[codes]
        dx = own - chosen[:, 0]
        dy = partner - chosen[:, 1]
        out.append(float(np.mean(dx * dx + dy * dy)))
    return out
