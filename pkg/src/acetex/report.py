"""Figure and summary rendering for scored images.

Writes a panel montage of the per-layer images, a bar chart of each layer's
weighted contribution to the total log probability, and a CSV with one row
per layer, all into one output directory.  Rendering uses the Agg backend so
it works headless.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .probimage import backpropagate, compute_sources, layer_image, to_display, total_logprob
from .pyramid import AceModel, Frame, layer_distortions, propagate

__all__ = ["write_report"]


def write_report(model: AceModel, img: Frame, out_dir: Path, mode: str = "anomaly") -> float:
    """Score ``img`` and render figures plus ``layer_summary.csv`` into ``out_dir``.

    Returns the total log probability of the image under the model.
    """
    if mode not in ("anomaly", "probability"):
        raise ValueError("mode must be 'anomaly' or 'probability'")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    frames = propagate(model, img)
    sources = compute_sources(model, frames)
    geoms = [layer.geometry for layer in model.layers]
    invert = mode == "anomaly"
    levels = len(sources)

    panels = [to_display(layer_image(sources, lv, geoms), invert=invert) for lv in range(levels)]
    panels.append(to_display(backpropagate(sources, geoms), invert=invert))
    titles = ["layer 0 (1x1)"]
    titles += [f"layer {g.level} ({g.field_w}x{g.field_h})" for g in geoms]
    titles.append("combined")

    ncols = 4
    nrows = -(-len(panels) // ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.0 * ncols, 3.2 * nrows))
    for ax, panel, title in zip(np.ravel(axes), panels, titles):
        ax.imshow(panel.codes, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
        ax.set_title(title, fontsize=9)
    for ax in np.ravel(axes):
        ax.set_axis_off()
    fig.suptitle(f"{mode} images")
    fig.tight_layout()
    fig.savefig(out_dir / "layers.png", dpi=150)
    plt.close(fig)

    weighted = [float(sources[0].values.sum())]
    weighted += [2.0 ** -f.level * float(f.values.sum()) for f in sources[1:]]
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    ax.bar(range(levels), weighted, color="steelblue")
    ax.set_xlabel("layer")
    ax.set_ylabel("weighted log-probability contribution")
    ax.set_xticks(range(levels))
    fig.tight_layout()
    fig.savefig(out_dir / "contributions.png", dpi=150)
    plt.close(fig)

    dists = layer_distortions(model, frames)
    with open(out_dir / "layer_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "layer", "direction", "offset", "field_w", "field_h",
            "source_sum", "weighted_sum", "hist_occupancy", "distortion",
        ])
        leaf = model.leaf_hist.counts
        writer.writerow([
            0, "-", 0, 1, 1,
            f"{float(sources[0].values.sum()):.9g}", f"{weighted[0]:.9g}",
            f"{np.count_nonzero(leaf) / leaf.size:.6g}", "",
        ])
        for layer, field, w, dist in zip(model.layers, sources[1:], weighted[1:], dists):
            g = layer.geometry
            counts = layer.hist.counts
            writer.writerow([
                g.level, g.direction, g.offset, g.field_w, g.field_h,
                f"{float(field.values.sum()):.9g}", f"{w:.9g}",
                f"{np.count_nonzero(counts) / counts.size:.6g}", f"{dist:.9g}",
            ])

    return total_logprob(sources)
