"""Multiscale texture statistics with per-layer probability and anomaly images.

The package learns the statistics of a homogeneous texture as a hierarchy of
vector-quantised pair codings, evaluates a closed-form maximum-entropy
probability for new images, and redistributes the log probability back to
pixels so statistical faults show up where they live.
"""

from .maxent import (
    DiscreteDist,
    InfeasibleConstraintError,
    IpfResult,
    NodeMap,
    RamDiscriminator,
    TreeSpec,
    entropy,
    ipf_oracle,
    kl_divergence,
    ram_score,
    ram_train,
    single_constraint_mem,
    tree_mem,
)
from .vq import (
    Codebook,
    NeighborhoodKernel,
    TrainSchedule,
    build_lut,
    encode_nn,
    interpolate_double,
    lbg_train,
    topo_update,
    train_topographic,
)
from .stats import (
    Histogram1D,
    Histogram2D,
    accumulate,
    accumulate1d,
    leaf_log_prob,
    log_table,
    pair_log_source,
    rebin,
    regularize,
)
from .pyramid import (
    AceConfig,
    AceLayer,
    AceModel,
    Frame,
    LayerGeometry,
    forward_layer,
    layer_distortions,
    layer_geometry,
    min_image_extent,
    propagate,
    quantize_bits,
    train_model,
    wedge_correct,
)
from .probimage import (
    ProbImage,
    SourceField,
    backpropagate,
    compute_sources,
    layer_image,
    to_display,
    total_logprob,
)
from .io import (
    ModelFormatError,
    PgmParseError,
    load_model,
    read_pgm,
    save_model,
    write_pgm,
)
from .rng import Xorshift64Star

__version__ = "0.1.0"
