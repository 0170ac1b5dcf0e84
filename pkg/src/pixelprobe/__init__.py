"""pixelprobe: one-pixel attack toolkit for black-box image scorers.

The package covers the full pipeline: differential-evolution single-pixel
attacks, brute-force per-pixel confidence maps over a quantized color
space, chromatic / spatial / parity analyses of attack records, and PNG
heatmap rendering. Scoring runs through one batched interface backed by
either a built-in stride-2 convolutional network or an external process
speaking a newline-delimited JSON protocol.
"""

from .analysis import (
    ChromaticPoint,
    ParityReport,
    PlacementGrid,
    SpatialStats,
    checkerboard_score,
    chromatic_rmse,
    chromatic_scatter,
    parity_analysis,
    placement_heatmap,
    spatial_stats,
)
from .attack import (
    AttackRecord,
    DEConfig,
    Direction,
    is_success,
    read_records,
    run_attack,
    write_records,
)
from .confmap import (
    ConfidenceMap,
    MapComputationError,
    compute_confidence_map,
    enumerate_vectors,
    export_map_csv,
    load_map,
    save_map,
    vector_count,
)
from .errors import (
    BoundsError,
    ConfigurationError,
    ContractViolationError,
    DataError,
    EmptyCollectionError,
    FormatError,
    ImageIOError,
    ParameterError,
    PixelProbeError,
    ScorerProtocolError,
)
from .image import (
    AttackVector,
    ColorSet,
    Image,
    apply_attack,
    color_grid,
    load_image,
    neighborhood_mean,
    save_image,
)
from .network import (
    NetworkWeights,
    builtin_forward,
    load_weights,
    random_weights,
    save_weights,
    spotnet_weights,
)
from .render import render_counts, render_field, render_map
from .scorer import (
    BuiltinScorer,
    ExternalScorer,
    Scorer,
    ScorerSpec,
    open_scorer,
    score_batch,
)
from .synthetic import random_image, spot_image, uniform_image

__version__ = "0.1.0"
