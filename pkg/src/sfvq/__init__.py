"""Space-filling vector quantization.

Codebooks are ordered ``(N, dim)`` float arrays whose consecutive codewords
form a piecewise-linear curve through the data.
"""

from .analysis import (
    ArrangementReport,
    CorrelationProfile,
    adjacency_ratio,
    arrangement_report,
    correlation_profile,
    heatmap_matrix,
    inside_fraction,
    jump_count,
    outlier_count,
    pairwise_stats,
    pca_directions,
)
from .datasets import generate, hilbert_corners
from .directions import (
    DirectionVec,
    angle_deg,
    apply_shift,
    apply_shifts,
    extract_direction,
    pullback_codebook,
    sample_line,
)
from .io import read_vectors, render_curve_svg, render_heatmap_pgm, write_vectors
from .ordering import order_path, path_length
from .quantizer import (
    TrainConfig,
    assign_dithered,
    codeword_distortion,
    expand,
    init_norm_sorted,
    init_random,
    quantize_nearest,
    quantize_segment,
    segment_distortion,
    sfvq_loss_grad,
    train,
)

__version__ = "0.1.0"
