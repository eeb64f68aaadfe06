"""Local Legendre frame approximation from equispaced samples."""

from .estimator import LocalLegendreFrame, SingularityCorrectedFrame
from .exceptions import (
    ConfigError,
    DimensionError,
    DomainError,
    FormatError,
    InvariantError,
    LLFError,
    LocalizationError,
    NumericalError,
    WindowTooNarrowError,
)
from .legendre import FrameConfig, legendre_orthonormal, scaled_frame_eval
from .offline import (
    ReferenceFactorization,
    SamplingMatrix,
    assemble_matrix,
    build_factorization,
    factorize,
    get_factorization,
    load_factorization,
    save_factorization,
)
from .online import (
    LocalCoefficients,
    PiecewiseApproximant,
    approximate,
    evaluate,
    lagrange_interp_bound,
    load_approximant,
    max_error,
    save_approximant,
    solve_local,
)
from .partition import Partition, ReferenceNodes, locate, physical_nodes, total_nodes, uniform_partition
from .singularity import CorrectedApproximant, SingularityReport, analyze, correct, detect, localize

__version__ = "0.1.0"
