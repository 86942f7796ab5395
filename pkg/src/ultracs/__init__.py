"""Lensless imaging with time-resolved compressive sensing.

Build physics-based transport operators for picosecond-resolution
sensors, design sensor layouts and illumination patterns that minimize
measurement coherence, and simulate + reconstruct full imaging runs.
"""

from .coherence import (
    CoherenceReport,
    coherence_frobenius,
    coherence_report,
    mutual_coherence_max,
    normalize_columns,
)
from .config import ConfigError, ExperimentConfig
from .metrics import psnr, ssim
from .patterns import (
    GramCache,
    PatternSet,
    PgdTrace,
    StackedTransport,
    baseline_patterns,
    coherence_cost,
    coherence_grad,
    normalized_transport_gram,
    optimize_patterns,
    stack_transports,
)
from .placement import (
    Placement,
    Region,
    place_grid_search,
    place_lloyd,
    place_sensors,
    placement_coherence_sweep,
    separation_objective,
)
from .scenes import make_scene
from .simrecon import (
    Measurement,
    ReconResult,
    TotalOperator,
    assemble_operator,
    pinv_reconstruct,
    simulate_measurement,
    tv_reconstruct,
)
from .transport import (
    SPEED_OF_LIGHT,
    LineScene,
    RingMap,
    SceneGrid,
    Sensor,
    TransportMatrix,
    build_transport,
    dynamic_range_coverage,
    one_d_transport,
    pixel_distances,
    resolution_limit,
    ring_map,
    ring_radii,
    single_pixel_transport,
)

__version__ = "0.1.0"

__all__ = [
    "SPEED_OF_LIGHT",
    "CoherenceReport",
    "ConfigError",
    "ExperimentConfig",
    "GramCache",
    "LineScene",
    "Measurement",
    "PatternSet",
    "PgdTrace",
    "Placement",
    "ReconResult",
    "Region",
    "RingMap",
    "SceneGrid",
    "Sensor",
    "StackedTransport",
    "TotalOperator",
    "TransportMatrix",
    "assemble_operator",
    "baseline_patterns",
    "build_transport",
    "coherence_cost",
    "coherence_frobenius",
    "coherence_grad",
    "coherence_report",
    "dynamic_range_coverage",
    "make_scene",
    "mutual_coherence_max",
    "normalize_columns",
    "normalized_transport_gram",
    "one_d_transport",
    "optimize_patterns",
    "pinv_reconstruct",
    "pixel_distances",
    "place_grid_search",
    "place_lloyd",
    "place_sensors",
    "placement_coherence_sweep",
    "psnr",
    "resolution_limit",
    "ring_map",
    "ring_radii",
    "separation_objective",
    "simulate_measurement",
    "single_pixel_transport",
    "ssim",
    "stack_transports",
    "tv_reconstruct",
]
