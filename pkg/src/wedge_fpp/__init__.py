"""First-passage percolation on wedge subgraphs of the square lattice."""
from .wedge import WedgeFunction, WedgeGraph, build_graph, ResourceError
from .rng import WeightModel, WeightField, PercConfig, sample_weight_field, sample_rectangle_config
from .fpp import (passage_time, dual_separating_count, dual_level_count, open_crossing_count,
                  top_down_crossing_exists)

__version__ = "0.1.0"
SCHEMA = "wedge-fpp/1"

__all__ = [
    "WedgeFunction", "WedgeGraph", "build_graph", "ResourceError",
    "WeightModel", "WeightField", "PercConfig", "sample_weight_field", "sample_rectangle_config",
    "passage_time", "dual_separating_count", "dual_level_count", "open_crossing_count",
    "top_down_crossing_exists",
    "SCHEMA",
]
