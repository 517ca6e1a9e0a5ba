"""lfpp-lab: a desk-scale laboratory for Liouville first passage percolation.

Samples zero-boundary discrete Gaussian free fields, builds the mollified
LFPP lattice metric, and runs the Monte Carlo campaigns (scaling exponents,
extreme-value statistics, bridge occupation bounds, and modulus-of-continuity
fits) behind a reproducible experiment harness.
"""

from ._kernels import IMPL as kernel_impl
from .grids import CircleAverageSeries, FieldGrid, GridError, GridSpec, load_field, save_field
from .fields import (circle_average, circle_average_batch, circle_average_series,
                     radial_lateral_independence_test, replicate_seed, sample_dgff)
from .greens import GreensOracle, UNIT_CR_SQUARE_SIDE
from .metric import (AnnulusSpec, DiskSpec, DistanceResult, WeightedLattice, distance,
                     distance_across, distance_around, internal_distance,
                     left_right_crossing_cost)
from .mollify import MollifiedField, kernel_table, mollify

__version__ = "0.1.0"

__all__ = [
    "AnnulusSpec", "CircleAverageSeries", "DiskSpec", "DistanceResult", "FieldGrid",
    "GreensOracle", "GridError", "GridSpec", "MollifiedField", "UNIT_CR_SQUARE_SIDE",
    "WeightedLattice", "circle_average", "circle_average_batch", "circle_average_series",
    "distance", "distance_across", "distance_around", "internal_distance", "kernel_impl",
    "kernel_table", "left_right_crossing_cost", "load_field", "mollify",
    "radial_lateral_independence_test", "replicate_seed", "sample_dgff", "save_field",
]
