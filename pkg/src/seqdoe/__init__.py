"""Exploration-oriented design of experiments: one-shot and sequential samplers,
design-quality metrics, surrogate models and an RMSE evaluation harness."""

__version__ = "0.1.0"

from .design import (
    Bounds,
    DesignMatrix,
    MetricReport,
    crowding_distance,
    intersite_distance,
    lhs_fraction,
    metric_report,
    phi_p,
    projected_distance,
    read_design,
    scale_from_unit,
    scale_to_unit,
    voronoi_cell_areas,
    write_design,
)
from .oneshot import load_design, random_lhs, sf_lhs
from .lowdiscrepancy import SequenceState, halton, sobol
from .adaptive import AdaptiveSampler, AdaptiveSpec

__all__ = [
    "AdaptiveSampler",
    "AdaptiveSpec",
    "Bounds",
    "DesignMatrix",
    "MetricReport",
    "SequenceState",
    "crowding_distance",
    "halton",
    "intersite_distance",
    "lhs_fraction",
    "load_design",
    "metric_report",
    "phi_p",
    "projected_distance",
    "random_lhs",
    "read_design",
    "scale_from_unit",
    "scale_to_unit",
    "sf_lhs",
    "sobol",
    "voronoi_cell_areas",
    "write_design",
]
