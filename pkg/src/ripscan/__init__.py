"""Crash-anomaly scanning via persistence landscapes of return windows."""

from .anomaly import (AnomalyRecord, PipelineConfig, ReturnVector,
                      ema_emvar_step, log_returns, norm_series, run_pipeline,
                      sliding_windows, window_norm, z_score)
from .geometry import DistanceMatrix, PointCloud, distance_matrix
from .homology import (PersistenceDiagram, PersistenceInterval,
                       compute_persistence)
from .io import (AlignedSeries, AlignPolicy, BarRecord, FormatSpec, ShockSpec,
                 SynthSpec, align, read_bars, synth_generate)
from .landscape import (Landscape, Tent, build_landscape, landscape_norm,
                        tent_eval)
from .rips import FilteredSimplex, Filtration, build_filtration

__version__ = "0.1.0"

__all__ = [
    "AlignPolicy", "AlignedSeries", "AnomalyRecord", "BarRecord",
    "DistanceMatrix", "FilteredSimplex", "Filtration", "FormatSpec",
    "Landscape", "PersistenceDiagram", "PersistenceInterval", "PipelineConfig",
    "PointCloud", "ReturnVector", "ShockSpec", "SynthSpec", "Tent", "align",
    "build_filtration", "build_landscape", "compute_persistence",
    "distance_matrix", "ema_emvar_step", "landscape_norm", "log_returns",
    "norm_series", "read_bars", "run_pipeline", "sliding_windows",
    "synth_generate", "tent_eval", "window_norm", "z_score",
]
