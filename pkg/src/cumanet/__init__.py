"""Uplink multi-cell simulator and closed-form performance model for a
sign-aligned fluid-antenna port-combining receiver."""

__version__ = "0.1.0"

from .analysis import AnalyticalModel, build_model
from .channel import ChannelVector, CorrelationMatrix, PortGrid, build_correlation
from .geometry import NetworkRealization, PointSet, build_realization, sample_ppp
from .montecarlo import EmpiricalDistribution, SimConfig, run_experiment

__all__ = [
    "AnalyticalModel",
    "build_model",
    "ChannelVector",
    "CorrelationMatrix",
    "PortGrid",
    "build_correlation",
    "NetworkRealization",
    "PointSet",
    "build_realization",
    "sample_ppp",
    "EmpiricalDistribution",
    "SimConfig",
    "run_experiment",
    "__version__",
]
