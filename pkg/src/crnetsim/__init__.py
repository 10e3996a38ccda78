"""Monte Carlo continuum-percolation simulator for ad hoc cognitive radio
networks: connectivity phase diagram and minimum-multihop-delay scaling."""

from .geometry import BoxRegion, SpatialIndex, distance
from .pointprocess import (PrimarySlotRealization, SecondaryNetwork, SeededRng,
                           SimulationParams, sample_poisson_points,
                           sample_primary_slot, sample_secondary_network)
from .opportunity import (Estimate, OpportunityContext, estimate_p0,
                          has_bidirectional_opportunity, has_opportunity)
from .graph import (CommGraph, TopoGraph, UnionFind, build_comm_graph,
                    build_topo_graph, crossing_exists, giant_component,
                    theta_estimate)
from .delay import (FloodResult, RateFit, RatioCurve, fit_scaling_rate, flood,
                    mmd_ratio_curve)

__all__ = [
    "BoxRegion", "SpatialIndex", "distance",
    "PrimarySlotRealization", "SecondaryNetwork", "SeededRng",
    "SimulationParams", "sample_poisson_points", "sample_primary_slot",
    "sample_secondary_network",
    "Estimate", "OpportunityContext", "estimate_p0",
    "has_bidirectional_opportunity", "has_opportunity",
    "CommGraph", "TopoGraph", "UnionFind", "build_comm_graph",
    "build_topo_graph", "crossing_exists", "giant_component", "theta_estimate",
    "FloodResult", "RateFit", "RatioCurve", "fit_scaling_rate", "flood",
    "mmd_ratio_curve",
]

__version__ = "0.1.0"
