"""Verification probes for the metric and for the leaf topology."""
from .accessibility import (AccessChain, DegreeEstimate, ReachabilityGrid, accessibility,
                            degree_of_inaccessibility, reachable_sets, whisker_lower_bound)
from .completeness import DivergenceReport, completeness_probe, frame_completeness_probe
from .hyperbolicity import HyperbolicityReport, hyperbolicity_probe
from .topology import (FLOWS, ProlongationalSet, ReebGraph, UnknownFlowError, derive_reeb_graph,
                       encoded_graph, get_flow, prolongational_limit, quasi_parallel_obstruction)

__all__ = [
    "AccessChain", "DegreeEstimate", "ReachabilityGrid", "accessibility", "degree_of_inaccessibility",
    "reachable_sets", "whisker_lower_bound", "DivergenceReport", "completeness_probe",
    "frame_completeness_probe", "HyperbolicityReport", "hyperbolicity_probe", "FLOWS",
    "ProlongationalSet", "ReebGraph", "UnknownFlowError", "derive_reeb_graph", "encoded_graph",
    "get_flow", "prolongational_limit", "quasi_parallel_obstruction",
]
