"""Simulation toolkit for Euler discretisation errors of Brownian barrier and extremum events."""
from .analysis import EmpiricalSummary, beta_constant, ks_two_sample, summarize
from .events import NO_HIT, ErrorTriplet, HitRecord, ZoomedProcess
from .paths import BarrierSpec, PathGrid
from .rng import InvalidParameter, Stream, create_stream

__all__ = [
    "BarrierSpec", "EmpiricalSummary", "ErrorTriplet", "HitRecord", "InvalidParameter",
    "NO_HIT", "PathGrid", "Stream", "ZoomedProcess", "beta_constant", "create_stream",
    "ks_two_sample", "summarize",
]
