"""Patrol-route planning for a data-collection drone, minimising the maximum
age of information (MAI) of packets delivered to a server."""
from .construction import enforced, hybrid, nearest_neighbor, srtt
from .exact import brute_force, dp_optimal, held_karp
from .local_search import ImproverConfig, improve, ls_route
from .model import (
    Instance,
    Route,
    RouteMetrics,
    aoi,
    matrix_from_coords,
    metrics,
    round_trip,
    segment_time,
    validate,
)
from .scenarios import ScenarioConfig, gen_scenario

__version__ = "0.1.0"
