"""
Shortest lap versus freshest lap
================================

Three sensors and a server. The shortest closed tour is not the route with
the smallest maximum age of information, because the last leg home matters
twice: once in the lap and once more for the first node visited.
"""
import numpy as np

from aoi_patrol import enforced, ls_route, metrics
from aoi_patrol.exact import brute_force
from aoi_patrol.scenarios import counterexample_instance

inst = counterexample_instance(100.5)
print(np.asarray(inst.travel))

# a pure TSP improver finds the 202 s lap
short = ls_route(inst)
print("ls      ", short.order, metrics(inst, short).as_dict())

# the MAI-aware builder pays 0.5 s more per lap and wins ~100 s of freshness
fresh = enforced(inst)
print("enforced", fresh.order, metrics(inst, fresh).as_dict())

# check against every ordering
best = brute_force(inst)
print("optimum ", best.order, metrics(inst, best).mai)
