"""
Watching packets age
====================

Replays a planned lap and follows individual packets. With worst-case
timing (a packet appears right as the drone leaves its node) the observed
peak matches the analytic MAI; random Poisson traffic stays below it.
"""
import numpy as np

from aoi_patrol import enforced, metrics
from aoi_patrol.scenarios import ScenarioConfig, gen_scenario
from aoi_patrol.simulate import GenerationProcess, run, summarize

inst = gen_scenario(ScenarioConfig(8, "cluster", seed=4)).instance
route = enforced(inst)
m = metrics(inst, route)
print("route", route.order, f"lap {m.round_trip:.1f} s, MAI {m.mai:.1f} s")

worst = summarize(run(inst, route, GenerationProcess.worst_case(0.0), cycles=5))
print(f"worst case peak {worst.route_max:.1f} s")

trace = run(inst, route, GenerationProcess.poisson(rate=0.05, seed=1), cycles=200)
s = summarize(trace)
print(f"poisson: {s.steady_packets} steady packets, peak {s.route_max:.1f} s, "
      f"mean {np.mean(trace.aoi[trace.steady]):.1f} s")
for node, stats in sorted(s.per_node.items()):
    print(f"  node {node}: max {stats['max']:.1f} s  mean {stats['mean']:.1f} s")
