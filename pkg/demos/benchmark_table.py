"""
Mean normalized MAI per planner
===============================

Regenerates random scenarios (uniform grid, clustered, one outlier) and
divides every planner's MAI by the exact optimum. Takes a few minutes at
20 nodes because of the exact solver; pass a smaller count to go faster.

    python3 demos/benchmark_table.py 20
"""
import sys

import numpy as np

from aoi_patrol import dp_optimal, enforced, hybrid, ls_route, metrics, nearest_neighbor, srtt
from aoi_patrol.scenarios import gen_batch

count = int(sys.argv[1]) if len(sys.argv) > 1 else 100
planners = {"greedy": nearest_neighbor, "srtt": srtt, "enforced": enforced, "ls": ls_route, "hybrid": hybrid}

print(f"{'setup':<12}" + "".join(f"{k:>10}" for k in planners) + f"{'hybrid=opt':>12}")
for n in (8, 20):
    for dist in ("grid", "cluster", "outlier"):
        norm = {k: [] for k in planners}
        for sc in gen_batch(n, dist, count, 0):
            opt = metrics(sc.instance, dp_optimal(sc.instance)).mai
            for k, plan in planners.items():
                norm[k].append(metrics(sc.instance, plan(sc.instance)).mai / opt)
        wins = int(np.sum(np.array(norm["hybrid"]) <= 1 + 1e-9))
        print(f"{dist + '-' + str(n):<12}" + "".join(f"{np.mean(v):10.3f}" for v in norm.values()) + f"{wins:12d}")
