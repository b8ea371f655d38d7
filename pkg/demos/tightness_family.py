"""
How far can the tree-based builder drift from optimal?
======================================================

On a ladder-shaped family of graphs the MST plus matching closes into one
big cycle that ends far from the server. The ratio to the optimum creeps
toward 1.5 as the ladder grows.
"""
from aoi_patrol import dp_optimal, enforced, metrics, srtt
from aoi_patrol.scenarios import tightness_instance

eps = 1e-6
print(" N    srtt      enforced  optimal   srtt/opt")
for n in (5, 7, 9, 11, 13, 15):
    inst = tightness_instance(n, eps)
    s = metrics(inst, srtt(inst)).mai
    e = metrics(inst, enforced(inst)).mai
    d = metrics(inst, dp_optimal(inst)).mai
    print(f"{n:2d}  {s:8.4f}  {e:8.4f}  {d:8.4f}  {s / d:.4f}")
