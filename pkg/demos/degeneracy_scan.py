"""Sweep the triangle coefficient and watch the density collapse to a full graph.

Each grid point runs a long chain from the empty graph on 30 nodes. Around
theta2 = 0.4 the mean density jumps from sparse to nearly complete.

    python demos/degeneracy_scan.py
"""

import numpy as np

from ergmkit import McmcConfig, degeneracy_scan, triangle_template

grid = [[-2.0, t] for t in np.round(np.arange(0.0, 1.51, 0.1), 2)]
report = degeneracy_scan(triangle_template(), grid, n=30, cfg=McmcConfig(draws=2000, seed=10))

for point in report.points:
    bar = "#" * int(round(40 * point.mean_density))
    print(f"theta2={point.theta[1]:4.1f}  density={point.mean_density:6.3f}  {bar}")
print(f"largest jump between neighbouring grid points: {report.max_density_jump():.3f}")
