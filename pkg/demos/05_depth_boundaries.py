"""Depth boundaries: extraction, distance transforms, and the edge metrics.

Boundaries are detected on log-depth, which makes the edge set invariant to
global rescaling.  Edge accuracy asks "how far is each predicted boundary
pixel from a real one", completion asks the reverse; both are truncated so a
stray pixel cannot dominate.
"""

import numpy as np

from depthbench import DepthRaster, EvalConfig, edge_accuracy_completion, edt, log_depth_edges

cfg = EvalConfig()

# Two half-planes: one meter on the left, ten on the right.
depth = np.full((24, 40), 1.0)
depth[:, 20:] = 10.0
edges = log_depth_edges(DepthRaster(depth), cfg)
cols = np.unique(np.nonzero(edges.edges)[1])
print(f"step scene: {edges.count()} edge pixels, all in column(s) {cols}")

# Rescaling the scene does not move a single edge pixel.
doubled = log_depth_edges(DepthRaster(depth * 2), cfg)
print("edges identical after doubling depth:", np.array_equal(doubled.edges, edges.edges))

# Exact Euclidean distance transform from the boundary.
field = edt(edges)
print(f"distance field: 0 on the line, up to {field.dist.max():.1f} px at the borders")

# A prediction whose boundary is off by three pixels.
shifted = np.zeros_like(edges.edges)
shifted[:, 23] = edges.edges[:, 20]
acc, comp = edge_accuracy_completion(shifted, edges, cfg.edge_trunc)
print(f"\nboundary displaced by 3 px -> accuracy {acc:.2f} px, completion {comp:.2f} px")

# A prediction with no boundary at all scores the truncation cap.
acc, comp = edge_accuracy_completion(np.zeros_like(edges.edges), edges, cfg.edge_trunc)
print(f"no predicted boundary       -> accuracy {acc:.2f} px, completion {comp:.2f} px")
