"""Depth rasters and the two interchange formats.

Everything the toolkit touches is a DepthRaster: a 2D grid of values plus a
validity mask.  Predictions travel as PFM (32-bit floats, so negative
affine-invariant codes survive), ground truth as 16-bit PNG with a 1/256 m
step and 0 as the "no lidar return" sentinel.
"""

import numpy as np

from depthbench import DepthRaster, read_depth_png16, read_pfm, write_depth_png16, write_pfm

rng = np.random.default_rng(0)

# A 4x6 depth map with a hole where the sensor returned nothing.
depth = rng.uniform(2.0, 30.0, (4, 6))
valid = np.ones((4, 6), dtype=bool)
valid[1, 2] = False
raster = DepthRaster(np.where(valid, depth, 0.0), valid)
print(raster)
print("values:\n", np.round(raster.values, 2))

# --- PFM: float-exact, used for predictions -------------------------------
blob = write_pfm(raster)
print(f"\nPFM payload: {len(blob)} bytes, header {blob[:14]!r}")
back = read_pfm(blob)
print("round-trip equal on valid pixels:",
      np.array_equal(back.values[back.valid], raster.values.astype(np.float32)[raster.valid]))
print("hole preserved:", bool(~back.valid[1, 2]))

# Writing a second time is bit-identical: the format is canonical.
print("bit-stable:", write_pfm(back) == blob)

# --- PNG16: quantized to 1/256 m, used for ground truth -------------------
png = write_depth_png16(raster)
gt = read_depth_png16(png)
step = np.abs(gt.values[gt.valid] - raster.values[raster.valid]).max()
print(f"\nPNG16 quantization error: {step:.6f} m (bounded by 1/512)")
print("sentinel keeps the hole invalid:", bool(~gt.valid[1, 2]))
