"""Uniform mixture weights do not give uniform points in a credal set.

Drawing weights from Dir(1, ..., 1) and mapping them into a hull with six
vertices (corners plus edge midpoints) piles points up near the centre.  The
sampling baseline inherits this bias.

Run with ``python3 demos/weight_sampling_bias.py``.
"""
from credal_cal.cli import concentration_ratio, demo_vertices
from credal_cal.simplex import RngStream

for m, preset in ((3, "corners"), (6, "corners-midpoints")):
    V = demo_vertices(m, preset, RngStream(0))
    res = concentration_ratio(V, 10_000, RngStream(1))
    print(f"M={m} ({preset}): {res['image_fraction']:.3f} of weighted points near the centre vs "
          f"{res['uniform_fraction']:.3f} for uniform points, ratio {res['ratio']:.2f}")
