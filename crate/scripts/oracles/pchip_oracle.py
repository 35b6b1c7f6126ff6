"""PCHIP reference values from scipy.interpolate.PchipInterpolator."""
import os

import numpy as np
from scipy.interpolate import PchipInterpolator

OUT = os.path.join(os.path.dirname(__file__), "..", "..", "crates", "core", "tests", "fixtures")

# golden single-query fixture
squares = PchipInterpolator([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 4.0, 9.0])
with open(os.path.join(OUT, "pchip_golden.csv"), "w") as f:
    f.write("query,value\n")
    for q in (0.25, 0.5, 1.5, 2.2, 2.75):
        f.write(f"{float(q)!r},{float(squares(q))!r}\n")

# noisy spike-shaped digitized curve on a 2 m tube; resampled to 40 nodes,
# renormalized to unit trapezoid mean
length = 2.0
rng = np.random.default_rng(3)
z = np.sort(np.concatenate([[0.0, length], rng.uniform(0.0, length, 28)]))
shape = 0.6 + 1.8 * np.exp(-(((z - 0.6) / 0.18) ** 2))
q = shape * (1.0 + rng.normal(0.0, 0.01, z.size))
with open(os.path.join(OUT, "spike_curve.csv"), "w") as f:
    f.write("z_m,q_norm\n")
    for a, b in zip(z, q):
        f.write(f"{float(a)!r},{float(b)!r}\n")
nodes = np.linspace(0.0, length, 40)
vals = PchipInterpolator(z, q)(nodes)
mean = np.trapezoid(vals, nodes) / length
vals = vals / mean
with open(os.path.join(OUT, "spike_resampled.csv"), "w") as f:
    f.write("z_m,wall_power\n")
    for a, b in zip(nodes, vals):
        f.write(f"{float(a)!r},{float(b)!r}\n")
