"""Synthetic 3x3x3 table fixture and axial-factor reference values.

The axial factor is integrated numerically with scipy.integrate.quad and
checked against the closed form for a two-step profile.
"""
import math
import os

from scipy.integrate import quad

OUT = os.path.join(os.path.dirname(__file__), "..", "..", "crates", "core", "tests", "fixtures")

pressure_mpa = [5.0, 10.0, 15.0]
mass_flux = [1000.0, 2000.0, 4000.0]
quality = [-0.2, 0.2, 0.6]
# deliberately non-affine so cell midpoints test the corner average
values = {}
for i, p in enumerate(pressure_mpa):
    for j, g in enumerate(mass_flux):
        for k, x in enumerate(quality):
            values[i, j, k] = 4000.0 - 120.0 * p + 0.4 * g - 2500.0 * x + 300.0 * i * j * k - 50.0 * (k * k)

with open(os.path.join(OUT, "lut_synthetic.txt"), "w") as f:
    f.write("# synthetic 3x3x3 table, CHF in kW/m2\n")
    f.write("axis pressure MPa " + " ".join(repr(v) for v in pressure_mpa) + "\n")
    f.write("axis mass_flux kg/m2s " + " ".join(repr(v) for v in mass_flux) + "\n")
    f.write("axis quality - " + " ".join(repr(v) for v in quality) + "\n")
    f.write("units chf kW/m2\n")
    for i, p in enumerate(pressure_mpa):
        for j, g in enumerate(mass_flux):
            row = " ".join(repr(values[i, j, k]) for k in range(3))
            f.write(f"{p!r} {g!r} {row}\n")

with open(os.path.join(OUT, "lut_synthetic_midpoints.csv"), "w") as f:
    f.write("pressure_pa,mass_flux,quality,chf_w_m2\n")
    for i in range(2):
        for j in range(2):
            for k in range(2):
                corners = [values[i + a, j + b, k + c] for a in (0, 1) for b in (0, 1) for c in (0, 1)]
                mid_p = 0.5 * (pressure_mpa[i] + pressure_mpa[i + 1]) * 1e6
                mid_g = 0.5 * (mass_flux[j] + mass_flux[j + 1])
                mid_x = 0.5 * (quality[k] + quality[k + 1])
                f.write(f"{mid_p!r},{mid_g!r},{mid_x!r},{sum(corners) / 8.0 * 1e3!r}\n")


def axial_factor(q, z, c, breaks=(1.0,)):
    edges = [0.0] + [b for b in breaks if 0.0 < b < z] + [z]
    num = sum(quad(lambda s: q(s) * math.exp(-c * (z - s)), a, b, epsabs=1e-14, epsrel=1e-13)[0] for a, b in zip(edges, edges[1:]))
    return c * num / (q(z) * (1.0 - math.exp(-c * z)))


# two-step profile, ratio 2:1, step at L/2 = 1 m, C = 1/m, evaluated at z = L = 2 m
step = lambda s: 2.0 if s < 1.0 else 1.0
numeric = axial_factor(step, 2.0, 1.0)
closed = (2.0 * (math.exp(-1.0) - math.exp(-2.0)) + (1.0 - math.exp(-1.0))) / (1.0 - math.exp(-2.0))
assert abs(numeric - closed) < 1e-12, (numeric, closed)
with open(os.path.join(OUT, "axial_two_step.csv"), "w") as f:
    f.write("length_m,step_m,upstream_q,downstream_q,c_per_m,z_m,factor\n")
    f.write(f"2.0,1.0,2.0,1.0,1.0,2.0,{closed!r}\n")
    # same profile at mid-downstream and upstream positions
    for z in (1.5, 0.5):
        f.write(f"2.0,1.0,2.0,1.0,1.0,{z!r},{axial_factor(step, z, 1.0)!r}\n")
