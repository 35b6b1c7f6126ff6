"""Reference water properties for the test fixtures (IAPWS-IF97 via python `iapws`)."""
import os

import numpy as np
from iapws import IAPWS97

OUT = os.path.join(os.path.dirname(__file__), "..", "..", "crates", "core", "tests", "fixtures")

with open(os.path.join(OUT, "saturation_reference.csv"), "w") as f:
    f.write("pressure_pa,t_sat_c,h_f_j_per_kg,h_fg_j_per_kg\n")
    for p in np.linspace(0.43, 18.0, 36):
        sf, sg = IAPWS97(P=p, x=0.0), IAPWS97(P=p, x=1.0)
        f.write(f"{float(p * 1e6)!r},{float(sf.T - 273.15)!r},{float(sf.h * 1e3)!r},{float((sg.h - sf.h) * 1e3)!r}\n")

rng = np.random.default_rng(20251019)
with open(os.path.join(OUT, "liquid_reference.csv"), "w") as f:
    f.write("pressure_pa,temperature_c,h_j_per_kg\n")
    for p in np.linspace(0.43, 18.0, 40):
        tsat = IAPWS97(P=p, x=0.0).T - 273.15
        for t in (rng.uniform(10.0, tsat - 0.5), tsat - rng.uniform(0.05, 2.0)):
            f.write(f"{float(p * 1e6)!r},{float(t)!r},{float(IAPWS97(P=p, T=t + 273.15).h * 1e3)!r}\n")
