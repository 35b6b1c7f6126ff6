"""Generate the bundled water property tables from IAPWS-IF97 (python `iapws`).

Run once; the outputs are committed under crates/core/data/.

    python3 scripts/gen_steam_tables.py
"""
import os

import numpy as np
from iapws import IAPWS97
from iapws.iapws97 import _Region1, _Region3
from scipy.optimize import brentq

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "crates", "core", "data")


def saturation_rows():
    pressures = np.round(np.arange(0.10, 20.0 + 1e-9, 0.05), 2)
    for p in pressures:
        f = IAPWS97(P=float(p), x=0.0)
        g = IAPWS97(P=float(p), x=1.0)
        yield p, f.T - 273.15, f.h * 1e3, (g.h - f.h) * 1e3


def liquid_enthalpy(p_mpa, t_c):
    """Liquid-branch enthalpy [J/kg], continued smoothly past saturation."""
    t_k = t_c + 273.15
    if t_k <= 623.15:
        return _Region1(t_k, p_mpa)["h"] * 1e3
    tsat = IAPWS97(P=p_mpa, x=0.0).T
    if t_k < tsat:
        return IAPWS97(P=p_mpa, T=t_k).h * 1e3
    # metastable liquid above saturation: region 3 on the liquid density branch
    rho_f = 1.0 / IAPWS97(T=t_k, x=0.0).v
    fn = lambda rho: _Region3(rho, t_k)["P"] - p_mpa
    rho = brentq(fn, 0.75 * rho_f, rho_f)
    return _Region3(rho, t_k)["h"] * 1e3


def main():
    with open(os.path.join(DATA, "water_saturation.csv"), "w") as out:
        out.write("# water saturation table v1\n")
        out.write("# source: IAPWS-IF97 (python iapws), generated by scripts/gen_steam_tables.py\n")
        out.write("# columns: pressure [Pa], t_sat [degC], h_f [J/kg], h_fg [J/kg]\n")
        out.write("pressure_pa,t_sat_c,h_f_j_per_kg,h_fg_j_per_kg\n")
        for p, t, hf, hfg in saturation_rows():
            out.write(f"{p * 1e6:.1f},{t:.9g},{hf:.10g},{hfg:.10g}\n")

    pressures = [0.1] + [round(0.5 * k, 1) for k in range(1, 41)]
    temps = [5.0 * k for k in range(0, 75)]
    temps[0] = 0.01
    with open(os.path.join(DATA, "water_liquid_enthalpy.csv"), "w") as out:
        out.write("# compressed/subcooled liquid enthalpy table v1\n")
        out.write("# source: IAPWS-IF97 (python iapws), generated by scripts/gen_steam_tables.py\n")
        out.write("# rows: pressure [Pa]; columns: temperature [degC]; cells: h [J/kg]\n")
        out.write("# cells above saturation hold the metastable liquid continuation (interpolation support only)\n")
        out.write("# cells past the liquid spinodal are cubic continuations along the row\n")
        out.write("pressure_pa," + ",".join(f"{t:g}" for t in temps) + "\n")
        for p in pressures:
            vals = []
            for t in temps:
                try:
                    vals.append(liquid_enthalpy(p, t))
                except ValueError:
                    # past the liquid spinodal: cubic continuation along the row
                    vals.append(3.0 * vals[-1] - 3.0 * vals[-2] + vals[-3])
            row = [f"{v:.10g}" for v in vals]
            out.write(f"{p * 1e6:.1f}," + ",".join(row) + "\n")


if __name__ == "__main__":
    main()
