"""Single-diode model basics.

Walk through the equivalent circuit of one crystalline-silicon module:
translate reference parameters to operating conditions, solve points on the
I-V curve, locate the maximum power point, and scale module values to a
small array.  Writes an I-V/P-V chart to demos/output/.
"""

import os

import numpy as np

from pvprof import (ArrayTopology, OperatingConditions, SdmParamsRef,
                    find_mpp, open_circuit_voltage, short_circuit_current,
                    simulate_array_mpp, solve_current, translate_to_operating)
from pvprof import charts

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

params = SdmParamsRef(i_ph_ref=9.5, i_0_ref=3e-10, r_s=0.35,
                      r_sh_ref=400.0, n_diode=1.1)
cells = 72
print("Reference parameters (1000 W/m2, 25 C):", params)

for g, t in ((1000.0, 25.0), (500.0, 25.0), (1000.0, 50.0), (200.0, 10.0)):
    op = translate_to_operating(params, OperatingConditions(g, t), cells)
    mpp = find_mpp(op)
    print(f"  {g:6.0f} W/m2 {t:5.1f} C -> "
          f"Isc {short_circuit_current(op):6.3f} A, "
          f"Voc {open_circuit_voltage(op):6.2f} V, "
          f"MPP {mpp.p:7.2f} W at {mpp.v:5.2f} V")

# full I-V and P-V curves at standard test conditions
op = translate_to_operating(params, OperatingConditions(1000.0, 25.0), cells)
voc = open_circuit_voltage(op)
v = np.linspace(0.0, voc, 120)
i = np.array([solve_current(vk, op) for vk in v])
svg = charts.line_chart({"current (A)": i, "power (x0.1 W)": v * i / 10.0},
                        "Module I-V and P-V at STC", "current / scaled power",
                        x_values=v)
path = os.path.join(OUT, "iv_curve.svg")
with open(path, "w") as fh:
    fh.write(svg)
print("wrote", path)

topo = ArrayTopology(cells_in_series=cells, modules_per_string=12,
                     strings_in_parallel=8)
v_dc, i_dc = simulate_array_mpp(params, topo, OperatingConditions(1000.0, 25.0))
print(f"array of {topo.modules_per_string}x{topo.strings_in_parallel} "
      f"modules at STC: {v_dc:.1f} V, {i_dc:.1f} A, {v_dc * i_dc / 1e3:.1f} kW")
