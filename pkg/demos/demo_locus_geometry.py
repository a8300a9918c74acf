#!/usr/bin/env python3
"""Closed-form impedance-locus geometry, no simulation involved.

Three famous shapes in the R-X plane:

1. a classical two-source swing with equal EMFs draws a straight line
   through the midpoint of the transfer impedance;
2. a current-source converter draws a circle of radius E/I centred on the
   grid impedance, parameterised by the current angle;
3. under open-loop power control the same circle is parameterised by the
   bus angle plus the setpoint angle -- the synchronization angle cancels.
"""

import csv
from pathlib import Path

import numpy as np

from gflswing import predict_locus_gfl, predict_locus_opc, sg_apparent_impedance

Z_T = 0.9j          # total transfer impedance, p.u.
Z_G = 0.7j          # grid impedance seen by the converter relay, p.u.

print("classical two-source locus (equal EMFs):")
for delta in (30.0, 90.0, 150.0):
    z = sg_apparent_impedance(1.0, delta, 0j, Z_T)
    print(f"  delta={delta:5.1f}  Z = {z.real:+.4f} {z.imag:+.4f}j  "
          f"(Im stays at {abs(Z_T) / 2:.3f} -> straight line)")

print()
print("converter locus (constant current):")
for angle in (0.0, 60.0, 120.0, 180.0):
    z = predict_locus_gfl(1.0, 1.0, Z_G, angle)
    print(f"  angle={angle:5.1f}  Z = {z.real:+.4f} {z.imag:+.4f}j  "
          f"|Z - z_g| = {abs(z - Z_G):.4f}")

print()
print("power-control locus: same circle, swapped parameter")
z1 = predict_locus_opc(1.0, 1.0, Z_G, delta_pcc_deg=20.0, alpha0_deg=-11.31)
z2 = predict_locus_gfl(1.0, 1.0, Z_G, 20.0 - 11.31)
print(f"  opc(20, -11.31) = {z1:.6f}")
print(f"  gfl(8.69)       = {z2:.6f}")

# Dump a sampled circle for external plotting.
Path("runs").mkdir(exist_ok=True)
with open("runs/locus_circle.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["angle_deg", "z_re_pu", "z_im_pu"])
    for a in np.arange(0.0, 360.0, 2.0):
        z = predict_locus_gfl(1.0, 1.0, Z_G, float(a))
        w.writerow([f"{a:.1f}", f"{z.real:.6f}", f"{z.imag:.6f}"])
print()
print("sampled circle written to runs/locus_circle.csv")
