#!/usr/bin/env python3
"""How the blinder resistances and transit thresholds are derived.

The blinders sit where a two-source swing locus at a chosen angle crosses
the resistance axis: R = (X/2) * cot(delta/2) for total reach X.  The
transit thresholds come from how long a swing at an assumed slip frequency
needs to sweep between those angles.
"""

from gflswing import PerUnitBase, blinder_resistance, timer_settings

base = PerUnitBase(v_base=220e3, s_base=3025e6, f0=50.0)

print("reach = filter + line reactance at 50 Hz")
for l_line_mh in (35.5, 35.0, 28.0, 15.0):
    x_total = base.reactance_of_mh(10.0) + base.reactance_of_mh(l_line_mh)
    r = [blinder_resistance(x_total, d) for d in (90.0, 100.0, 120.0)]
    print(f"  line {l_line_mh:5.1f} mH -> reach {x_total:6.2f} ohm -> "
          f"blinders {r[0]:5.2f} / {r[1]:5.2f} / {r[2]:5.2f} ohm "
          f"({r[0] / base.z_base:.2f} / {r[1] / base.z_base:.2f} / "
          f"{r[2] / base.z_base:.2f} pu)")

print()
print("transit thresholds for a 1 Hz slip:")
t = timer_settings(90.0, 100.0, 120.0, f0=50.0, f_swing=1.0)
print(f"  blocking  : {t.psb_cycles:.3f} cycles = {t.dt_psb * 1e3:.1f} ms")
print(f"  tripping  : {t.ost_cycles:.3f} cycles = {t.dt_ost * 1e3:.1f} ms")
print()
print("the bundled cases run with 1.5 / 2.5 cycles (30 / 50 ms), the")
print("conventional field settings for these angles")
