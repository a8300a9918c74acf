#!/usr/bin/env python3
"""Run every bundled study case and tabulate what the relay made of it.

The stable cases never reach the blinders; the constant-power-factor cases
with a heavier line walk through them (one slowly enough to trip); the
open-loop power-control cases barely move the impedance at all because the
control angle cancels the PLL angle in the trajectory.
"""

import numpy as np

from gflswing import load_preset, preset_names, run

print(f"{'case':18s} {'verdict':18s} {'peak pll':>9s} {'peak sum':>9s} "
      f"{'los':>6s} {'blocks':>7s} {'trips':>6s}")
print("-" * 78)
for name in preset_names():
    res = run(load_preset(name))
    blocks = sum(e.kind.value == "psb_block" for e in res.relay_events)
    trips = sum(e.kind.value == "ost_trip" for e in res.relay_events)
    print(f"{name:18s} {res.verdict.value:18s} "
          f"{np.max(np.abs(res.delta_pll)):8.1f}d "
          f"{np.max(np.abs(res.angle_sum)):8.1f}d "
          f"{'yes' if res.los_t else 'no':>6s} {blocks:7d} {trips:6d}")

print()
print("reading the table:")
print("  * stable_*: the swing stays outside every blinder -- correct")
print("  * maloperation_cpf: a stable swing blocks AND trips -- maloperation")
print("  * unstable_*: within this quasi-static model the synchronization")
print("    loop re-locks after the fault, so the angle does not diverge;")
print("    the detector still sees either a fast fault-like transit or")
print("    nothing at all, which is the study's point: the impedance")
print("    trajectory does not carry the synchronization state")
