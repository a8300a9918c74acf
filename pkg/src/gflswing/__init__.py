"""Phasor-domain power-swing studies for grid-following converters.

The package couples a quasi-static network solution with SRF-PLL dynamics
and a dual-blinder power-swing-blocking / out-of-step-tripping detector, to
study when impedance-trajectory relaying misreads converter-driven swings.
"""

from .artifacts import RunArtifacts, write_artifacts
from .engine import (ApplyFault, ClearFault, Scenario, SetMode, SimResult,
                     SolverError, SweepEntry, TimelineEvent, apply_override,
                     resolve_algebraic_loop, run, sweep)
from .network import (FaultSpec, ImpedanceSample, NetworkParams,
                      NetworkSolution, Topology, apparent_impedance,
                      predict_locus_gfl, predict_locus_opc, sg_apparent_impedance,
                      solve_pcc)
from .phasor import PerUnitBase, Phasor, UnwrappedAngle, unwrap_degrees, wrap_degrees
from .relay import (BlinderSettings, EventKind, Region, RelayEvent, RelayState,
                    TimerSettings, Verdict, blinder_resistance,
                    blinders_from_angles, classify_run, los_oracle, relay_step,
                    timer_settings)
from .scenario import ScenarioError, load_scenario, loads_scenario, preset_names, load_preset, serialize_scenario
from .vsc import (ControlMode, CpfMode, CurrentCommand, DqVoltage, FrtParams,
                  OpcMode, PllParams, PllState, alpha0_of, current_refs_fault,
                  current_refs_normal, measure_dq, phi_of, pll_step)

__version__ = "0.1.0"
