"""Phasor solution of the two-line test network and impedance-locus predictors.

Layout: converter current source -> filter -> PCC; from the PCC two parallel
lines run to a remote bus that connects through a source impedance to the
remote voltage ``e_r`` (angle reference 0).  Faults are bolted three-phase
shorts at a fractional position along line 2, measured from the PCC end.
All quantities per-unit; angles in degrees.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

__all__ = [
    "NetworkParams",
    "FaultSpec",
    "Topology",
    "NetworkSolution",
    "ImpedanceSample",
    "solve_pcc",
    "apparent_impedance",
    "predict_locus_gfl",
    "predict_locus_opc",
    "sg_apparent_impedance",
]


@dataclass(frozen=True)
class NetworkParams:
    """Source magnitude and branch impedances, per-unit."""

    e_r: float
    z_f: complex       # converter filter
    z_l1: complex      # line 1 (carries the monitored relay)
    z_l2: complex      # line 2 (faulted / switched line)
    z_r: complex = 0j  # remote source impedance

    def __post_init__(self) -> None:
        if self.e_r <= 0.0:
            raise ValueError("remote source magnitude must be positive")
        for name in ("z_f", "z_l1", "z_l2"):
            if abs(getattr(self, name)) <= 0.0:
                raise ValueError(f"{name} must have non-zero magnitude")

    def grid_impedance(self, line2_in: bool) -> complex:
        """PCC-to-source impedance for the healthy topologies."""
        if line2_in:
            zpar = self.z_l1 * self.z_l2 / (self.z_l1 + self.z_l2)
            return zpar + self.z_r
        return self.z_l1 + self.z_r


@dataclass(frozen=True)
class FaultSpec:
    """Bolted three-phase fault on line 2 at fraction ``position`` from the PCC."""

    position: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 <= self.position <= 1.0:
            raise ValueError(f"fault position must lie in [0, 1], got {self.position}")


@dataclass(frozen=True)
class Topology:
    line2_in: bool = True
    fault: Optional[FaultSpec] = None

    def __post_init__(self) -> None:
        if self.fault is not None and not self.line2_in:
            raise ValueError("a fault on line 2 requires line 2 in service")


class NetworkSolution(NamedTuple):
    """Voltages and currents of one algebraic network solve."""

    v_pcc: complex
    delta_pcc_deg: float
    i_line1: complex
    e_s: complex
    delta_s_deg: float
    degenerate: bool
    kirchhoff_residual: float


def _arg(z: complex) -> float:
    if z == 0:
        return 0.0
    return math.degrees(cmath.phase(z))


def solve_pcc(i_inj: complex, params: NetworkParams, topo: Topology) -> NetworkSolution:
    """Solve the PCC node for an injected current phasor.

    Healthy topologies reduce to ``v_pcc = e_r + i*z_grid``.  With a bolted
    fault at p*z_l2 the grounded fault node splits line 2 and the remaining
    unknowns are solved nodally; at p = 0 the PCC itself is shorted and the
    zero-voltage solution is returned flagged degenerate.
    """
    e_r = complex(params.e_r, 0.0)

    if topo.fault is None:
        z_g = params.grid_impedance(topo.line2_in)
        v_pcc = e_r + i_inj * z_g
        v_rbus = e_r + i_inj * params.z_r
        i_line1 = (v_pcc - v_rbus) / params.z_l1
        residual = _pcc_residual_healthy(i_inj, v_pcc, v_rbus, params, topo.line2_in)
        return _finish(v_pcc, i_line1, i_inj, params, False, residual)

    p = topo.fault.position
    if p == 0.0:
        # Fault directly at the PCC: node voltage collapses to zero.
        v_pcc = 0j
        v_rbus = _solve_rbus_with_pcc_zero(params)
        i_line1 = (v_pcc - v_rbus) / params.z_l1
        return _finish(v_pcc, i_line1, i_inj, params, True, 0.0)

    z_a = p * params.z_l2           # PCC -> fault node
    z_b = (1.0 - p) * params.z_l2   # fault node -> remote bus

    if params.z_r == 0:
        # Remote bus pinned at e_r; single unknown V_PCC.
        y = 1.0 / params.z_l1 + 1.0 / z_a
        v_pcc = (i_inj + e_r / params.z_l1) / y
        v_rbus = e_r
    else:
        # Unknowns (V_PCC, V_Rbus); fault node held at zero.
        y11 = 1.0 / params.z_l1 + 1.0 / z_a
        y12 = -1.0 / params.z_l1
        y21 = -1.0 / params.z_l1
        y22 = 1.0 / params.z_l1 + 1.0 / params.z_r + (0 if p == 1.0 else 1.0 / z_b)
        rhs1 = i_inj
        rhs2 = complex(params.e_r, 0.0) / params.z_r
        det = y11 * y22 - y12 * y21
        v_pcc = (rhs1 * y22 - y12 * rhs2) / det
        v_rbus = (y11 * rhs2 - y21 * rhs1) / det

    i_line1 = (v_pcc - v_rbus) / params.z_l1
    residual = abs(i_inj - i_line1 - v_pcc / z_a)
    return _finish(v_pcc, i_line1, i_inj, params, False, residual)


def _solve_rbus_with_pcc_zero(params: NetworkParams) -> complex:
    """Remote-bus voltage when the PCC node is bolted to ground."""
    if params.z_r == 0:
        return complex(params.e_r, 0.0)
    # Divider between z_r and the parallel paths to the grounded PCC.
    z_paths = params.z_l1 * params.z_l2 / (params.z_l1 + params.z_l2)
    return complex(params.e_r, 0.0) * z_paths / (z_paths + params.z_r)


def _pcc_residual_healthy(i_inj, v_pcc, v_rbus, params, line2_in) -> float:
    i1 = (v_pcc - v_rbus) / params.z_l1
    i2 = (v_pcc - v_rbus) / params.z_l2 if line2_in else 0j
    return abs(i_inj - i1 - i2)


def _finish(v_pcc, i_line1, i_inj, params, degenerate, residual) -> NetworkSolution:
    e_s = v_pcc + i_inj * params.z_f
    return NetworkSolution(
        v_pcc=v_pcc,
        delta_pcc_deg=_arg(v_pcc),
        i_line1=i_line1,
        e_s=e_s,
        delta_s_deg=_arg(e_s),
        degenerate=degenerate,
        kirchhoff_residual=residual,
    )


def apparent_impedance(v: complex, i: complex) -> complex:
    """Impedance seen by a relay measuring voltage ``v`` and current ``i``."""
    if i == 0:
        raise ZeroDivisionError("relay current is zero; no impedance sample")
    return v / i


def predict_locus_gfl(e_r: float, i_g: float, z_g: complex, angle_sum_deg: float) -> complex:
    """Closed-form impedance locus of a constant-current converter.

    For constant source magnitude, current magnitude and grid impedance, the
    apparent impedance is a circle of radius ``e_r / i_g`` centred on
    ``z_g``, parameterised by the current angle ``phi + delta_pll``.
    """
    if i_g <= 0.0:
        raise ValueError("current magnitude must be positive")
    return cmath.rect(e_r / i_g, -math.radians(angle_sum_deg)) + z_g


def predict_locus_opc(e_r: float, i_g: float, z_g: complex,
                      delta_pcc_deg: float, alpha0_deg: float) -> complex:
    """Impedance locus under open-loop power control.

    The control angle cancels the PLL angle, leaving the locus parameterised
    by ``delta_pcc + alpha0`` alone.
    """
    return predict_locus_gfl(e_r, i_g, z_g, delta_pcc_deg + alpha0_deg)


def sg_apparent_impedance(n: float, delta_deg: float, z_s: complex, z_t: complex) -> complex:
    """Classical two-source swing impedance at the sending-end relay.

    With sending and receiving EMFs ``n*e`` at angle delta and ``e`` at zero
    across total impedance ``z_t``, the relay at the sending machine (behind
    ``z_s``) sees ``Z = (n<delta * z_t) / (n<delta - 1) - z_s``.  For n = 1
    the locus is the perpendicular of ``z_t`` through its midpoint.
    """
    if n <= 0.0:
        raise ValueError("source ratio n must be positive")
    a = cmath.rect(n, math.radians(delta_deg))
    if a == 1.0:
        raise ZeroDivisionError("coincident sources drive no current (n=1, delta=0)")
    return a * z_t / (a - 1.0) - z_s


class ImpedanceSample(NamedTuple):
    """A timestamped apparent-impedance measurement.

    ``unit`` records whether ``z`` is in ohms or per-unit so downstream
    consumers never have to guess.
    """

    t: float
    z: complex
    unit: str = "ohm"
