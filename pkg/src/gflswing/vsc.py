"""Grid-following converter control: SRF-PLL, dq measurement, current references.

The converter is modelled as a controlled current source behind its filter
(the inner current loop is taken as unity gain).  The injected phasor is
``i_mag`` at angle ``phi + delta_pll``: ``phi`` comes from the dq current
references, ``delta_pll`` from the PLL state.

Sign conventions (fixed throughout the package):

* ``vd = V*cos(delta_pcc - delta_pll)``, ``vq = V*sin(delta_pcc - delta_pll)``;
  the matching Park transform carries a negated sine row so that the abc
  synthesis -> Park path reproduces this closed form exactly.
* A current reference pair (id, iq) maps to the phasor ``(id + j*iq) *
  exp(j*delta_pll)``; reactive injection that raises the PCC voltage
  (capacitive support during undervoltage) has ``iq < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

__all__ = [
    "PllParams",
    "PllState",
    "CpfMode",
    "OpcMode",
    "ControlMode",
    "FrtParams",
    "DqVoltage",
    "CurrentCommand",
    "measure_dq",
    "abc_voltages",
    "park_dq",
    "pll_step",
    "initial_pll_state",
    "current_refs_normal",
    "current_refs_fault",
    "phi_of",
    "alpha0_of",
]

# How the PI gains map to an angular-frequency deviation in rad/s:
# scale pair (proportional, integral) applied as
#   d_omega = sp*kp*vq + si*ki*integral(vq dt).
# "per_unit" reads both gains as per-unit of omega0, "rad_per_s" as plain
# SI gains.  Neither reading gives the published converter swings any
# overshoot (one is overdamped by two orders of magnitude, the other is far
# too slow), so "hybrid" -- proportional gain in rad/s per p.u., integral
# gain per-unit -- is the default; it lands the documented swing peaks and
# blinder-crossing intervals.  All three remain selectable per scenario.
GAIN_BASES = ("per_unit", "rad_per_s", "hybrid")


@dataclass(frozen=True)
class PllParams:
    """SRF-PLL tuning: PI gains, nominal frequency, frequency limiter."""

    kp: float
    ki: float
    omega0: float           # nominal angular frequency, rad/s
    f_lim: float            # max frequency deviation from nominal, Hz
    gain_basis: str = "hybrid"

    def __post_init__(self) -> None:
        if self.kp < 0.0 or self.ki < 0.0:
            raise ValueError("PLL gains must be non-negative")
        if self.omega0 <= 0.0:
            raise ValueError("omega0 must be positive")
        if self.f_lim <= 0.0:
            raise ValueError("f_lim must be positive")
        if self.gain_basis not in GAIN_BASES:
            raise ValueError(
                f"unknown gain basis {self.gain_basis!r}; expected one of {GAIN_BASES}"
            )

    @property
    def kp_eff(self) -> float:
        """Proportional gain in rad/s per p.u. of q-axis voltage."""
        if self.gain_basis == "per_unit":
            return self.kp * self.omega0
        return self.kp

    @property
    def ki_eff(self) -> float:
        """Integral gain in rad/s per (p.u. * s)."""
        if self.gain_basis == "rad_per_s":
            return self.ki
        return self.ki * self.omega0

    @property
    def omega_dev_max(self) -> float:
        """Frequency-deviation clamp, rad/s."""
        return 2.0 * math.pi * self.f_lim


class PllState(NamedTuple):
    """PLL integration state.

    ``theta_deg`` is the full unwrapped output phase, ``delta_deg`` the
    unwrapped angle against the remote source (theta - omega0*t); both are
    advanced by the same integrator so the relation holds exactly.  ``xi``
    is the PI integrator accumulator (p.u.*s), ``omega`` the clamped output
    frequency in rad/s.
    """

    theta_deg: float
    xi: float
    omega: float
    delta_deg: float


def initial_pll_state(delta_deg: float, params: PllParams) -> PllState:
    """State locked at angle ``delta_deg`` with zero frequency deviation."""
    return PllState(theta_deg=delta_deg, xi=0.0, omega=params.omega0, delta_deg=delta_deg)


class DqVoltage(NamedTuple):
    """PCC voltage in the PLL (dq) frame, p.u."""

    vd: float
    vq: float

    @property
    def magnitude(self) -> float:
        return math.hypot(self.vd, self.vq)


def measure_dq(v_pcc_mag: float, delta_pcc_deg: float, delta_pll_deg: float) -> DqVoltage:
    """Project the PCC voltage phasor onto the PLL frame."""
    if v_pcc_mag < 0.0:
        raise ValueError("voltage magnitude must be >= 0")
    d = math.radians(delta_pcc_deg - delta_pll_deg)
    return DqVoltage(v_pcc_mag * math.cos(d), v_pcc_mag * math.sin(d))


def abc_voltages(v_mag: float, delta_pcc_deg: float, omega_t_deg: float) -> tuple[float, float, float]:
    """Instantaneous three-phase voltages of a balanced cosine set."""
    a = math.radians(omega_t_deg + delta_pcc_deg)
    third = 2.0 * math.pi / 3.0
    return (
        v_mag * math.cos(a),
        v_mag * math.cos(a - third),
        v_mag * math.cos(a + third),
    )


def park_dq(va: float, vb: float, vc: float, theta_deg: float) -> DqVoltage:
    """Amplitude-invariant Park transform at angle ``theta_deg``.

    The q row is the negated sine row; with it, a balanced cosine set at
    phase ``omega*t + delta`` lands on (V*cos(delta - delta_pll),
    V*sin(delta - delta_pll)) for theta = omega*t + delta_pll, matching
    :func:`measure_dq`.
    """
    th = math.radians(theta_deg)
    third = 2.0 * math.pi / 3.0
    vd = (2.0 / 3.0) * (
        va * math.cos(th) + vb * math.cos(th - third) + vc * math.cos(th + third)
    )
    vq = -(2.0 / 3.0) * (
        va * math.sin(th) + vb * math.sin(th - third) + vc * math.sin(th + third)
    )
    return DqVoltage(vd, vq)


def pll_step(state: PllState, vq: float, dt: float, params: PllParams) -> PllState:
    """Advance the PLL one step with the q-axis voltage held over the step.

    RK4 on the coupled (delta, xi) system; with vq held constant the xi
    update reduces to the exact accumulator xi += vq*dt.  The frequency
    deviation is clamped to +-2*pi*f_lim at every stage, so the output
    angle rate never exceeds the limiter.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    kp, ki = params.kp_eff, params.ki_eff
    wmax = params.omega_dev_max

    xi0 = state.xi
    a = kp * vq
    k1 = a + ki * xi0
    if k1 > wmax:
        k1 = wmax
    elif k1 < -wmax:
        k1 = -wmax
    k2 = a + ki * (xi0 + 0.5 * dt * vq)  # midpoint; dxi/dt == vq at all stages
    if k2 > wmax:
        k2 = wmax
    elif k2 < -wmax:
        k2 = -wmax
    xi_new = xi0 + vq * dt
    k4 = a + ki * xi_new
    if k4 > wmax:
        k4 = wmax
    elif k4 < -wmax:
        k4 = -wmax
    d_delta_deg = math.degrees((dt / 6.0) * (k1 + 4.0 * k2 + k4))

    omega_new = params.omega0 + k4
    return PllState(
        theta_deg=state.theta_deg + math.degrees(params.omega0 * dt) + d_delta_deg,
        xi=xi_new,
        omega=omega_new,
        delta_deg=state.delta_deg + d_delta_deg,
    )


@dataclass(frozen=True)
class CpfMode:
    """Constant-power-factor mode: fixed dq current references."""

    id_ref: float
    iq_ref: float


@dataclass(frozen=True)
class OpcMode:
    """Open-loop power control mode: references from P/Q setpoints."""

    p_ref: float
    q_ref: float

    def __post_init__(self) -> None:
        if self.p_ref <= 0.0:
            raise ValueError(f"p_ref must be positive, got {self.p_ref}")

    @property
    def k(self) -> float:
        return self.q_ref / self.p_ref

    @property
    def alpha0_deg(self) -> float:
        return alpha0_of(self.p_ref, self.q_ref)


ControlMode = Union[CpfMode, OpcMode]


@dataclass(frozen=True)
class FrtParams:
    """Fault-ride-through reactive-injection law and current ceiling."""

    k_factor: float = 2.0
    deadband: float = 0.1
    i_max: float = 1.0
    v_eps: float = 1e-4

    def __post_init__(self) -> None:
        if self.k_factor < 0.0:
            raise ValueError("k_factor must be >= 0")
        if not 0.0 <= self.deadband < 1.0:
            raise ValueError("deadband must lie in [0, 1)")
        if self.i_max <= 0.0:
            raise ValueError("i_max must be positive")
        if self.v_eps <= 0.0:
            raise ValueError("v_eps must be positive")


class CurrentCommand(NamedTuple):
    """Resolved dq current references with magnitude and control angle."""

    id_ref: float
    iq_ref: float
    i_mag: float
    phi_deg: float
    degenerate: bool = False


def _command(id_ref: float, iq_ref: float, i_max: float, degenerate: bool = False) -> CurrentCommand:
    mag = math.hypot(id_ref, iq_ref)
    if mag > i_max and mag > 0.0:
        scale = i_max / mag
        id_ref *= scale
        iq_ref *= scale
        mag = i_max
    phi = math.degrees(math.atan2(iq_ref, id_ref)) if mag > 0.0 else 0.0
    return CurrentCommand(id_ref, iq_ref, mag, phi, degenerate)


def current_refs_normal(mode: ControlMode, v: DqVoltage, frt: FrtParams) -> CurrentCommand:
    """Current references in normal operation (reference selection 1).

    CPF passes its fixed references through; OPC derives them from the
    measured dq voltage and the P/Q setpoints.  Either way the magnitude is
    capped at ``i_max`` preserving the angle -- the converter current limit
    applies regardless of where the references came from.
    """
    if isinstance(mode, CpfMode):
        return _command(mode.id_ref, mode.iq_ref, frt.i_max)
    if isinstance(mode, OpcMode):
        vmag = v.magnitude
        degenerate = vmag < frt.v_eps
        denom = max(vmag, frt.v_eps)
        k = mode.k
        id_ref = (v.vd - k * v.vq) / denom * mode.p_ref
        iq_ref = (v.vq + k * v.vd) / denom * mode.p_ref
        return _command(id_ref, iq_ref, frt.i_max, degenerate)
    raise TypeError(f"unsupported control mode {type(mode).__name__}")


def current_refs_fault(v_pcc_mag: float, frt: FrtParams) -> CurrentCommand:
    """Fault-ride-through references (reference selection 2).

    Reactive current grows with the voltage dip beyond the deadband at slope
    ``k_factor`` and saturates at ``i_max``; the active reference backfills
    the remaining headroom.  Injection is capacitive (iq < 0), which raises
    the PCC voltage across an inductive grid.
    """
    dv = 1.0 - v_pcc_mag
    iq_mag = min(frt.k_factor * max(dv - frt.deadband, 0.0), frt.i_max)
    iq_ref = -iq_mag
    id_ref = math.sqrt(max(frt.i_max ** 2 - iq_ref ** 2, 0.0))
    return CurrentCommand(id_ref, iq_ref, math.hypot(id_ref, iq_ref),
                          math.degrees(math.atan2(iq_ref, id_ref)))


def phi_of(cmd: CurrentCommand) -> float:
    """Control angle of a current command, degrees, four-quadrant."""
    if cmd.i_mag <= 0.0:
        raise ValueError("control angle undefined for zero current")
    return math.degrees(math.atan2(cmd.iq_ref, cmd.id_ref))


def alpha0_of(p_ref: float, q_ref: float) -> float:
    """Arctangent of the reactive-to-active setpoint ratio, degrees."""
    if p_ref <= 0.0:
        raise ValueError(f"p_ref must be positive, got {p_ref}")
    return math.degrees(math.atan(q_ref / p_ref))
