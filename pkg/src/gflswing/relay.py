"""Dual-blinder power-swing blocking / out-of-step tripping detector.

Three nested blinder pairs (outer, middle, inner) partition the R-X plane by
distance from the system-impedance axis.  The transit time between blinders
classifies the disturbance: a slow outer-to-middle transit is a power swing
(block), a fast one is a fault; a slow outer-to-inner transit is an unstable
swing (trip), a fast one a stable swing.  The detector is a pure state
machine over timestamped impedance samples, so replaying a recorded
trajectory reproduces the exact event sequence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from .network import ImpedanceSample

__all__ = [
    "BlinderSettings",
    "TimerSettings",
    "Region",
    "RelayPhase",
    "RelayState",
    "EventKind",
    "RelayEvent",
    "Verdict",
    "blinder_resistance",
    "blinders_from_angles",
    "timer_settings",
    "relay_step",
    "los_oracle",
    "classify_run",
]


def blinder_resistance(x_total: float, delta_deg: float) -> float:
    """Blinder resistance for a total reach ``x_total`` and swing angle.

    The blinder is placed where the two-source swing locus at angle delta
    meets the R axis of the relay: R = (x_total / 2) * cot(delta / 2).
    """
    if x_total <= 0.0:
        raise ValueError("x_total must be positive")
    if not 0.0 < delta_deg < 360.0:
        raise ValueError(f"delta must lie in (0, 360) degrees, got {delta_deg}")
    return (x_total / 2.0) / math.tan(math.radians(delta_deg) / 2.0)


@dataclass(frozen=True)
class BlinderSettings:
    """Outer/middle/inner blinder resistances (ohms) and their tilt.

    The blinders are line pairs parallel to the system-impedance axis,
    tilted ``tilt_deg`` from the R axis; 90 degrees (a pure-reactance grid)
    makes them vertical lines at Re(Z) = +-R.  The derivation angles are
    retained for reporting when the settings came from angles.
    """

    r_outer: float
    r_middle: float
    r_inner: float
    tilt_deg: float = 90.0
    delta_o: Optional[float] = None
    delta_m: Optional[float] = None
    delta_i: Optional[float] = None
    x_total_ohm: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.r_outer > self.r_middle > self.r_inner > 0.0):
            raise ValueError(
                "blinder resistances must satisfy r_outer > r_middle > r_inner > 0, "
                f"got {self.r_outer}, {self.r_middle}, {self.r_inner}"
            )
        angles = (self.delta_o, self.delta_m, self.delta_i)
        if any(a is not None for a in angles):
            if any(a is None for a in angles):
                raise ValueError("either all or none of the blinder angles must be set")
            if not (0.0 < self.delta_o < self.delta_m < self.delta_i < 180.0):
                raise ValueError(
                    "blinder angles must satisfy 0 < delta_o < delta_m < delta_i < 180"
                )


def blinders_from_angles(x_total: float, delta_o: float, delta_m: float,
                         delta_i: float, tilt_deg: float = 90.0) -> BlinderSettings:
    """Expand swing angles into blinder resistances for a given reach."""
    return BlinderSettings(
        r_outer=blinder_resistance(x_total, delta_o),
        r_middle=blinder_resistance(x_total, delta_m),
        r_inner=blinder_resistance(x_total, delta_i),
        tilt_deg=tilt_deg,
        delta_o=delta_o,
        delta_m=delta_m,
        delta_i=delta_i,
        x_total_ohm=x_total,
    )


@dataclass(frozen=True)
class TimerSettings:
    """Transit-time thresholds for swing blocking and out-of-step tripping."""

    dt_psb: float   # seconds
    dt_ost: float   # seconds
    f0: float = 50.0
    f_swing: Optional[float] = None  # slip frequency used in derivation, Hz

    def __post_init__(self) -> None:
        if self.dt_psb <= 0.0:
            raise ValueError("dt_psb must be positive")
        if self.dt_ost <= self.dt_psb:
            raise ValueError("dt_ost must exceed dt_psb")

    @classmethod
    def from_cycles(cls, psb_cycles: float, ost_cycles: float, f0: float) -> "TimerSettings":
        return cls(dt_psb=psb_cycles / f0, dt_ost=ost_cycles / f0, f0=f0)

    @property
    def psb_cycles(self) -> float:
        return self.dt_psb * self.f0

    @property
    def ost_cycles(self) -> float:
        return self.dt_ost * self.f0


def timer_settings(delta_o: float, delta_m: float, delta_i: float,
                   f0: float, f_swing: float) -> TimerSettings:
    """Transit thresholds from blinder angles and an assumed slip frequency.

    The impedance trajectory of a swing at slip ``f_swing`` sweeps
    (delta_m - delta_o) degrees in (delta_m - delta_o) / (360 * f_swing)
    seconds; expressed in cycles of ``f0`` that is the blocking threshold,
    and the outer-to-inner span gives the tripping threshold.
    """
    if f0 <= 0.0 or f_swing <= 0.0:
        raise ValueError("f0 and f_swing must be positive")
    if not (0.0 < delta_o < delta_m < delta_i < 180.0):
        raise ValueError("angles must satisfy 0 < delta_o < delta_m < delta_i < 180")
    psb_cycles = (delta_m - delta_o) * f0 / (360.0 * f_swing)
    ost_cycles = (delta_i - delta_o) * f0 / (360.0 * f_swing)
    return TimerSettings(dt_psb=psb_cycles / f0, dt_ost=ost_cycles / f0,
                         f0=f0, f_swing=f_swing)


class Region(enum.IntEnum):
    """Position of an impedance sample relative to the blinder pairs."""

    OUTSIDE = 0
    BETWEEN_O_M = 1
    BETWEEN_M_I = 2
    INSIDE_I = 3


_REGION_NAMES = {
    Region.OUTSIDE: "outside",
    Region.BETWEEN_O_M: "between_o_m",
    Region.BETWEEN_M_I: "between_m_i",
    Region.INSIDE_I: "inside_i",
}


def region_name(region: Region) -> str:
    return _REGION_NAMES[Region(region)]


def region_of(z: complex, blinders: BlinderSettings) -> Region:
    """Classify an impedance point by its distance from the blinder axis.

    Both left and right blinder pairs are active: the distance is the
    absolute perpendicular offset from the axis through the origin at the
    tilt angle, so swings approaching from either half-plane are treated
    alike.
    """
    # Rotate so the blinder axis is the imaginary axis; then the distance
    # is |Re|.  tilt 90 deg means no rotation at all.
    rot = math.radians(90.0 - blinders.tilt_deg)
    if rot != 0.0:
        z = z * complex(math.cos(rot), math.sin(rot))
    d = abs(z.real)
    if d >= blinders.r_outer:
        return Region.OUTSIDE
    if d >= blinders.r_middle:
        return Region.BETWEEN_O_M
    if d >= blinders.r_inner:
        return Region.BETWEEN_M_I
    return Region.INSIDE_I


class RelayPhase(enum.Enum):
    IDLE = "idle"
    OUTER_CROSSED = "outer_crossed"
    MIDDLE_CROSSED = "middle_crossed"
    LATCHED = "latched"


class EventKind(enum.Enum):
    PSB_BLOCK = "psb_block"
    FAULT_DECLARED = "fault_declared"
    OST_TRIP = "ost_trip"
    STABLE_SWING_DECLARED = "stable_swing_declared"
    RESET = "reset"


class RelayEvent(NamedTuple):
    t: float
    kind: EventKind


class RelayState(NamedTuple):
    """Detector state between samples; thread it through ``relay_step``."""

    phase: RelayPhase = RelayPhase.IDLE
    last_region: Region = Region.OUTSIDE
    last_t: float = -math.inf
    t_outer: Optional[float] = None
    t_middle: Optional[float] = None
    t_inner: Optional[float] = None


def relay_step(state: RelayState, sample: ImpedanceSample,
               blinders: BlinderSettings, timers: TimerSettings
               ) -> tuple[RelayState, list[RelayEvent]]:
    """Feed one impedance sample through the detector.

    Crossings are detected as region changes between consecutive samples
    and timestamped at the later sample.  A sample that jumps several
    boundaries at once (a close-in fault) records all crossing times at
    that sample, which classifies it as a fast transit.
    """
    t, z = sample.t, sample.z
    if t < state.last_t:
        raise ValueError(f"samples must be time-ordered: {t} after {state.last_t}")

    region = region_of(z, blinders)
    prev = state.last_region
    events: list[RelayEvent] = []

    phase = state.phase
    t_o, t_m, t_i = state.t_outer, state.t_middle, state.t_inner

    if region > prev:
        # Moving inward; walk every boundary crossed in this step.
        if prev == Region.OUTSIDE and region >= Region.BETWEEN_O_M and phase == RelayPhase.IDLE:
            t_o = t
            phase = RelayPhase.OUTER_CROSSED
        if prev <= Region.BETWEEN_O_M and region >= Region.BETWEEN_M_I \
                and phase == RelayPhase.OUTER_CROSSED:
            t_m = t
            dt1 = t_m - t_o
            events.append(RelayEvent(t, EventKind.PSB_BLOCK if dt1 > timers.dt_psb
                                     else EventKind.FAULT_DECLARED))
            phase = RelayPhase.MIDDLE_CROSSED
        if region == Region.INSIDE_I and phase == RelayPhase.MIDDLE_CROSSED:
            t_i = t
            dt2 = t_i - t_o
            events.append(RelayEvent(t, EventKind.OST_TRIP if dt2 > timers.dt_ost
                                     else EventKind.STABLE_SWING_DECLARED))
            phase = RelayPhase.LATCHED
    elif region == Region.OUTSIDE and prev > Region.OUTSIDE:
        # Left the outer region from inside; re-arm.
        if phase != RelayPhase.IDLE:
            events.append(RelayEvent(t, EventKind.RESET))
        phase = RelayPhase.IDLE
        t_o = t_m = t_i = None

    return (
        RelayState(phase=phase, last_region=region, last_t=t,
                   t_outer=t_o, t_middle=t_m, t_inner=t_i),
        events,
    )


def los_oracle(series: Iterable[tuple[float, float]],
               threshold_deg: float = 180.0,
               confirm_s: float = 0.1) -> Optional[float]:
    """Ground-truth loss-of-synchronism detector on the unwrapped PLL angle.

    Returns the earliest time at which |delta_pll| exceeds the threshold and
    stays beyond it for ``confirm_s`` (or through the end of the series).
    Returns None when the angle never confirms a pole slip.
    """
    pts = list(series)
    n = len(pts)
    i = 0
    while i < n:
        t_i, a_i = pts[i]
        if abs(a_i) > threshold_deg:
            j = i
            ok = True
            while j < n and pts[j][0] <= t_i + confirm_s:
                if abs(pts[j][1]) <= threshold_deg:
                    ok = False
                    break
                j += 1
            if ok:
                return t_i
            i = j + 1 if j > i else i + 1
        else:
            i += 1
    return None


class Verdict(enum.Enum):
    """Run-level classification of detector behaviour against ground truth."""

    CORRECT = "correct"
    PSB_MALOPERATION = "psb_maloperation"
    OST_MALOPERATION = "ost_maloperation"
    MISSED_UNSTABLE = "missed_unstable"
    MISSED_BLOCK = "missed_block"


def _in_windows(t: float, windows: Sequence[tuple[float, float]]) -> bool:
    return any(a <= t <= b for a, b in windows)


def classify_run(events: Sequence[RelayEvent], los_t: Optional[float],
                 fault_windows: Sequence[tuple[float, float]] = ()
                 ) -> Verdict:
    """Judge a completed run: detector events against the synchronism oracle.

    Events emitted while an actual fault was applied (inside a fault window)
    are correct fault detection and do not count against the detector,
    except a PSB_BLOCK there, which would block the protection of a genuine
    fault.  Outside the windows every event responds to a swing:

    * oracle fired: only an OST_TRIP is a correct outcome, anything else
      missed the unstable swing;
    * oracle silent: an OST_TRIP is a maloperation, a FAULT_DECLARED means
      the blocking function misread a swing as a fault (missed block), and
      a plain PSB_BLOCK (or nothing) is correct.
    """
    blocked_fault = any(e.kind == EventKind.PSB_BLOCK and _in_windows(e.t, fault_windows)
                        for e in events)
    swing_events = [e for e in events if not _in_windows(e.t, fault_windows)]
    ost = any(e.kind == EventKind.OST_TRIP for e in swing_events)
    fault_decl = any(e.kind == EventKind.FAULT_DECLARED for e in swing_events)

    if los_t is not None:
        return Verdict.CORRECT if ost else Verdict.MISSED_UNSTABLE
    if blocked_fault:
        return Verdict.PSB_MALOPERATION
    if ost:
        return Verdict.OST_MALOPERATION
    if fault_decl:
        return Verdict.MISSED_BLOCK
    return Verdict.CORRECT
