"""Scenario files: a strict TOML grammar, bundled presets, serialization.

A scenario file mirrors :class:`gflswing.engine.Scenario` section by
section.  Inductances may be given in millihenry (converted to reactance at
the base frequency on load) or directly as per-unit reactances; blinders may
be given as explicit resistances or as swing angles plus a total reach.
Unknown keys are rejected so typos fail loudly.

Grammar (keys marked * are required)::

    name = "optional run label"

    [base]      v_base_kv*, s_base_mva*, f0_hz*
    [network]   e_r_pu (1.0);
                l_filter_mh | x_filter_pu*;   r_filter_pu (0)
                l_line1_mh  | x_line1_pu*;    r_line1_pu (0)
                l_line2_mh  | x_line2_pu*;    r_line2_pu (0)
                l_source_mh | x_source_pu (0); r_source_pu (0)
    [control]   mode* = "cpf" (id_ref_pu*, iq_ref_pu*)
                      | "opc" (p_ref_pu*, q_ref_pu*)
    [pll]       kp*, ki*, f_lim_hz*, gain_basis ("hybrid")
    [frt]       k_factor (2.0), deadband_pu (0.1), i_max_pu (1.0), v_eps_pu (1e-4)
    [relay]     tilt_deg (90);
                r_outer_ohm*, r_middle_ohm*, r_inner_ohm*
                | angles_deg* = [o, m, i], x_total_ohm*
    [timers]    psb_cycles*, ost_cycles* | psb_s*, ost_s* | f_swing_hz*
                (the f_swing form needs the relay angle form)
    [[events]]  t_s*, kind* = "apply_fault" (position (0.05))
                            | "clear_fault"
                            | "set_mode" (mode fields as in [control])
    [sim]       t_end_s*, dt_s (1e-4), fp_tol (1e-10), fp_max_iter (50),
                frt_v_threshold (0.9), los_confirm_s (0.1)
"""

from __future__ import annotations

import io
from importlib import resources
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .engine import ApplyFault, ClearFault, Scenario, SetMode, TimelineEvent
from .network import NetworkParams
from .phasor import PerUnitBase
from .relay import BlinderSettings, TimerSettings, blinders_from_angles, timer_settings
from .vsc import ControlMode, CpfMode, FrtParams, OpcMode, PllParams

__all__ = [
    "ScenarioError",
    "load_scenario",
    "loads_scenario",
    "serialize_scenario",
    "preset_names",
    "load_preset",
    "preset_path",
]


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate."""


_REQUIRED = object()


class _Section:
    """A TOML table with strict key accounting."""

    def __init__(self, name: str, data: dict):
        self.name = name
        self.data = dict(data)
        self.seen: set[str] = set()

    def take(self, key: str, default=_REQUIRED):
        self.seen.add(key)
        if key in self.data:
            return self.data[key]
        if default is _REQUIRED:
            raise ScenarioError(f"[{self.name}] missing required key {key!r}")
        return default

    def has(self, key: str) -> bool:
        return key in self.data

    def number(self, key: str, default=_REQUIRED) -> float:
        val = self.take(key, default)
        if val is None:
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ScenarioError(f"[{self.name}] key {key!r} must be a number")
        return float(val)

    def integer(self, key: str, default=_REQUIRED) -> int:
        val = self.take(key, default)
        if not isinstance(val, int) or isinstance(val, bool):
            raise ScenarioError(f"[{self.name}] key {key!r} must be an integer")
        return val

    def string(self, key: str, default=_REQUIRED) -> str:
        val = self.take(key, default)
        if not isinstance(val, str):
            raise ScenarioError(f"[{self.name}] key {key!r} must be a string")
        return val

    def finish(self) -> None:
        unknown = set(self.data) - self.seen
        if unknown:
            raise ScenarioError(
                f"[{self.name}] unknown key(s): {', '.join(sorted(unknown))}")


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {p}: {exc}") from exc
    try:
        return loads_scenario(text)
    except ScenarioError as exc:
        raise ScenarioError(f"{p}: {exc}") from None


def loads_scenario(text: str) -> Scenario:
    """Parse and validate scenario TOML text."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"TOML parse error: {exc}") from None

    known_top = {"name", "base", "network", "control", "pll", "frt",
                 "relay", "timers", "events", "sim"}
    unknown = set(doc) - known_top
    if unknown:
        raise ScenarioError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")

    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ScenarioError("'name' must be a string")

    def section(key: str, required: bool = True) -> Optional[_Section]:
        if key not in doc:
            if required:
                raise ScenarioError(f"missing required section [{key}]")
            return None
        if not isinstance(doc[key], dict):
            raise ScenarioError(f"[{key}] must be a table")
        return _Section(key, doc[key])

    base = _parse_base(section("base"))
    network = _parse_network(section("network"), base)
    mode = _parse_mode(section("control"))
    pll = _parse_pll(section("pll"), base)
    frt = _parse_frt(section("frt", required=False))
    relay_sec = section("relay")
    blinders, relay_angles = _parse_relay(relay_sec)
    timers = _parse_timers(section("timers"), base, relay_angles)
    events = _parse_events(doc.get("events", []))
    sim = section("sim")

    try:
        sc = Scenario(
            base=base, network=network, mode=mode, pll=pll, frt=frt,
            blinders=blinders, timers=timers, events=events,
            dt=sim.number("dt_s", 1e-4),
            t_end=sim.number("t_end_s"),
            fp_tol=sim.number("fp_tol", 1e-10),
            fp_max_iter=sim.integer("fp_max_iter", 50),
            frt_v_threshold=sim.number("frt_v_threshold", 0.9),
            los_confirm_s=sim.number("los_confirm_s", 0.1),
            name=name,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    sim.finish()
    return sc


def _parse_base(sec: _Section) -> PerUnitBase:
    base = PerUnitBase(
        v_base=sec.number("v_base_kv") * 1e3,
        s_base=sec.number("s_base_mva") * 1e6,
        f0=sec.number("f0_hz"),
    )
    sec.finish()
    return base


def _branch_pu(sec: _Section, stem: str, base: PerUnitBase,
               required: bool) -> complex:
    """Read one branch as (l_<stem>_mh | x_<stem>_pu) + r_<stem>_pu."""
    l_key, x_key, r_key = f"l_{stem}_mh", f"x_{stem}_pu", f"r_{stem}_pu"
    has_l, has_x = sec.has(l_key), sec.has(x_key)
    if has_l and has_x:
        raise ScenarioError(
            f"[network] give exactly one of {l_key!r} or {x_key!r}")
    if has_l:
        x = base.reactance_of_mh(sec.number(l_key)) / base.z_base
    elif has_x:
        x = sec.number(x_key)
    elif required:
        raise ScenarioError(f"[network] missing {l_key!r} or {x_key!r}")
    else:
        sec.seen.update((l_key, x_key))
        x = 0.0
    sec.seen.update((l_key, x_key))
    r = sec.number(r_key, 0.0)
    return complex(r, x)


def _parse_network(sec: _Section, base: PerUnitBase) -> NetworkParams:
    try:
        net = NetworkParams(
            e_r=sec.number("e_r_pu", 1.0),
            z_f=_branch_pu(sec, "filter", base, required=True),
            z_l1=_branch_pu(sec, "line1", base, required=True),
            z_l2=_branch_pu(sec, "line2", base, required=True),
            z_r=_branch_pu(sec, "source", base, required=False),
        )
    except ValueError as exc:
        raise ScenarioError(f"[network] {exc}") from None
    sec.finish()
    return net


def _parse_mode_fields(sec: _Section) -> ControlMode:
    kind = sec.string("mode")
    if kind == "cpf":
        mode = CpfMode(id_ref=sec.number("id_ref_pu"), iq_ref=sec.number("iq_ref_pu"))
    elif kind == "opc":
        try:
            mode = OpcMode(p_ref=sec.number("p_ref_pu"), q_ref=sec.number("q_ref_pu"))
        except ValueError as exc:
            raise ScenarioError(f"[{sec.name}] {exc}") from None
    else:
        raise ScenarioError(
            f"[{sec.name}] mode must be 'cpf' or 'opc', got {kind!r}")
    return mode


def _parse_mode(sec: _Section) -> ControlMode:
    mode = _parse_mode_fields(sec)
    sec.finish()
    return mode


def _parse_pll(sec: _Section, base: PerUnitBase) -> PllParams:
    try:
        pll = PllParams(
            kp=sec.number("kp"),
            ki=sec.number("ki"),
            omega0=base.omega0,
            f_lim=sec.number("f_lim_hz"),
            gain_basis=sec.string("gain_basis", "hybrid"),
        )
    except ValueError as exc:
        raise ScenarioError(f"[pll] {exc}") from None
    sec.finish()
    return pll


def _parse_frt(sec: Optional[_Section]) -> FrtParams:
    if sec is None:
        return FrtParams()
    try:
        frt = FrtParams(
            k_factor=sec.number("k_factor", 2.0),
            deadband=sec.number("deadband_pu", 0.1),
            i_max=sec.number("i_max_pu", 1.0),
            v_eps=sec.number("v_eps_pu", 1e-4),
        )
    except ValueError as exc:
        raise ScenarioError(f"[frt] {exc}") from None
    sec.finish()
    return frt


def _parse_relay(sec: _Section) -> tuple[BlinderSettings, Optional[tuple]]:
    tilt = sec.number("tilt_deg", 90.0)
    has_r = any(sec.has(k) for k in ("r_outer_ohm", "r_middle_ohm", "r_inner_ohm"))
    has_a = sec.has("angles_deg") or sec.has("x_total_ohm")
    if has_r and has_a:
        raise ScenarioError(
            "[relay] give either explicit resistances or angles with a reach, not both")
    if has_a:
        angles = sec.take("angles_deg")
        if (not isinstance(angles, list) or len(angles) != 3
                or not all(isinstance(a, (int, float)) for a in angles)):
            raise ScenarioError("[relay] angles_deg must be a list of three numbers")
        x_total = sec.number("x_total_ohm")
        try:
            blinders = blinders_from_angles(x_total, *map(float, angles), tilt_deg=tilt)
        except ValueError as exc:
            raise ScenarioError(f"[relay] {exc}") from None
        sec.finish()
        return blinders, (tuple(map(float, angles)), x_total)
    try:
        blinders = BlinderSettings(
            r_outer=sec.number("r_outer_ohm"),
            r_middle=sec.number("r_middle_ohm"),
            r_inner=sec.number("r_inner_ohm"),
            tilt_deg=tilt,
        )
    except ValueError as exc:
        raise ScenarioError(f"[relay] {exc}") from None
    sec.finish()
    return blinders, None


def _parse_timers(sec: _Section, base: PerUnitBase,
                  relay_angles: Optional[tuple]) -> TimerSettings:
    forms = [sec.has("psb_cycles") or sec.has("ost_cycles"),
             sec.has("psb_s") or sec.has("ost_s"),
             sec.has("f_swing_hz")]
    if sum(forms) != 1:
        raise ScenarioError(
            "[timers] give exactly one of {psb_cycles, ost_cycles}, "
            "{psb_s, ost_s} or {f_swing_hz}")
    try:
        if forms[0]:
            timers = TimerSettings.from_cycles(
                sec.number("psb_cycles"), sec.number("ost_cycles"), base.f0)
        elif forms[1]:
            timers = TimerSettings(dt_psb=sec.number("psb_s"),
                                   dt_ost=sec.number("ost_s"), f0=base.f0)
        else:
            if relay_angles is None:
                raise ScenarioError(
                    "[timers] the f_swing_hz form needs the relay angle form")
            (d_o, d_m, d_i), _ = relay_angles
            timers = timer_settings(d_o, d_m, d_i, base.f0, sec.number("f_swing_hz"))
    except ValueError as exc:
        raise ScenarioError(f"[timers] {exc}") from None
    sec.finish()
    return timers


def _parse_events(raw: Any) -> tuple[TimelineEvent, ...]:
    if not isinstance(raw, list):
        raise ScenarioError("[[events]] must be an array of tables")
    events = []
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise ScenarioError(f"[[events]] entry {i} must be a table")
        sec = _Section(f"events[{i}]", entry)
        t = sec.number("t_s")
        kind = sec.string("kind")
        if kind == "apply_fault":
            try:
                action = ApplyFault(position=sec.number("position", 0.05))
            except ValueError as exc:
                raise ScenarioError(f"[events[{i}]] {exc}") from None
        elif kind == "clear_fault":
            action = ClearFault()
        elif kind == "set_mode":
            action = SetMode(mode=_parse_mode_fields(sec))
        else:
            raise ScenarioError(
                f"[events[{i}]] unknown kind {kind!r}; expected apply_fault, "
                "clear_fault or set_mode")
        sec.finish()
        events.append(TimelineEvent(t=t, action=action))
    return tuple(events)


# --- serialization ---------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        r = repr(value)
        # TOML floats need a decimal point or exponent marker.
        if "." not in r and "e" not in r and "E" not in r and r not in ("inf", "nan"):
            r += ".0"
        return r
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _mode_lines(mode: ControlMode) -> list[str]:
    if isinstance(mode, CpfMode):
        return [f'mode = "cpf"',
                f"id_ref_pu = {_fmt(mode.id_ref)}",
                f"iq_ref_pu = {_fmt(mode.iq_ref)}"]
    return [f'mode = "opc"',
            f"p_ref_pu = {_fmt(mode.p_ref)}",
            f"q_ref_pu = {_fmt(mode.q_ref)}"]


def serialize_scenario(sc: Scenario) -> str:
    """Render a scenario as canonical TOML (p.u. impedances, seconds).

    Loading the output reproduces the scenario exactly, field for field.
    """
    out = io.StringIO()
    w = out.write
    if sc.name:
        w(f"name = {_fmt(sc.name)}\n\n")
    w("[base]\n")
    w(f"v_base_kv = {_fmt(sc.base.v_base / 1e3)}\n")
    w(f"s_base_mva = {_fmt(sc.base.s_base / 1e6)}\n")
    w(f"f0_hz = {_fmt(sc.base.f0)}\n\n")

    w("[network]\n")
    w(f"e_r_pu = {_fmt(sc.network.e_r)}\n")
    for stem, z in (("filter", sc.network.z_f), ("line1", sc.network.z_l1),
                    ("line2", sc.network.z_l2), ("source", sc.network.z_r)):
        if stem == "source" and z == 0:
            continue
        w(f"x_{stem}_pu = {_fmt(z.imag)}\n")
        if z.real != 0.0:
            w(f"r_{stem}_pu = {_fmt(z.real)}\n")
    w("\n[control]\n")
    for line in _mode_lines(sc.mode):
        w(line + "\n")

    w("\n[pll]\n")
    w(f"kp = {_fmt(sc.pll.kp)}\n")
    w(f"ki = {_fmt(sc.pll.ki)}\n")
    w(f"f_lim_hz = {_fmt(sc.pll.f_lim)}\n")
    w(f"gain_basis = {_fmt(sc.pll.gain_basis)}\n")

    w("\n[frt]\n")
    w(f"k_factor = {_fmt(sc.frt.k_factor)}\n")
    w(f"deadband_pu = {_fmt(sc.frt.deadband)}\n")
    w(f"i_max_pu = {_fmt(sc.frt.i_max)}\n")
    w(f"v_eps_pu = {_fmt(sc.frt.v_eps)}\n")

    w("\n[relay]\n")
    w(f"tilt_deg = {_fmt(sc.blinders.tilt_deg)}\n")
    b = sc.blinders
    if b.delta_o is not None and b.x_total_ohm is not None:
        w(f"angles_deg = {_fmt([b.delta_o, b.delta_m, b.delta_i])}\n")
        w(f"x_total_ohm = {_fmt(b.x_total_ohm)}\n")
    else:
        w(f"r_outer_ohm = {_fmt(b.r_outer)}\n")
        w(f"r_middle_ohm = {_fmt(b.r_middle)}\n")
        w(f"r_inner_ohm = {_fmt(b.r_inner)}\n")

    w("\n[timers]\n")
    t = sc.timers
    from_angles = False
    if t.f_swing is not None and b.delta_o is not None and b.x_total_ohm is not None:
        # Only express the slip-frequency form if reloading would rebuild
        # these exact thresholds from the relay angles.
        from_angles = t == timer_settings(b.delta_o, b.delta_m, b.delta_i,
                                          t.f0, t.f_swing)
    if from_angles:
        w(f"f_swing_hz = {_fmt(t.f_swing)}\n")
    else:
        w(f"psb_s = {_fmt(t.dt_psb)}\n")
        w(f"ost_s = {_fmt(t.dt_ost)}\n")

    for ev in sc.events:
        w("\n[[events]]\n")
        w(f"t_s = {_fmt(ev.t)}\n")
        if isinstance(ev.action, ApplyFault):
            w('kind = "apply_fault"\n')
            w(f"position = {_fmt(ev.action.position)}\n")
        elif isinstance(ev.action, ClearFault):
            w('kind = "clear_fault"\n')
        else:
            w('kind = "set_mode"\n')
            for line in _mode_lines(ev.action.mode):
                w(line + "\n")

    w("\n[sim]\n")
    w(f"dt_s = {_fmt(sc.dt)}\n")
    w(f"t_end_s = {_fmt(sc.t_end)}\n")
    w(f"fp_tol = {_fmt(sc.fp_tol)}\n")
    w(f"fp_max_iter = {_fmt(sc.fp_max_iter)}\n")
    w(f"frt_v_threshold = {_fmt(sc.frt_v_threshold)}\n")
    w(f"los_confirm_s = {_fmt(sc.los_confirm_s)}\n")
    return out.getvalue()


# --- bundled presets -------------------------------------------------------

def preset_names() -> list[str]:
    """Names of the bundled study cases."""
    pkg = resources.files("gflswing.presets")
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".toml"))


def preset_path(name: str):
    pkg = resources.files("gflswing.presets")
    p = pkg / f"{name}.toml"
    if not p.is_file():
        raise ScenarioError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return p


def load_preset(name: str) -> Scenario:
    """Load one of the bundled study cases by name."""
    return loads_scenario(preset_path(name).read_text(encoding="utf-8"))
