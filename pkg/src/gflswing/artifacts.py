"""Result serialization: time-series CSV, event log, summary, R-X plot.

All writers are byte-deterministic: the same result always produces the
same files, so golden-file comparisons and reproducibility checks are
exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .engine import SimResult
from .relay import region_name
from .vsc import CpfMode

__all__ = ["RunArtifacts", "write_artifacts", "CSV_HEADER"]

CSV_HEADER = ("t_s,v_pcc_pu,delta_pcc_deg,delta_pll_deg,delta_s_deg,phi_deg,"
              "angle_sum_deg,ig_pu,f_pll_hz,z_re_ohm,z_im_ohm,region,psb,"
              "fault_decl,ost")

# Trigger-signal event kinds latched into the CSV columns.
_TRIGGER_COLS = {"psb_block": 12, "fault_declared": 13, "ost_trip": 14}


@dataclass(frozen=True)
class RunArtifacts:
    """Paths of the four files a run produces."""

    timeseries_csv: Path
    events_jsonl: Path
    trajectory_svg: Path
    summary_json: Path


def _g(x: float) -> str:
    """Compact deterministic float format."""
    if math.isnan(x):
        return "nan"
    return format(x, ".10g")


def write_artifacts(result: SimResult, out_dir: str | Path) -> RunArtifacts:
    """Write the four run artifacts into ``out_dir`` (created if needed)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = RunArtifacts(
        timeseries_csv=out / "timeseries.csv",
        events_jsonl=out / "events.jsonl",
        trajectory_svg=out / "trajectory.svg",
        summary_json=out / "summary.json",
    )
    _write_timeseries(result, paths.timeseries_csv)
    _write_events(result, paths.events_jsonl)
    _write_svg(result, paths.trajectory_svg)
    _write_summary(result, paths.summary_json)
    return paths


def _write_timeseries(res: SimResult, path: Path) -> None:
    # Trigger signals latch at the first matching event and stay high.
    latch_t = {kind: math.inf for kind in _TRIGGER_COLS}
    for e in res.relay_events:
        k = e.kind.value
        if k in latch_t and e.t < latch_t[k]:
            latch_t[k] = e.t
    t_psb, t_fd, t_ost = (latch_t["psb_block"], latch_t["fault_declared"],
                          latch_t["ost_trip"])

    cols = (res.t, res.v_pcc, res.delta_pcc, res.delta_pll, res.delta_s,
            res.phi, res.angle_sum, res.i_g, res.f_pll,
            res.z_re_ohm, res.z_im_ohm)
    region = res.region
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for k in range(len(res.t)):
            t = res.t[k]
            fh.write(",".join(_g(c[k]) for c in cols))
            fh.write(f",{region_name(region[k])},"
                     f"{1 if t >= t_psb else 0},"
                     f"{1 if t >= t_fd else 0},"
                     f"{1 if t >= t_ost else 0}\n")


def _write_events(res: SimResult, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for e in res.relay_events:
            fh.write(json.dumps({"kind": e.kind.value, "t": round(e.t, 9)},
                                sort_keys=True) + "\n")


def _write_summary(res: SimResult, path: Path) -> None:
    sc = res.scenario
    if isinstance(sc.mode, CpfMode):
        mode = {"mode": "cpf", "id_ref_pu": sc.mode.id_ref, "iq_ref_pu": sc.mode.iq_ref}
    else:
        mode = {"mode": "opc", "p_ref_pu": sc.mode.p_ref, "q_ref_pu": sc.mode.q_ref}
    z_base = sc.base.z_base
    summary = {
        "name": sc.name,
        "verdict": res.verdict.value,
        "los_t": res.los_t,
        "events": [{"kind": e.kind.value, "t": round(e.t, 9)}
                   for e in res.relay_events],
        "control": mode,
        "peaks": {
            "delta_pll_deg": float(max(abs(res.delta_pll.min()), abs(res.delta_pll.max()))),
            "delta_s_deg": float(max(abs(res.delta_s.min()), abs(res.delta_s.max()))),
            "angle_sum_deg": float(max(abs(res.angle_sum.min()), abs(res.angle_sum.max()))),
            "i_g_pu": float(res.i_g.max()),
        },
        "relay": {
            "r_outer_ohm": sc.blinders.r_outer,
            "r_middle_ohm": sc.blinders.r_middle,
            "r_inner_ohm": sc.blinders.r_inner,
            "r_outer_pu": sc.blinders.r_outer / z_base,
            "r_middle_pu": sc.blinders.r_middle / z_base,
            "r_inner_pu": sc.blinders.r_inner / z_base,
            "dt_psb_s": sc.timers.dt_psb,
            "dt_ost_s": sc.timers.dt_ost,
        },
        "solver": {
            "fp_failures": res.fp_failures,
            "max_fp_iters": res.max_fp_iters,
            "max_kirchhoff_residual": res.max_kirchhoff_residual,
            "max_opc_identity_deg": res.max_opc_identity_deg,
        },
    }
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


# --- R-X plot ---------------------------------------------------------------

_SVG_SIZE = 640
_MAX_POLYLINE_POINTS = 4000


def _write_svg(res: SimResult, path: Path) -> None:
    """Draw the measured trajectory, the blinder pairs and the reference circle.

    The view centres on the relay characteristic (blinders plus the
    constant-current locus circle of the post-disturbance topology); the
    trajectory may run off-view while far from the relay reach.  Long runs
    are decimated to a bounded number of polyline points.
    """
    sc = res.scenario
    z_base = sc.base.z_base
    b = sc.blinders

    # Reference circle: post-disturbance grid impedance and final current.
    z_g = (sc.network.z_l1 + sc.network.z_r) * z_base
    i_g = float(res.i_g[-1]) if len(res.i_g) else 1.0
    radius = sc.network.e_r / i_g * z_base if i_g > 0 else sc.network.e_r * z_base

    half = max(b.r_outer * 1.6, radius + abs(z_g) * 0.2)
    cx, cy = z_g.real, z_g.imag
    x0, x1 = cx - half, cx + half
    y0, y1 = cy - radius * 1.25, cy + radius * 1.25
    span = max(x1 - x0, y1 - y0)
    scale = _SVG_SIZE / span

    def px(x: float) -> float:
        return (x - x0) * scale

    def py(y: float) -> float:
        return _SVG_SIZE - (y - y0) * scale  # R-X plane has X upward

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE}" '
        f'height="{_SVG_SIZE}" viewBox="0 0 {_SVG_SIZE} {_SVG_SIZE}">',
        f'<rect width="{_SVG_SIZE}" height="{_SVG_SIZE}" fill="white"/>',
        f'<line x1="{px(x0):.2f}" y1="{py(0):.2f}" x2="{px(x0 + span):.2f}" '
        f'y2="{py(0):.2f}" stroke="#bbbbbb" stroke-width="1"/>',
        f'<line x1="{px(0):.2f}" y1="{py(y0):.2f}" x2="{px(0):.2f}" '
        f'y2="{py(y0 + span):.2f}" stroke="#bbbbbb" stroke-width="1"/>',
    ]

    # Blinder pairs: lines through +-r on the R axis at the tilt angle.
    tilt = math.radians(b.tilt_deg)
    ux, uy = math.cos(tilt), math.sin(tilt)  # direction along the blinder
    reach = span  # long enough to cross the whole view
    for r, colour in ((b.r_outer, "#1f77b4"), (b.r_middle, "#ff7f0e"),
                      (b.r_inner, "#d62728")):
        # Perpendicular offset of the pair from the axis.
        oxp, oyp = r * math.sin(tilt), -r * math.cos(tilt)
        for sgn in (1.0, -1.0):
            mx, my = sgn * oxp, sgn * oyp
            lines.append(
                f'<line x1="{px(mx - ux * reach):.2f}" y1="{py(my - uy * reach):.2f}" '
                f'x2="{px(mx + ux * reach):.2f}" y2="{py(my + uy * reach):.2f}" '
                f'stroke="{colour}" stroke-width="1" stroke-dasharray="6,3"/>')

    lines.append(
        f'<circle cx="{px(cx):.2f}" cy="{py(cy):.2f}" r="{radius * scale:.2f}" '
        'fill="none" stroke="#2ca02c" stroke-width="1" stroke-dasharray="2,3"/>')

    pts = []
    n = len(res.t)
    stride = max(1, n // _MAX_POLYLINE_POINTS)
    for k in range(0, n, stride):
        zr, zi = res.z_re_ohm[k], res.z_im_ohm[k]
        if math.isnan(zr) or math.isnan(zi):
            continue
        pts.append(f"{px(zr):.2f},{py(zi):.2f}")
    if pts:
        lines.append(f'<polyline points="{" ".join(pts)}" fill="none" '
                     'stroke="black" stroke-width="1.2"/>')

    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
