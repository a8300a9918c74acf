"""Scenario files, bundled presets, artifact writers and the CLI."""

import json
import math

import pytest

from gflswing.artifacts import CSV_HEADER, write_artifacts
from gflswing.cli import main
from gflswing.engine import ApplyFault, ClearFault, run
from gflswing.scenario import (ScenarioError, load_preset, load_scenario,
                               loads_scenario, preset_names, serialize_scenario)
from gflswing.vsc import CpfMode, OpcMode

MINI = """
name = "mini"

[base]
v_base_kv = 220.0
s_base_mva = 3025.0
f0_hz = 50.0

[network]
e_r_pu = 1.0
l_filter_mh = 10.0
l_line1_mh = 35.5
l_line2_mh = 2.0

[control]
mode = "cpf"
id_ref_pu = 1.0
iq_ref_pu = 0.0

[pll]
kp = 0.57
ki = 0.0616
f_lim_hz = 5.0

[relay]
r_outer_ohm = 7.2
r_middle_ohm = 6.0
r_inner_ohm = 4.2

[timers]
psb_cycles = 1.5
ost_cycles = 2.5

[[events]]
t_s = 1.0
kind = "apply_fault"
position = 0.05

[[events]]
t_s = 1.3
kind = "clear_fault"

[sim]
t_end_s = 2.0
"""


class TestLoading:
    def test_mini_scenario(self):
        sc = loads_scenario(MINI)
        assert sc.name == "mini"
        assert sc.base.z_base == pytest.approx(16.0)
        assert sc.network.z_l1.imag == pytest.approx(2 * math.pi * 50 * 0.0355 / 16)
        assert isinstance(sc.mode, CpfMode) and sc.mode.id_ref == 1.0
        assert sc.timers.dt_psb == pytest.approx(0.03)
        assert sc.timers.dt_ost == pytest.approx(0.05)
        assert isinstance(sc.events[0].action, ApplyFault)
        assert isinstance(sc.events[1].action, ClearFault)
        assert sc.dt == 1e-4  # default

    def test_angle_form_relay(self):
        text = MINI.replace(
            "r_outer_ohm = 7.2\nr_middle_ohm = 6.0\nr_inner_ohm = 4.2",
            "angles_deg = [90.0, 100.0, 120.0]\nx_total_ohm = 14.4")
        sc = loads_scenario(text)
        assert sc.blinders.r_outer == pytest.approx(7.2)
        assert sc.blinders.r_middle == pytest.approx(6.042, abs=1e-3)
        assert sc.blinders.r_inner == pytest.approx(4.157, abs=1e-3)
        assert sc.blinders.delta_o == 90.0

    def test_slip_frequency_timers_need_angles(self):
        text = MINI.replace("psb_cycles = 1.5\nost_cycles = 2.5", "f_swing_hz = 1.0")
        with pytest.raises(ScenarioError, match="angle form"):
            loads_scenario(text)
        both = text.replace(
            "r_outer_ohm = 7.2\nr_middle_ohm = 6.0\nr_inner_ohm = 4.2",
            "angles_deg = [90.0, 100.0, 120.0]\nx_total_ohm = 14.4")
        sc = loads_scenario(both)
        assert sc.timers.psb_cycles == pytest.approx(1.389, abs=1e-3)

    def test_ordering_violation_named(self):
        text = MINI.replace("r_inner_ohm = 4.2", "r_inner_ohm = 6.5")
        with pytest.raises(ScenarioError, match="r_outer > r_middle > r_inner"):
            loads_scenario(text)

    def test_unknown_key_rejected(self):
        with pytest.raises(ScenarioError, match=r"\[pll\] unknown key"):
            loads_scenario(MINI.replace("kp = 0.57", "kp = 0.57\nkpx = 1.0"))
        with pytest.raises(ScenarioError, match="unknown top-level key"):
            loads_scenario("widgets = 3\n" + MINI)

    def test_both_relay_forms_rejected(self):
        text = MINI.replace("r_outer_ohm = 7.2",
                            "r_outer_ohm = 7.2\nangles_deg = [90.0, 100.0, 120.0]")
        with pytest.raises(ScenarioError, match="not both"):
            loads_scenario(text)

    def test_missing_section(self):
        head, _, tail = MINI.partition("[pll]")
        tail = tail.split("[relay]", 1)[1]
        with pytest.raises(ScenarioError, match="missing required section"):
            loads_scenario(head + "[relay]" + tail)

    def test_parse_error_reported(self):
        with pytest.raises(ScenarioError, match="TOML parse error"):
            loads_scenario("this is not toml [")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario(tmp_path / "nope.toml")


class TestPresets:
    def test_names(self):
        assert preset_names() == [
            "maloperation_cpf", "stable_cpf_a", "stable_cpf_b",
            "stable_opc_a", "stable_opc_b", "unstable_cpf", "unstable_opc"]

    def test_all_load(self):
        for name in preset_names():
            sc = load_preset(name)
            assert sc.name == name
            assert sc.base.f0 == 50.0
            assert sc.pll.kp == 0.57 and sc.pll.ki == 0.0616
            assert sc.fault_windows[0][0] == 30.0

    def test_flagship_values(self):
        sc = load_preset("maloperation_cpf")
        assert sc.network.z_l1.imag * 16 == pytest.approx(11.153, abs=1e-3)
        assert sc.network.z_l2.imag * 16 == pytest.approx(0.6283, abs=1e-4)
        assert (sc.blinders.r_outer, sc.blinders.r_middle, sc.blinders.r_inner) \
            == (7.2, 6.0, 4.2)
        assert sc.fault_windows == ((30.0, 30.3),)

    def test_unstable_opc_values(self):
        sc = load_preset("unstable_opc")
        assert isinstance(sc.mode, OpcMode)
        assert sc.mode.q_ref == -0.2
        assert sc.network.z_l1.imag * 16 == pytest.approx(8.7965, abs=1e-3)
        assert sc.blinders.r_middle == 5.03
        assert sc.fault_windows == ((30.0, 31.0),)

    def test_unknown_preset(self):
        with pytest.raises(ScenarioError, match="unknown preset"):
            load_preset("nope")


class TestRoundTrip:
    def test_mini_identity(self):
        sc = loads_scenario(MINI)
        assert loads_scenario(serialize_scenario(sc)) == sc

    def test_all_presets_identity(self):
        for name in preset_names():
            sc = load_preset(name)
            assert loads_scenario(serialize_scenario(sc)) == sc

    def test_angle_form_identity(self):
        text = MINI.replace(
            "r_outer_ohm = 7.2\nr_middle_ohm = 6.0\nr_inner_ohm = 4.2",
            "angles_deg = [90.0, 100.0, 120.0]\nx_total_ohm = 14.4").replace(
            "psb_cycles = 1.5\nost_cycles = 2.5", "f_swing_hz = 1.3")
        sc = loads_scenario(text)
        assert loads_scenario(serialize_scenario(sc)) == sc


@pytest.fixture(scope="module")
def mini_result():
    return run(loads_scenario(MINI))


class TestArtifacts:
    def test_csv_header_golden(self, mini_result, tmp_path):
        paths = write_artifacts(mini_result, tmp_path)
        first = paths.timeseries_csv.read_text().splitlines()[0]
        assert first == CSV_HEADER
        assert first == ("t_s,v_pcc_pu,delta_pcc_deg,delta_pll_deg,delta_s_deg,"
                         "phi_deg,angle_sum_deg,ig_pu,f_pll_hz,z_re_ohm,"
                         "z_im_ohm,region,psb,fault_decl,ost")

    def test_byte_determinism(self, mini_result, tmp_path):
        sc = mini_result.scenario
        a = write_artifacts(run(sc), tmp_path / "a")
        b = write_artifacts(run(sc), tmp_path / "b")
        for name in ("timeseries_csv", "events_jsonl", "trajectory_svg",
                     "summary_json"):
            assert getattr(a, name).read_bytes() == getattr(b, name).read_bytes()

    def test_events_jsonl_and_summary(self, mini_result, tmp_path):
        paths = write_artifacts(mini_result, tmp_path)
        lines = paths.events_jsonl.read_text().splitlines()
        kinds = [json.loads(l)["kind"] for l in lines]
        assert "psb_block" in kinds and "ost_trip" in kinds
        assert kinds.index("psb_block") < kinds.index("ost_trip")
        summary = json.loads(paths.summary_json.read_text())
        assert summary["verdict"] == "ost_maloperation"
        assert summary["relay"]["r_outer_pu"] == pytest.approx(0.45)

    def test_quiet_run_artifacts(self, tmp_path):
        text = MINI.split("[[events]]")[0] + "[sim]\nt_end_s = 0.5\n"
        res = run(loads_scenario(text))
        paths = write_artifacts(res, tmp_path / "quiet")
        assert paths.events_jsonl.read_text() == ""
        summary = json.loads(paths.summary_json.read_text())
        assert summary["verdict"] == "correct"
        assert summary["los_t"] is None

    def test_trigger_columns_latch(self, mini_result, tmp_path):
        paths = write_artifacts(mini_result, tmp_path / "latch")
        rows = paths.timeseries_csv.read_text().splitlines()
        header = rows[0].split(",")
        i_t, i_psb = header.index("t_s"), header.index("psb")
        first_on = next(r for r in rows[1:] if r.split(",")[i_psb] == "1")
        t_on = float(first_on.split(",")[i_t])
        ev = [e for e in mini_result.relay_events if e.kind.value == "psb_block"][0]
        assert t_on == pytest.approx(ev.t, abs=1e-9)
        assert rows[-1].split(",")[i_psb] == "1"

    def test_svg_structure(self, mini_result, tmp_path):
        paths = write_artifacts(mini_result, tmp_path / "svg")
        svg = paths.trajectory_svg.read_text()
        assert svg.startswith("<svg")
        assert svg.count("<line") >= 8  # axes + six blinder edges
        assert "<circle" in svg and "<polyline" in svg


class TestCli:
    def test_blinders_output(self, capsys):
        assert main(["blinders", "--x-total", "14.4",
                     "--angles", "90,100,120"]) == 0
        out = capsys.readouterr().out
        assert "7.200" in out and "6.042" in out and "4.157" in out

    def test_timers_output(self, capsys):
        assert main(["timers", "--angles", "90,100,120",
                     "--f0", "50", "--fswing", "1"]) == 0
        out = capsys.readouterr().out
        assert "1.389" in out and "4.167" in out

    def test_presets_listing(self, capsys):
        assert main(["presets"]) == 0
        out = capsys.readouterr().out.split()
        assert "maloperation_cpf" in out and "unstable_opc" in out

    def test_scenario_argument_resolves_presets(self):
        from gflswing.cli import _load_scenario_arg
        sc = _load_scenario_arg("stable_cpf_a")
        assert sc.name == "stable_cpf_a"
        with pytest.raises(ScenarioError, match="unknown preset"):
            _load_scenario_arg("not_a_preset")
        with pytest.raises(ScenarioError, match="not found"):
            _load_scenario_arg("missing/dir/file.toml")

    def test_run_and_replay(self, tmp_path, capsys):
        scenario = tmp_path / "mini.toml"
        scenario.write_text(MINI)
        out_dir = tmp_path / "out"
        assert main(["run", str(scenario), "--out", str(out_dir)]) == 0
        assert (out_dir / "timeseries.csv").exists()
        capsys.readouterr()
        # Replaying the recorded trajectory reproduces the event log.
        assert main(["replay", "--trajectory", str(out_dir / "timeseries.csv"),
                     "--relay", str(scenario)]) == 0
        replay_out = capsys.readouterr().out.strip().splitlines()
        recorded = (out_dir / "events.jsonl").read_text().strip().splitlines()
        assert replay_out == recorded

    def test_run_validation_error_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text(MINI.replace("r_inner_ohm = 4.2", "r_inner_ohm = 9.9"))
        assert main(["run", str(bad)]) == 2
        assert "r_outer > r_middle > r_inner" in capsys.readouterr().err

    def test_missing_scenario_exit_2(self, capsys):
        assert main(["run", "no_such_file.toml"]) == 2

    def test_solver_failure_exit_3(self, tmp_path, capsys):
        text = (MINI.replace('mode = "cpf"\nid_ref_pu = 1.0\niq_ref_pu = 0.0',
                             'mode = "opc"\np_ref_pu = 1.0\nq_ref_pu = -0.2')
                .replace("[sim]\nt_end_s = 2.0",
                         "[sim]\nt_end_s = 1.5\nfp_max_iter = 1\nfp_tol = 1e-14"))
        starved = tmp_path / "starved.toml"
        starved.write_text(text)
        assert main(["run", str(starved), "--out", str(tmp_path / "o")]) == 3
        assert "solver failure" in capsys.readouterr().err

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["blinders", "--x-total", "14.4", "--angles", "90,100,120",
                  "--frobnicate"])
        assert exc.value.code == 2

    def test_locus_csv(self, capsys):
        assert main(["locus", "--model", "gfl", "--e-r", "1", "--i-g", "1",
                     "--z-g", "0,0.9", "--sweep", "0,360,90"]) == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert rows[0] == "angle_deg,z_re,z_im"
        assert len(rows) == 6
        assert rows[1].startswith("0,1,")

    def test_locus_sg(self, capsys):
        assert main(["locus", "--model", "sg", "--n", "1",
                     "--z-t", "0,1", "--sweep", "90,90,1"]) == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert rows[1] == "90,0.5,0.5"

    def test_sweep_csv(self, tmp_path, capsys):
        scenario = tmp_path / "mini.toml"
        scenario.write_text(MINI)
        grid = tmp_path / "grid.toml"
        grid.write_text('[[runs]]\n"pll.kp" = 0.57\n\n[[runs]]\n"pll.kp" = -1.0\n')
        assert main(["sweep", "--base", str(scenario), "--grid", str(grid)]) == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert rows[0].startswith("override,verdict")
        assert len(rows) == 3
        assert "ost_maloperation" in rows[1]
        assert "ValueError" in rows[2]
