"""Converter control model: PLL, dq measurement, current references."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gflswing.phasor import wrap_degrees
from gflswing.vsc import (CpfMode, FrtParams, OpcMode, PllParams,
                          abc_voltages, alpha0_of, current_refs_fault,
                          current_refs_normal, initial_pll_state, measure_dq,
                          park_dq, phi_of, pll_step)

FRT = FrtParams()


class TestMeasureDq:
    def test_aligned_frame(self):
        v = measure_dq(1.0, 30.0, 30.0)
        assert v.vd == pytest.approx(1.0)
        assert v.vq == pytest.approx(0.0, abs=1e-15)

    def test_quadrature(self):
        v = measure_dq(1.0, 90.0, 0.0)
        assert v.vd == pytest.approx(0.0, abs=1e-15)
        assert v.vq == pytest.approx(1.0)

    def test_against_abc_park_path(self):
        # Independent route: synthesize instantaneous three-phase voltages
        # and run them through the Park transform.
        for wt in (0.0, 17.0, 123.4, 290.0):
            va, vb, vc = abc_voltages(0.8, 20.0, wt)
            dq = park_dq(va, vb, vc, wt + 5.0)
            closed = measure_dq(0.8, 20.0, 5.0)
            assert dq.vd == pytest.approx(closed.vd, abs=1e-12)
            assert dq.vq == pytest.approx(closed.vq, abs=1e-12)
        assert closed.vd == pytest.approx(0.7725, abs=3e-4)
        assert closed.vq == pytest.approx(0.2070, abs=3e-4)

    @given(st.floats(0.0, 2.0), st.floats(-180.0, 180.0),
           st.floats(-180.0, 180.0), st.floats(0.0, 360.0))
    @settings(max_examples=200)
    def test_dq_path_equivalence(self, vmag, dpcc, dpll, wt):
        va, vb, vc = abc_voltages(vmag, dpcc, wt)
        dq = park_dq(va, vb, vc, wt + dpll)
        closed = measure_dq(vmag, dpcc, dpll)
        assert dq.vd == pytest.approx(closed.vd, abs=1e-9)
        assert dq.vq == pytest.approx(closed.vq, abs=1e-9)


def _params(kp=0.57, ki=0.0616, basis="hybrid", f_lim=5.0):
    return PllParams(kp=kp, ki=ki, omega0=2 * math.pi * 50.0, f_lim=f_lim,
                     gain_basis=basis)


class TestPllStep:
    def test_zero_input_free_runs_at_nominal(self):
        params = _params()
        state = initial_pll_state(0.0, params)
        dt = 1e-4
        for _ in range(1000):
            state = pll_step(state, 0.0, dt, params)
        assert state.omega == pytest.approx(params.omega0)
        assert state.delta_deg == pytest.approx(0.0, abs=1e-12)
        assert state.theta_deg == pytest.approx(
            math.degrees(params.omega0 * 1000 * dt), rel=1e-12)

    def test_per_unit_gain_clamps_at_frequency_limit(self):
        # kp=0.57 p.u. with a 1 p.u. q-voltage asks for far more than the
        # +-5 Hz window allows.
        params = _params(ki=0.0, basis="per_unit")
        state = initial_pll_state(0.0, params)
        state = pll_step(state, 1.0, 1e-4, params)
        assert state.omega - params.omega0 == pytest.approx(2 * math.pi * 5.0)

    def test_zero_gains_keep_nominal(self):
        params = _params(kp=0.0, ki=0.0)
        state = initial_pll_state(12.0, params)
        for vq in (1.0, -3.0, 0.5):
            state = pll_step(state, vq, 1e-3, params)
        assert state.omega == pytest.approx(params.omega0)
        assert state.delta_deg == pytest.approx(12.0)

    def test_rejects_bad_dt(self):
        params = _params()
        with pytest.raises(ValueError):
            pll_step(initial_pll_state(0.0, params), 0.0, 0.0, params)

    def test_theta_delta_invariant(self):
        params = _params()
        state = initial_pll_state(3.0, params)
        t = 0.0
        for k in range(500):
            state = pll_step(state, 0.05 * math.sin(k / 20.0), 1e-4, params)
            t += 1e-4
        assert state.theta_deg - math.degrees(params.omega0 * t) == pytest.approx(
            state.delta_deg, abs=1e-9)

    @given(st.lists(st.floats(-2.0, 2.0), min_size=1, max_size=200))
    @settings(max_examples=50)
    def test_frequency_clamp_invariant(self, vqs):
        params = _params()
        state = initial_pll_state(0.0, params)
        for vq in vqs:
            state = pll_step(state, vq, 1e-3, params)
            assert abs(state.omega - params.omega0) <= 2 * math.pi * 5.0 + 1e-12

    def test_gain_bases(self):
        w0 = 2 * math.pi * 50.0
        pu = _params(basis="per_unit")
        rs = _params(basis="rad_per_s")
        hy = _params(basis="hybrid")
        assert pu.kp_eff == pytest.approx(0.57 * w0)
        assert pu.ki_eff == pytest.approx(0.0616 * w0)
        assert rs.kp_eff == pytest.approx(0.57)
        assert rs.ki_eff == pytest.approx(0.0616)
        assert hy.kp_eff == pytest.approx(0.57)
        assert hy.ki_eff == pytest.approx(0.0616 * w0)
        with pytest.raises(ValueError):
            _params(basis="nonsense")


class TestNormalReferences:
    def test_cpf_passthrough(self):
        cmd = current_refs_normal(CpfMode(1.0, 0.0), measure_dq(0.3, 40.0, 10.0), FRT)
        assert cmd.i_mag == pytest.approx(1.0)
        assert cmd.phi_deg == pytest.approx(0.0)

    def test_cpf_reactive_angle(self):
        cmd = current_refs_normal(CpfMode(1.0, -0.2), measure_dq(1.0, 0.0, 0.0), FRT)
        assert cmd.phi_deg == pytest.approx(-11.309932474, rel=1e-9)

    def test_cpf_ceiling_preserves_angle(self):
        cmd = current_refs_normal(CpfMode(1.0, -0.2), measure_dq(1.0, 0.0, 0.0), FRT)
        assert cmd.i_mag == pytest.approx(1.0)  # 1.0198 capped at i_max
        assert cmd.phi_deg == pytest.approx(math.degrees(math.atan2(-0.2, 1.0)))

    def test_opc_example(self):
        mode = OpcMode(1.0, -0.2)
        frt = FrtParams(i_max=2.0)  # keep the cap out of the way
        from gflswing.vsc import DqVoltage
        v = DqVoltage(0.9, 0.1)
        cmd = current_refs_normal(mode, v, frt)
        assert cmd.i_mag == pytest.approx(math.sqrt(1.04), rel=1e-12)
        expected_phi = (math.degrees(math.atan2(0.1, 0.9))
                        + alpha0_of(1.0, -0.2))
        assert cmd.phi_deg == pytest.approx(expected_phi, abs=1e-9)

    def test_opc_degenerate_floor(self):
        mode = OpcMode(1.0, 0.0)
        from gflswing.vsc import DqVoltage
        cmd = current_refs_normal(mode, DqVoltage(1e-7, 0.0), FRT)
        assert cmd.degenerate

    @given(st.floats(0.01, 1.5), st.floats(-179.0, 179.0), st.floats(-179.0, 179.0),
           st.floats(0.1, 2.0), st.floats(-1.5, 1.5))
    @settings(max_examples=300)
    def test_opc_closed_form_identity(self, vmag, dpcc, dpll, p_ref, q_ref):
        # The control angle plus the PLL angle collapses to the bus angle
        # plus the setpoint angle, independent of the PLL error.
        mode = OpcMode(p_ref, q_ref)
        cmd = current_refs_normal(mode, measure_dq(vmag, dpcc, dpll), FRT)
        lhs = wrap_degrees(cmd.phi_deg + dpll)
        rhs = wrap_degrees(dpcc + mode.alpha0_deg)
        assert wrap_degrees(lhs - rhs) == pytest.approx(0.0, abs=1e-9)

    @given(st.floats(0.01, 1.5), st.floats(-179.0, 179.0), st.floats(-179.0, 179.0))
    @settings(max_examples=100)
    def test_opc_magnitude_voltage_invariant(self, vmag, dpcc, dpll):
        frt = FrtParams(i_max=10.0)
        cmd = current_refs_normal(OpcMode(1.0, -0.2), measure_dq(vmag, dpcc, dpll), frt)
        assert cmd.i_mag == pytest.approx(math.sqrt(1.04), rel=1e-9)

    def test_cpf_angle_voltage_invariant(self):
        angles = set()
        for vmag, dpcc, dpll in ((1.0, 0.0, 0.0), (0.2, 50.0, -30.0), (0.0, 0.0, 90.0)):
            cmd = current_refs_normal(CpfMode(0.8, 0.3),
                                      measure_dq(vmag, dpcc, dpll), FRT)
            angles.add(round(cmd.phi_deg, 12))
        assert len(angles) == 1


class TestFaultReferences:
    def test_inside_deadband(self):
        cmd = current_refs_fault(1.0, FRT)
        assert cmd.id_ref == pytest.approx(FRT.i_max)
        assert cmd.iq_ref == pytest.approx(0.0)

    def test_half_voltage(self):
        cmd = current_refs_fault(0.5, FrtParams(k_factor=2.0, deadband=0.1, i_max=1.0))
        assert abs(cmd.iq_ref) == pytest.approx(0.8)
        assert cmd.iq_ref < 0.0  # capacitive support
        assert cmd.id_ref == pytest.approx(0.6)

    def test_collapsed_voltage_saturates(self):
        cmd = current_refs_fault(0.0, FrtParams(k_factor=2.0, i_max=1.0))
        assert abs(cmd.iq_ref) == pytest.approx(1.0)
        assert cmd.id_ref == pytest.approx(0.0)

    def test_continuity_and_circle(self):
        frt = FrtParams(k_factor=2.0, deadband=0.1, i_max=1.0)
        prev = current_refs_fault(1.1, frt)
        for v in np.linspace(1.1, 0.0, 2000):
            cmd = current_refs_fault(float(v), frt)
            assert abs(cmd.iq_ref - prev.iq_ref) < 2e-3
            assert abs(cmd.id_ref - prev.id_ref) < 4e-2
            if (1.0 - v) > frt.deadband:
                assert cmd.id_ref**2 + cmd.iq_ref**2 == pytest.approx(1.0, rel=1e-12)
            prev = cmd


class TestAngles:
    def test_phi_examples(self):
        from gflswing.vsc import CurrentCommand
        assert phi_of(CurrentCommand(1.0, 0.0, 1.0, 0.0)) == pytest.approx(0.0)
        assert phi_of(CurrentCommand(1.0, -0.2, math.sqrt(1.04), 0.0)) == pytest.approx(
            -11.309932474, rel=1e-9)
        assert phi_of(CurrentCommand(0.0, 1.0, 1.0, 0.0)) == pytest.approx(90.0)

    def test_phi_zero_current_rejected(self):
        from gflswing.vsc import CurrentCommand
        with pytest.raises(ValueError):
            phi_of(CurrentCommand(0.0, 0.0, 0.0, 0.0))

    def test_alpha0_examples(self):
        assert alpha0_of(1.0, 0.0) == pytest.approx(0.0)
        assert alpha0_of(1.0, -0.2) == pytest.approx(-11.309932474, rel=1e-9)
        assert alpha0_of(1.0, 1.0) == pytest.approx(45.0)

    def test_alpha0_requires_positive_p(self):
        with pytest.raises(ValueError):
            alpha0_of(0.0, 0.5)
        with pytest.raises(ValueError):
            OpcMode(p_ref=-1.0, q_ref=0.0)
