import numpy as np
import pytest

from gridfreq.engine import (
    Contingency,
    EngineDivergenceError,
    SimConfig,
    apply_deadband,
    initial_rocof,
    simulate,
    steady_state_frequency,
    synthetic_inertia_power,
)
from gridfreq.metrics import FrequencyTrace, rocof
from gridfreq.model import Area, ConverterControl, GeneratorFleet, GridModel
from gridfreq.protection import FfrResource, ProtectionScheme, UflsBlock, UflsScheme

from conftest import make_single_area, make_twin_areas


class TestApplyDeadband:
    def test_inside_band_masked(self):
        assert apply_deadband(-0.020, 0.036) == 0.0

    def test_zero_band_identity(self):
        for df in (-0.5, -0.01, 0.0, 0.3):
            assert apply_deadband(df, 0.0) == df

    def test_step_passes_full_signal(self):
        assert apply_deadband(-0.050, 0.036, "step") == -0.050

    def test_offset_measures_from_band_edge(self):
        assert apply_deadband(-0.050, 0.036, "offset") == pytest.approx(-0.014)
        assert apply_deadband(0.050, 0.036, "offset") == pytest.approx(0.014)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            apply_deadband(0.1, -0.01)
        with pytest.raises(ValueError):
            apply_deadband(0.1, 0.01, "wedge")


class TestSyntheticInertiaPower:
    def conv(self, gain=100.0, cap=0.05, head=1e9):
        return ConverterControl(
            si_gain_mw_per_hzps=gain, si_boost_limit_frac=cap, headroom_mw=head
        )

    def test_zero_dfdt(self):
        assert synthetic_inertia_power(0.0, self.conv(), 1000.0) == 0.0

    def test_proportional_boost(self):
        assert synthetic_inertia_power(-0.2, self.conv(), 1000.0) == pytest.approx(20.0)

    def test_boost_limit_clamps(self):
        # 100 MW per Hz/s at -2 Hz/s wants 200 MW; 5% of 1,000 MW caps it at 50
        assert synthetic_inertia_power(-2.0, self.conv(), 1000.0) == pytest.approx(50.0)

    def test_over_frequency_never_negative(self):
        assert synthetic_inertia_power(0.4, self.conv(), 1000.0) == 0.0

    def test_headroom_clamps(self):
        assert synthetic_inertia_power(-2.0, self.conv(head=30.0), 1000.0) == pytest.approx(30.0)


class TestAnalyticOracles:
    def test_steady_state_zero_loss(self):
        assert steady_state_frequency(make_single_area(), 0.0) == 0.0

    def test_steady_state_hand_value(self):
        # R=0.05, Kg=1, D=1 on a common base: denominator 1/0.05 + 1 = 21 pu,
        # so a 0.01 pu loss settles at -0.01/21 * 60 Hz
        m = make_single_area(load_mw=1000.0, rated_mw=1000.0, h=4.0, kg=1.0, droop=0.05)
        dss = steady_state_frequency(m, 0.01 * 1000.0)
        assert dss == pytest.approx(-0.01 / 21 * 60, rel=1e-12)
        assert dss == pytest.approx(-0.02857, abs=5e-6)

    def test_steady_state_half_kg_no_damping(self):
        m = make_single_area(load_mw=1000.0, rated_mw=1000.0, kg=0.5, droop=0.05, damping=0.0)
        assert steady_state_frequency(m, 10.0) == pytest.approx(-0.06)

    def test_steady_state_needs_response(self):
        m = make_single_area(kg=0.0, damping=0.0)
        with pytest.raises(ValueError, match="no governor"):
            steady_state_frequency(m, 10.0)

    def test_initial_rocof_zero(self):
        assert initial_rocof(make_single_area(), 0.0) == 0.0

    def test_initial_rocof_hand_value(self):
        # 0.02 pu loss with H_sys = 4 s: -0.02 * 60 / 8 = -0.15 Hz/s
        m = make_single_area(load_mw=1000.0, rated_mw=1000.0, h=4.0)
        assert initial_rocof(m, 0.02 * 1000.0) == pytest.approx(-0.15)


class TestSimulate:
    def test_zero_contingency_flat(self):
        m = make_single_area(deadband_hz=0.036)
        res = simulate(m, Contingency.none(), None, SimConfig(0.005, 20.0, 0.1))
        assert res.events == ()
        assert np.all(res.f_hz == 60.0)
        assert np.all(res.mech_mw == 0.0)

    def test_settles_to_analytic_value(self):
        m = make_single_area()
        dp = 9.0
        res = simulate(m, Contingency("a", dp, 1.0), None, SimConfig(0.005, 120.0, 0.1))
        assert res.f_hz[-1, 0] - 60.0 == pytest.approx(
            steady_state_frequency(m, dp), abs=1e-3
        )

    def test_windowed_rocof_matches_oracle(self):
        m = make_single_area(h=4.0)
        dp = 0.01 * 900.0
        res = simulate(m, Contingency("a", dp, 1.0), None, SimConfig(0.005, 30.0, 0.1))
        tr = FrequencyTrace.from_simulation(res, t0=1.0)
        measured = rocof(tr, window_s=0.5) / 1e3
        expected = initial_rocof(m, dp)
        assert measured == pytest.approx(expected, rel=0.10)

    def test_bit_identical_repeat(self):
        m = make_twin_areas()
        cfg = SimConfig(0.005, 30.0, 0.1)
        scheme = ProtectionScheme(ufls=UflsScheme((UflsBlock(59.7, 0.05, 14),)))
        a = simulate(m, Contingency("left", 150.0, 1.0), scheme, cfg)
        b = simulate(m, Contingency("left", 150.0, 1.0), scheme, cfg)
        for fa, fb in ((a.f_hz, b.f_hz), (a.mech_mw, b.mech_mw), (a.tie_export_mw, b.tie_export_mw)):
            assert fa.tobytes() == fb.tobytes()
        assert a.events == b.events

    def test_halving_dt_barely_moves_nadir(self, ei_model, wecc_model, ercot_model):
        for m, area, dp in ((ei_model, "midwest", 4500.0),
                            (wecc_model, "southwest", 2625.0),
                            (ercot_model, "south", 2740.0)):
            cont = Contingency(area, dp, 1.0)
            coarse = simulate(m, cont, None, SimConfig(0.005, 40.0, 0.1))
            fine = simulate(m, cont, None, SimConfig(0.0025, 40.0, 0.1))
            assert abs(coarse.f_hz.min() - fine.f_hz.min()) < 1e-4

    def test_tie_symmetry_mirror(self):
        m = make_twin_areas()
        cfg = SimConfig(0.005, 40.0, 0.1)
        a = simulate(m, Contingency("left", 120.0, 1.0), None, cfg)
        b = simulate(m, Contingency("right", 120.0, 1.0), None, cfg)
        # swapping the disturbed area mirrors the traces
        assert a.f_hz[:, 0] == pytest.approx(b.f_hz[:, 1], abs=1e-12)
        assert a.f_hz[:, 1] == pytest.approx(b.f_hz[:, 0], abs=1e-12)
        # one tie line: left's export deviation is minus right's
        assert a.tie_export_mw[:, 0] == pytest.approx(-a.tie_export_mw[:, 1], abs=1e-9)

    def test_power_conservation_residual(self):
        # swing-equation bookkeeping: the sampled power channels must
        # reproduce the sampled frequency derivative
        m = make_twin_areas()
        dp = 120.0
        res = simulate(m, Contingency("left", dp, 1.0), None, SimConfig(0.005, 20.0, 0.005))
        f0 = res.f0
        x = res.f_hz - f0
        x0 = res.initial_frequency - f0
        dxdt = np.gradient(x, res.t, axis=0)
        loss = np.zeros_like(x)
        loss[res.t >= 1.0, res.area_index("left")] = dp
        damp = (res.load_mw * 1.0) * (x - x0) / f0
        rhs = res.mech_mw + res.conv_mw + res.ffr_mw + res.ufls_mw - loss - damp - res.tie_export_mw
        lhs = (2.0 * res.kinetic_mws / f0) * dxdt
        err = np.abs(lhs - rhs)
        # exclude the contingency step itself, where the finite difference
        # straddles the discontinuity
        mask = (res.t < 1.0 - 0.01) | (res.t > 1.0 + 0.01)
        assert err[mask].max() < 1e-2 * dp

    def test_droop_reduction_raises_nadir(self):
        m5 = make_single_area(deadband_hz=0.036)
        m3 = make_single_area(deadband_hz=0.036, droop=0.03)
        cont = Contingency("a", 18.0, 1.0)
        cfg = SimConfig(0.005, 60.0, 0.1)
        n5 = simulate(m5, cont, None, cfg).f_hz.min()
        n3 = simulate(m3, cont, None, cfg).f_hz.min()
        assert n3 > n5

    def test_deadband_reduction_never_lowers_nadir(self):
        m36 = make_single_area(deadband_hz=0.036)
        m16 = make_single_area(deadband_hz=0.0167)
        m3 = make_single_area(deadband_hz=0.036, droop=0.03)
        cont = Contingency("a", 18.0, 1.0)
        cfg = SimConfig(0.005, 60.0, 0.1)
        n36 = simulate(m36, cont, None, cfg).f_hz.min()
        n16 = simulate(m16, cont, None, cfg).f_hz.min()
        n3 = simulate(m3, cont, None, cfg).f_hz.min()
        assert n16 >= n36
        assert (n16 - n36) < (n3 - n36)

    def test_oversized_contingency_rejected(self):
        m = make_single_area(load_mw=900.0)
        with pytest.raises(ValueError, match="exceeds committed"):
            simulate(m, Contingency("a", 1000.0, 1.0), None, SimConfig(0.005, 10.0, 0.1))

    def test_unknown_area_rejected(self):
        with pytest.raises(ValueError, match="unknown area"):
            simulate(make_single_area(), Contingency("zz", 10.0, 1.0))

    def test_zero_inertia_area_rejected(self):
        pv = GeneratorFleet(id="p", kind="pv", rated_mw=100.0, committed_mw=100.0)
        m = GridModel("m", areas=(Area("a", 100.0, fleets=(pv,)),))
        with pytest.raises(ValueError, match="inertia"):
            simulate(m, Contingency.none(), None, SimConfig(0.005, 1.0, 0.1))

    def test_divergence_carries_last_valid_time(self):
        # absurd tie stiffness at this step size blows the integrator up
        m = make_twin_areas(k_sync=5e9)
        with pytest.raises(EngineDivergenceError) as err:
            simulate(m, Contingency("left", 100.0, 0.0), None, SimConfig(0.01, 10.0, 0.1))
        assert 0.0 <= err.value.last_valid_time_s < 10.0

    def test_initial_frequency_bias_equilibrium(self):
        # 59.974 Hz start inside the deadband is a true equilibrium
        m = make_single_area(deadband_hz=0.036, initial_frequency=59.974)
        res = simulate(m, Contingency.none(), None, SimConfig(0.005, 20.0, 0.1))
        assert np.all(np.abs(res.f_hz - 59.974) < 1e-9)


class TestConverterResponse:
    def converter_model(self, gain=200.0, droop=None, si_cap=0.10, initial=60.0):
        sync = GeneratorFleet(
            id="g", kind="synchronous", rated_mw=1000.0, committed_mw=700.0, inertia_h=4.0,
            gov=None,
        )
        pv = GeneratorFleet(
            id="pv", kind="pv", rated_mw=500.0, committed_mw=300.0,
            conv=ConverterControl(
                si_gain_mw_per_hzps=gain, si_boost_limit_frac=si_cap, si_filter_s=0.3,
                droop=droop, response_lag_s=0.2, headroom_mw=150.0,
            ),
        )
        area = Area(id="a", load_mw=1000.0, load_damping=1.0, fleets=(sync, pv))
        return GridModel("conv", areas=(area,), initial_frequency=initial)

    def test_synthetic_inertia_boosts_during_decline(self):
        cont = Contingency("a", 50.0, 1.0)
        cfg = SimConfig(0.005, 30.0, 0.1)
        with_si = simulate(self.converter_model(gain=200.0), cont, None, cfg)
        without = simulate(self.converter_model(gain=0.0), cont, None, cfg)
        assert with_si.conv_mw.max() > 5.0
        assert without.conv_mw.max() == 0.0
        assert with_si.f_hz.min() > without.f_hz.min()

    def test_converter_droop_raises_settling(self):
        cont = Contingency("a", 50.0, 1.0)
        cfg = SimConfig(0.005, 80.0, 0.1)
        with_droop = simulate(self.converter_model(gain=0.0, droop=0.05), cont, None, cfg)
        without = simulate(self.converter_model(gain=0.0), cont, None, cfg)
        assert with_droop.f_hz[-1, 0] > without.f_hz[-1, 0]
        # converter droop participates in the steady-state oracle
        dss = steady_state_frequency(self.converter_model(gain=0.0, droop=0.05), 50.0)
        assert with_droop.f_hz[-1, 0] - 60.0 == pytest.approx(dss, abs=2e-3)

    def test_converter_referenced_to_initial_point(self):
        # a below-nominal start must not make converters boost pre-event
        m = self.converter_model(gain=200.0, droop=0.05, initial=59.974)
        res = simulate(m, Contingency.none(), None, SimConfig(0.005, 20.0, 0.1))
        assert np.all(np.abs(res.f_hz - 59.974) < 1e-9)
        assert np.all(res.conv_mw == 0.0)


class TestRelayEngineIntegration:
    def test_ufls_ffr_event_sequence(self):
        m = make_single_area(load_mw=2000.0, rated_mw=2400.0, h=3.0, kg=0.4, deadband_hz=0.036)
        scheme = ProtectionScheme(
            ufls=UflsScheme((UflsBlock(59.3, 0.05, 14),)),
            ffr=(("a", FfrResource(amount_mw=60.0, trigger_hz=59.7, response_cycles=30)),),
        )
        res = simulate(m, Contingency("a", 120.0, 1.0), scheme, SimConfig(0.005, 60.0, 0.1))
        actions = [e.action for e in res.events]
        assert actions[:2] == ["ffr_trigger", "ffr_activate"]
        trig = next(e for e in res.events if e.action == "ffr_trigger")
        act = next(e for e in res.events if e.action == "ffr_activate")
        assert act.time_s - trig.time_s == pytest.approx(0.5, abs=0.005 + 1e-9)

    def test_post_shed_over_frequency(self):
        # net surplus after a big UFLS block settles the system above 60 Hz
        m = make_single_area(load_mw=2000.0, rated_mw=2400.0, h=3.0, kg=0.4, deadband_hz=0.036)
        scheme = ProtectionScheme(ufls=UflsScheme((UflsBlock(59.5, 0.10, 14),)))
        res = simulate(m, Contingency("a", 100.0, 1.0), scheme, SimConfig(0.005, 80.0, 0.1))
        shed = sum(e.amount_mw for e in res.events if e.action == "ufls_trip")
        assert shed == pytest.approx(200.0)  # 10% of 2,000 MW
        assert res.f_hz[-1, 0] > 60.0

    def test_engine_relays_match_reference_replay(self):
        """The kernel's relay automata agree with the module state machines."""
        from gridfreq.protection import RelayState, ffr_step, ufls_step

        m = make_twin_areas(k_sync=300.0, load_mw=1500.0)
        scheme = ProtectionScheme(
            ufls=UflsScheme((UflsBlock(59.75, 0.04, 9), UflsBlock(59.55, 0.06, 9))),
            ffr=(("left", FfrResource(amount_mw=40.0, trigger_hz=59.85, response_cycles=18)),),
        )
        dt = 0.005
        res = simulate(m, Contingency("left", 180.0, 0.5), scheme,
                       SimConfig(dt, 30.0, dt))
        replay = []
        states = {a: RelayState() for a in res.area_ids}
        for k, t in enumerate(res.t):
            for a in res.area_ids:
                ai = res.area_index(a)
                f_local = res.f_hz[k, ai]
                replay.extend(
                    ufls_step(states[a], scheme.scheme_for(a), f_local, t, dt,
                              float(res.load_mw[ai]), area_id=a)
                )
                replay.extend(
                    ffr_step(states[a], scheme.ffr_for(a), f_local, t, dt, area_id=a)
                )
        got = [(round(e.time_s, 9), e.relay_id, e.action, round(e.amount_mw, 6))
               for e in res.events]
        want = [(round(e.time_s, 9), e.relay_id, e.action, round(e.amount_mw, 6))
                for e in replay]
        assert sorted(got) == sorted(want)
        assert len(got) >= 3
