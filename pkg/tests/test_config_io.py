import pytest

from gridfreq.config_io import (
    ConfigError,
    data_text,
    load_contingency,
    load_expansion_problem,
    load_protection,
    load_scenario,
    load_system,
    named_inputs,
    resolve_protection,
    resolve_text,
    serialize,
    serialize_protection,
)
from gridfreq.model import ConverterControl, GeneratorFleet, Governor
from gridfreq.protection import FfrResource, ProtectionScheme, UflsBlock, UflsScheme
from gridfreq.scenario import penetration_of

MINIMAL = """
name: tiny
areas:
  - id: a
    load_mw: 100.0
    fleets:
      - id: g
        kind: synchronous
        rated_mw: 120.0
        committed_mw: 100.0
        inertia_h: 4.0
"""


class TestLoadSystem:
    def test_minimal_document_defaults(self):
        m = load_system(MINIMAL)
        assert m.f0 == 60.0
        assert m.initial_frequency == 60.0
        assert len(m.areas) == 1
        assert m.areas[0].load_damping == 1.0
        assert m.areas[0].fleets[0].gov is None

    def test_governor_defaults_applied(self):
        text = MINIMAL.replace("inertia_h: 4.0", "inertia_h: 4.0\n        governor: {}")
        g = load_system(text).areas[0].fleets[0].gov
        assert g.droop == 0.05
        assert g.deadband_hz == 0.036
        assert g.deadband_type == "step"
        assert g.tg_s == 0.5 and g.tt_s == 7.0
        assert g.headroom_mw == pytest.approx(20.0)  # rated minus committed

    def test_pv_with_inertia_rejected(self):
        text = """
name: bad
areas:
  - id: a
    load_mw: 100.0
    fleets:
      - {id: g, kind: synchronous, rated_mw: 80.0, committed_mw: 70.0, inertia_h: 4.0}
      - {id: p, kind: pv, rated_mw: 40.0, committed_mw: 30.0, inertia_h: 3.0}
"""
        with pytest.raises(ConfigError, match="H = 0"):
            load_system(text)

    def test_table_share_document(self):
        text = """
name: shares
areas:
  - id: a
    load_mw: 1000.0
    fleets:
      - {id: sync, kind: synchronous, rated_mw: 900.0, committed_mw: 800.0, inertia_h: 4.0}
      - {id: solar, kind: pv, rated_mw: 60.0, committed_mw: 50.0}
      - {id: wind, kind: wtg, rated_mw: 180.0, committed_mw: 150.0}
"""
        p = penetration_of(load_system(text))
        assert p["pv_frac"] == pytest.approx(0.05)
        assert p["wtg_frac"] == pytest.approx(0.15)
        assert p["total_renewable_frac"] == pytest.approx(0.20)

    def test_unknown_key_with_path(self):
        text = MINIMAL.replace("load_mw: 100.0", "load_mw: 100.0\n    mistery: 1")
        with pytest.raises(ConfigError, match=r"areas\[0\].*mistery"):
            load_system(text)

    def test_wrong_type_with_path(self):
        text = MINIMAL.replace("rated_mw: 120.0", "rated_mw: plenty")
        with pytest.raises(ConfigError, match=r"fleets\[0\]\.rated_mw"):
            load_system(text)

    def test_yaml_error_reports_line(self):
        with pytest.raises(ConfigError, match="line"):
            load_system("name: x\nareas:\n  - id: [unclosed\n")

    def test_imbalanced_document_rejected(self):
        text = MINIMAL.replace("load_mw: 100.0", "load_mw: 140.0")
        with pytest.raises(ConfigError, match="imbalance"):
            load_system(text)


class TestRoundTrip:
    def test_shipped_models(self, ei_model, wecc_model, ercot_model):
        for m in (ei_model, wecc_model, ercot_model):
            assert load_system(serialize(m)) == m

    def test_full_featured_model(self):
        from gridfreq.model import Area, GridModel, TieLine

        pv = GeneratorFleet(
            id="solar", kind="pv", rated_mw=300.0, committed_mw=200.0,
            conv=ConverterControl(si_gain_mw_per_hzps=50.0, droop=0.04, headroom_mw=40.0),
        )
        sync = GeneratorFleet(
            id="steam", kind="synchronous", rated_mw=1000.0, committed_mw=800.0,
            inertia_h=5.0, gov=Governor(deadband_type="offset", responsive_fraction=0.7),
        )
        a = Area(
            id="a", load_mw=1000.0, load_damping=1.2, fleets=(sync, pv),
            ufls=UflsScheme((UflsBlock(59.3, 0.05, 14.0),)),
            ffr=(FfrResource(amount_mw=80.0),),
        )
        b = Area(
            id="b", load_mw=500.0,
            fleets=(GeneratorFleet(id="gb", kind="synchronous", rated_mw=600.0,
                                   committed_mw=500.0, inertia_h=4.0, gov=Governor()),),
        )
        m = GridModel("full", areas=(a, b),
                      tie_lines=(TieLine("a", "b", 800.0, limit_mw=300.0),),
                      initial_frequency=59.974)
        assert load_system(serialize(m)) == m

    def test_protection_round_trip(self):
        scheme = ProtectionScheme(
            ufls=UflsScheme((UflsBlock(59.5, 0.07, 18.0),)),
            ufls_by_area=(("west", UflsScheme((UflsBlock(59.3, 0.05, 14.0),))),),
            ffr=(("west", FfrResource(320.0, 59.7, 30.0)),),
            name="mix",
        )
        assert load_protection(serialize_protection(scheme)) == scheme


class TestOtherLoaders:
    def test_scenario_with_weights(self):
        name, targets, pvw, wtgw = load_scenario(data_text("scenarios/ercot-scen3.yaml"))
        assert name == "ercot-scen3"
        assert targets.pv_frac == 0.45
        assert targets.wtg_frac == 0.15
        assert pvw.weights["south"] == pytest.approx(0.45)
        assert wtgw is None

    def test_contingency(self):
        c = load_contingency(data_text("contingencies/ercot-largest.yaml"))
        assert c.area == "south"
        assert c.delta_p_mw == 2740.0
        assert c.t_event_s == 16.0

    def test_negative_event_time_rejected(self):
        with pytest.raises(ConfigError, match="nonnegative"):
            load_contingency("name: x\narea: a\ndelta_p_mw: 10.0\nt_event_s: -1.0\n")

    def test_expansion_problem_loads(self):
        prob = load_expansion_problem(data_text("expansion/two-region-toy.yaml"))
        assert prob.n_years == 2
        assert prob.n_blocks == 3
        assert {r.id for r in prob.regions} == {"east", "west"}
        assert prob.check() == []

    def test_bad_protection_rejected(self):
        text = "name: bad\nufls:\n  - {setpoint_hz: 60.5, shed_fraction: 0.05, max_trip_cycles: 14}\n"
        with pytest.raises(ConfigError, match="below 60"):
            load_protection(text)


class TestResolution:
    def test_named_inputs_listing(self):
        assert "ei-like" in named_inputs("models")
        assert "two-region-toy" in named_inputs("expansion")
        with pytest.raises(KeyError):
            named_inputs("nonsense")

    def test_path_beats_name(self, tmp_path):
        p = tmp_path / "ei-like"
        p.write_text(MINIMAL)
        text, label = resolve_text("models", str(p))
        assert "tiny" in text

    def test_unknown_name_lists_known(self):
        with pytest.raises(ConfigError, match="ei-like"):
            resolve_text("models", "no-such-model")

    def test_protection_resolution(self, ercot_model):
        assert resolve_protection("none").ufls is None
        embedded = resolve_protection("model", ercot_model)
        assert embedded.ufls_by_area == ()
        preset = resolve_protection("wecc-primary")
        assert len(preset.ufls.blocks) == 5
        from_file = resolve_protection("ercot-ffr", ercot_model)
        assert sum(r.amount_mw for _, r in from_file.ffr) == pytest.approx(1400.0)
