"""Frequency response versus instantaneous PV penetration.

Rebuilds each shipped model at the four study scenarios (5/25/45/65% PV,
all with 15% wind), applies the model's largest shipped contingency with
relays off, and tabulates nadir, ROCOF, settling frequency, and the
MW-per-0.1-Hz frequency-response metric. The decline of that metric is
then checked against the recommended interconnection values.
"""

from pathlib import Path

from gridfreq import (
    MetricsReport,
    FrequencyTrace,
    compliance_check,
    load_contingency,
    load_scenario,
    load_system,
    simulate,
)
from gridfreq.config_io import resolve_text
from gridfreq.engine import SimConfig
from gridfreq.scenario import build_scenario, penetration_of

CASES = {
    "ei-like": ("ei-largest", [f"table2-scen{i}" for i in (1, 2, 3, 4)], 1015.0),
    "wecc-like": ("wecc-largest", [f"table2-scen{i}" for i in (1, 2, 3, 4)], 906.0),
    "ercot-like": ("ercot-largest", [f"ercot-scen{i}" for i in (1, 2, 3, 4)], 471.0),
}
CFG = SimConfig(dt=0.005, horizon_s=90.0, output_dt=0.1)

out_dir = Path("demo-out/penetration-trends")
out_dir.mkdir(parents=True, exist_ok=True)

for name, (cont_name, scen_names, threshold) in CASES.items():
    base = load_system(*resolve_text("models", name))
    cont = load_contingency(*resolve_text("contingencies", cont_name))
    print(f"=== {name}: {cont.delta_p_mw:,.0f} MW loss in {cont.area!r}")
    print(f"{'scenario':14s} {'pv':>5s} {'nadir Hz':>9s} {'rocof mHz/s':>12s} "
          f"{'settle Hz':>10s} {'MW/0.1Hz':>9s}")
    rows = []
    for scen_name in scen_names:
        _, targets, pvw, wtgw = load_scenario(*resolve_text("scenarios", scen_name))
        model = build_scenario(base, targets, pvw, wtgw)
        res = simulate(model, cont, None, CFG)
        trace = FrequencyTrace.from_simulation(res)
        rep = MetricsReport.from_trace(trace, delta_p_mw=cont.delta_p_mw)
        pen = penetration_of(model)
        print(f"{scen_name:14s} {pen['pv_frac']:5.0%} {rep.nadir_hz:9.3f} "
              f"{rep.rocof_mhz_per_s:12.1f} {rep.settling_hz:10.3f} "
              f"{rep.nerc_response_mw_per_0p1hz:9.0f}")
        rows.append((scen_name, pen["pv_frac"], rep))
        res.write_trace(out_dir / f"{name}-{scen_name}.csv")

    last = rows[-1][2].nerc_response_mw_per_0p1hz
    comp = compliance_check(last, threshold)
    status = "meets" if comp.passed else "misses"
    print(f"  at 65% PV the metric {status} the {threshold:.0f} MW/0.1Hz recommendation "
          f"({comp.margin_mw_per_0p1hz:+.0f})")
    print()

print(f"plot-ready traces in {out_dir}/")
