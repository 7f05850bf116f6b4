"""Batch front door: run, sweep, calibrate, expand, and check from files.

Inputs are file paths or names of shipped examples (`gridfreq run --model
ei-like --contingency ei-largest ...`).  All outputs are plain delimited
text or YAML with fixed formatting, so repeated runs produce byte-identical
artifacts.

Exit codes: 0 ok, 1 input error, 2 numerical failure, 3 infeasible.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .calibration import CalibrationBounds, calibrate
from .config_io import (
    ConfigError,
    load_contingency,
    load_expansion_problem,
    load_scenario,
    load_system,
    named_inputs,
    resolve_protection,
    resolve_text,
    serialize,
)
from .engine import Contingency, EngineDivergenceError, SimConfig, simulate
from .expansion import InfeasibleProblemError
from .expansion import solve as solve_expansion
from .metrics import FrequencyTrace, MetricsReport, read_trace
from .model import validate
from .protection import shed_ledger, write_events
from .scenario import ScenarioError, build_scenario, flat_run_check

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
EXIT_INFEASIBLE = 3

SWEEP_KEYS = ("droop", "deadband_hz", "kg")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits 2 on usage errors; that's an input error here
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, FileNotFoundError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except EngineDivergenceError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InfeasibleProblemError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gridfreq",
        description="Frequency-response studies on desk-scale interconnection models.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_sim_flags(sp, scenario_plural=False):
        sp.add_argument("--model", required=True, help="model file or shipped name")
        if scenario_plural:
            sp.add_argument("--scenario", action="append", default=[],
                            help="scenario file/name; repeat for several sweep points")
        else:
            sp.add_argument("--scenario", default=None, help="scenario file or shipped name")
        sp.add_argument("--contingency", required=True, help="contingency file or shipped name")
        sp.add_argument("--protection", default="model",
                        help="none | model | preset name | file (default: model)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--dt", type=float, default=0.005)
        sp.add_argument("--horizon", type=float, default=90.0)
        sp.add_argument("--output-dt", type=float, default=0.1)
        sp.add_argument("--format", choices=("csv", "table"), default="table",
                        help="comparison/report table format")

    sp = sub.add_parser("run", help="one contingency run: trace, metrics, shed ledger")
    add_sim_flags(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="scenario/parameter sweep with a comparison table")
    add_sim_flags(sp, scenario_plural=True)
    sp.add_argument("--override", action="append", default=[],
                    help="governor override sweep, e.g. droop=0.05,0.03 "
                         f"(keys: {', '.join(SWEEP_KEYS)})")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("calibrate", help="tune inertia/governor knobs to a measured trace")
    sp.add_argument("--model", required=True)
    sp.add_argument("--measured", required=True, help="trace file or shipped name")
    sp.add_argument("--contingency", required=True)
    sp.add_argument("--bounds", action="append", default=[],
                    help="knob bounds lo:hi, e.g. inertia_scale=0.5:2")
    sp.add_argument("--area", default=None,
                    help="score against this area's frequency instead of the system average")
    sp.add_argument("--out", default="out")
    sp.add_argument("--dt", type=float, default=0.005)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("expand", help="solve a PV capacity-expansion problem")
    sp.add_argument("--problem", required=True, help="problem file or shipped name")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("check", help="validate a model and run the 20 s flat-run check")
    sp.add_argument("--model", required=True)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("inputs", help="list shipped example inputs")
    sp.set_defaults(func=cmd_inputs)
    return p


def _load_model(spec: str):
    return load_system(*resolve_text("models", spec))


def _load_contingency(spec: str) -> Contingency:
    if spec == "none":
        return Contingency.none()
    return load_contingency(*resolve_text("contingencies", spec))


def _apply_scenario(model, spec: str | None):
    if spec is None or spec == "none":
        return model, "base"
    name, targets, pvw, wtgw = load_scenario(*resolve_text("scenarios", spec))
    return build_scenario(model, targets, pvw, wtgw), name


def _apply_overrides(model, overrides: dict[str, float]):
    if not overrides:
        return model
    gov_kw = {}
    if "droop" in overrides:
        gov_kw["droop"] = overrides["droop"]
    if "deadband_hz" in overrides:
        gov_kw["deadband_hz"] = overrides["deadband_hz"]
    if "kg" in overrides:
        gov_kw["responsive_fraction"] = overrides["kg"]
    areas = []
    for a in model.areas:
        fleets = tuple(
            replace(f, gov=replace(f.gov, **gov_kw)) if f.gov is not None else f
            for f in a.fleets
        )
        areas.append(replace(a, fleets=fleets))
    return replace(model, areas=tuple(areas))


def _sim_config(args) -> SimConfig:
    return SimConfig(dt=args.dt, horizon_s=args.horizon, output_dt=args.output_dt)


def _write_yaml(path: Path, doc) -> None:
    path.write_text(yaml.safe_dump(doc, sort_keys=True, default_flow_style=False))


def _run_report(result, contingency) -> tuple[MetricsReport, dict]:
    trace = FrequencyTrace.from_simulation(result)
    rep = MetricsReport.from_trace(trace, delta_p_mw=contingency.delta_p_mw or None)
    led = shed_ledger(result)
    doc = rep.to_doc()
    doc["shed_ledger"] = {
        "ffr_mw": led.ffr_mw,
        "ufls_mw": led.ufls_mw,
        "ufls_fraction": led.ufls_fraction,
    }
    doc["diagnostics"] = {
        "over_frequency": bool(result.over_frequency),
        "max_f_hz": float(result.max_f_hz),
        "min_f_hz": float(result.min_f_hz),
    }
    return rep, doc


def cmd_check(args) -> int:
    model = load_system(*resolve_text("models", args.model))
    problems = validate(model)
    if problems:
        for v in problems:
            print(f"violation: {v}")
        return EXIT_INPUT
    report = flat_run_check(model)
    print(f"validate: ok ({len(model.areas)} areas, {model.total_committed_mw:.0f} MW committed)")
    print(f"flat-run: max |df| = {report.max_abs_dev_pu:.3e} pu over 20 s -> "
          f"{'pass' if report.passed else 'FAIL'}")
    if not report.passed:
        if report.diagnostics:
            print(f"diagnostics: {report.diagnostics}")
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_run(args) -> int:
    base = _load_model(args.model)
    model, scen_name = _apply_scenario(base, args.scenario)
    cont = _load_contingency(args.contingency)
    protection = resolve_protection(args.protection, model)
    cfg = _sim_config(args)

    result = simulate(model, cont, protection, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.write_trace(out / "trace.csv")
    write_events(result.events, out / "events.csv")
    rep, doc = _run_report(result, cont)
    doc["inputs"] = {
        "model": model.name,
        "scenario": scen_name,
        "contingency": cont.name,
        "protection": protection.name,
    }
    _write_yaml(out / "metrics.yaml", doc)
    lines = [f"{k:28s} {v}" for k, v in sorted(doc.items()) if not isinstance(v, dict)]
    (out / "metrics.txt").write_text("\n".join(lines) + "\n")

    print(f"run: {model.name} / {scen_name} / {cont.name} / protection={protection.name}")
    print(f"  nadir {rep.nadir_hz:.4f} Hz at t={rep.t_nadir_s:.1f} s")
    if rep.rocof_mhz_per_s is not None:
        print(f"  rocof {rep.rocof_mhz_per_s:.1f} mHz/s")
    if rep.settling_hz is not None:
        print(f"  settling {rep.settling_hz:.4f} Hz")
    if rep.nerc_response_mw_per_0p1hz is not None:
        print(f"  frequency response {rep.nerc_response_mw_per_0p1hz:.0f} MW/0.1Hz")
    led = doc["shed_ledger"]
    print(f"  shed: ffr {led['ffr_mw']:.0f} MW, ufls {led['ufls_mw']:.0f} MW "
          f"({100 * led['ufls_fraction']:.2f}% of load)")
    print(f"  artifacts in {out}/")
    return EXIT_OK


def _parse_override_axes(specs: list[str]) -> list[tuple[str, list[float]]]:
    axes = []
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(f"override {spec!r} must look like key=v1,v2")
        key, _, vals = spec.partition("=")
        if key not in SWEEP_KEYS:
            raise ConfigError(f"override key {key!r} not one of {', '.join(SWEEP_KEYS)}")
        axes.append((key, [float(v) for v in vals.split(",") if v != ""]))
    return axes


def cmd_sweep(args) -> int:
    base = _load_model(args.model)
    cont = _load_contingency(args.contingency)
    cfg = _sim_config(args)
    scenarios = args.scenario or [None]
    axes = _parse_override_axes(args.override)

    def scenario_label(spec):
        if spec is None:
            return "base"
        try:
            name, *_ = load_scenario(*resolve_text("scenarios", str(spec)))
            return name
        except ConfigError:
            return str(spec)

    points: list[tuple[str, str | None, dict[str, float]]] = []
    for scen in scenarios:
        combos = [{}]
        for key, values in axes:
            combos = [dict(c, **{key: v}) for c in combos for v in values]
        for combo in combos:
            label = scenario_label(scen)
            if combo:
                label += "+" + ",".join(f"{k}={v:g}" for k, v in combo.items())
            points.append((label, scen, combo))
    if len(points) < 2:
        raise ConfigError("sweep needs at least 2 points (scenarios and/or override values)")

    out = Path(args.out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    rows = []
    for label, scen, combo in points:
        try:
            model, _ = _apply_scenario(base, scen)
            model = _apply_overrides(model, combo)
            protection = resolve_protection(args.protection, model)
            result = simulate(model, cont, protection, cfg)
            rep, doc = _run_report(result, cont)
            led = doc["shed_ledger"]
            rows.append({
                "id": label,
                "nadir_hz": f"{rep.nadir_hz:.6f}",
                "t_nadir_s": f"{rep.t_nadir_s:.6f}",
                "rocof_mhz_per_s": "" if rep.rocof_mhz_per_s is None else f"{rep.rocof_mhz_per_s:.6f}",
                "settling_hz": "" if rep.settling_hz is None else f"{rep.settling_hz:.6f}",
                "nerc_mw_per_0p1hz": "" if rep.nerc_response_mw_per_0p1hz is None
                else f"{rep.nerc_response_mw_per_0p1hz:.6f}",
                "ffr_mw": f"{led['ffr_mw']:.6f}",
                "ufls_mw": f"{led['ufls_mw']:.6f}",
                "status": "ok",
            })
            safe = label.replace("/", "_").replace("=", "-").replace(",", "_").replace("+", "_")
            result.write_trace(out / "runs" / f"{safe}-trace.csv")
        except (EngineDivergenceError, ScenarioError, ValueError) as e:
            reason = str(e).replace(",", ";")
            rows.append({"id": label, "nadir_hz": "", "t_nadir_s": "", "rocof_mhz_per_s": "",
                         "settling_hz": "", "nerc_mw_per_0p1hz": "", "ffr_mw": "", "ufls_mw": "",
                         "status": f"failed: {reason}"})

    header = ["id", "nadir_hz", "t_nadir_s", "rocof_mhz_per_s", "settling_hz",
              "nerc_mw_per_0p1hz", "ffr_mw", "ufls_mw", "status"]
    csv_lines = [",".join(header)] + [",".join(r[h] for h in header) for r in rows]
    (out / "sweep.csv").write_text("\n".join(csv_lines) + "\n")
    if args.format == "table":
        widths = [max(len(h), max(len(r[h]) for r in rows)) for h in header]
        table = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
        table += ["  ".join(r[h].ljust(w) for h, w in zip(header, widths)).rstrip() for r in rows]
        (out / "sweep.txt").write_text("\n".join(table) + "\n")
        print("\n".join(table))
    else:
        print("\n".join(csv_lines))
    print(f"sweep: {len(rows)} runs -> {out}/sweep.csv")
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_NUMERICAL


def _parse_bounds(specs: list[str]) -> CalibrationBounds:
    kw = {}
    names = {"inertia_scale", "kg", "deadband_hz"}
    for spec in specs:
        key, _, rng = spec.partition("=")
        if key not in names or ":" not in rng:
            raise ConfigError(f"bounds {spec!r} must look like knob=lo:hi "
                              f"(knobs: {', '.join(sorted(names))})")
        lo, _, hi = rng.partition(":")
        kw[key] = (float(lo), float(hi))
    return CalibrationBounds(**kw)


def cmd_calibrate(args) -> int:
    model = _load_model(args.model)
    cont = _load_contingency(args.contingency)
    if cont.area is None:
        raise ConfigError("calibration needs a nonzero contingency")
    path = args.measured
    text, _ = resolve_text("traces", path)
    # resolve_text returns file text; read_trace wants a path, so shipped
    # traces are staged through the output directory
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if Path(path).exists():
        trace_path = Path(path)
    else:
        trace_path = out / f"{path}.csv"
        trace_path.write_text(text)
    measured = read_trace(trace_path, t0=cont.t_event_s)
    bounds = _parse_bounds(args.bounds)
    span = float(measured.t[-1] - measured.t[0])
    cfg = SimConfig(dt=args.dt, horizon_s=span, output_dt=measured.dt)

    try:
        result = calibrate(model, measured, cont, bounds=bounds, cfg=cfg,
                           trace_area=args.area)
    except RuntimeError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL

    (out / "calibration.txt").write_text(result.report_text())
    _write_yaml(out / "calibration.yaml", {
        "best": {"inertia_scale": result.best.inertia_scale,
                 "kg": result.best.kg,
                 "deadband_hz": result.best.deadband_hz},
        "objective": result.objective_value,
        "initial_objective": result.initial_objective,
        "evaluations": result.n_evaluations,
        "mismatch": {"nadir_hz": result.mismatch.nadir_hz,
                     "rocof_mhz_per_s": result.mismatch.rocof_mhz_per_s,
                     "settling_hz": result.mismatch.settling_hz},
    })
    from .calibration import apply_knobs

    (out / "tuned-model.yaml").write_text(serialize(apply_knobs(model, result.best)))
    print(result.report_text())
    print(f"artifacts in {out}/")
    return EXIT_OK


def cmd_expand(args) -> int:
    problem = load_expansion_problem(*resolve_text("expansion", args.problem))
    solution = solve_expansion(problem)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    plan, cost, cert = solution
    builds_doc = {f"{rid}/y{y}": mw for (rid, y), mw in sorted(plan.pv_build_mw.items())}
    _write_yaml(out / "expansion.yaml", {
        "problem": problem.name,
        "builds_mw": builds_doc,
        "dispatch_mw": {f"{u}/y{y}/b{b}": v for (u, y, b), v in sorted(plan.dispatch_mw.items())},
        "pv_output_mw": {f"{r}/y{y}/b{b}": v for (r, y, b), v in sorted(plan.pv_output_mw.items())},
        "flows_mw": {f"i{i}/y{y}/b{b}": v for (i, y, b), v in sorted(plan.flow_mw.items())},
        "unserved_mwh": {f"{r}/y{y}/b{b}": v for (r, y, b), v in sorted(plan.unserved_mwh.items())},
        "cost_breakdown": cost.to_doc(),
        "certificate": {"optimal_cost": cert.optimal_cost, "lower_bound": cert.lower_bound,
                        "gap": cert.gap, "nodes_explored": cert.nodes_explored},
    })

    lines = [f"expansion plan for {problem.name}", ""]
    lines.append("builds (MW per region-year):")
    for r in problem.regions:
        row = "  ".join(f"y{y}: {plan.pv_build_mw.get((r.id, y), 0.0):8.1f}"
                        for y in range(problem.n_years))
        lines.append(f"  {r.id:12s} {row}")
    lines.append("")
    lines.append("dispatch energy by block (GWh, all years):")
    for b in range(problem.n_blocks):
        tot = sum(plan.dispatch_mw.get((u.id, y, b), 0.0) * problem.block_hours[b]
                  for r in problem.regions for u in r.units for y in range(problem.n_years))
        pv = sum(plan.pv_output_mw.get((r.id, y, b), 0.0) * problem.block_hours[b]
                 for r in problem.regions for y in range(problem.n_years))
        lines.append(f"  block {b}: thermal {tot / 1e3:10.1f}  pv {pv / 1e3:10.1f}")
    lines.append("")
    lines.append("cost breakdown (the seven objective terms):")
    for k, v in cost.to_doc().items():
        lines.append(f"  {k:14s} {v:16,.0f}")
    lines.append("")
    lines.append(f"certificate: gap {cert.gap:g}, {cert.nodes_explored} nodes explored")
    (out / "expansion.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"artifacts in {out}/")
    return EXIT_OK


def read_sweep(path) -> list[dict]:
    """Read back a sweep comparison table written by `cmd_sweep`."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = []
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append(dict(zip(header, parts)))
    return rows


def cmd_inputs(args) -> int:
    for kind in ("models", "scenarios", "contingencies", "protection", "expansion", "traces"):
        print(f"{kind}: {', '.join(named_inputs(kind))}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
