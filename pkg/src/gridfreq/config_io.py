"""Reading and writing the YAML configuration dialect.

One dialect covers grid models, penetration scenarios, contingencies,
protection schemes, and expansion problems.  Powers are MW, times seconds,
frequencies Hz, droop and damping per-unit.  Parsers are strict: unknown
keys, wrong types, and invariant violations raise ConfigError with the
offending field path.
"""

from __future__ import annotations

import os
from importlib import resources

import yaml

from .engine import Contingency
from .expansion import ExistingUnit, ExpansionProblem, Interface, Region
from .model import (
    Area,
    ConverterControl,
    GeneratorFleet,
    Governor,
    GridModel,
    TieLine,
    validate,
)
from .protection import FfrResource, ProtectionScheme, UflsBlock, UflsScheme, preset_names, preset_scheme
from .scenario import PenetrationTargets, RegionalWeights

__all__ = [
    "ConfigError",
    "load_system",
    "serialize",
    "load_scenario",
    "load_contingency",
    "load_protection",
    "load_expansion_problem",
    "data_text",
    "resolve_text",
    "resolve_protection",
    "named_inputs",
]


class ConfigError(ValueError):
    """Malformed configuration: carries the field path or source line."""


def _parse_yaml(text: str, label: str):
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{label}: YAML parse error{where}: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{label}: top level must be a mapping")
    return doc


class _Node:
    """A mapping plus its path, with typed strict accessors."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping")
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    def _fetch(self, key, required, default):
        self.seen.add(key)
        if key in self.data:
            return self.data[key]
        if required:
            raise ConfigError(f"{self.path}.{key}: required field missing")
        return default

    def num(self, key, required=True, default=None):
        v = self._fetch(key, required, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self.path}.{key}: expected a number, got {v!r}")
        return float(v)

    def text(self, key, required=True, default=None):
        v = self._fetch(key, required, default)
        if v is None:
            return None
        if not isinstance(v, str):
            raise ConfigError(f"{self.path}.{key}: expected text, got {v!r}")
        return v

    def flag(self, key, default):
        v = self._fetch(key, False, default)
        if not isinstance(v, bool):
            raise ConfigError(f"{self.path}.{key}: expected true/false, got {v!r}")
        return v

    def seq(self, key, required=True):
        v = self._fetch(key, required, [])
        if v is None:
            v = []
        if not isinstance(v, list):
            raise ConfigError(f"{self.path}.{key}: expected a list")
        return v

    def submap(self, key):
        v = self._fetch(key, False, None)
        if v is None:
            return None
        return _Node(v, f"{self.path}.{key}")

    def numbers(self, key, required=True):
        return [_require_num(v, f"{self.path}.{key}[{i}]") for i, v in enumerate(self.seq(key, required))]

    def close(self):
        unknown = set(self.data) - self.seen
        if unknown:
            raise ConfigError(f"{self.path}: unknown field(s) {', '.join(sorted(unknown))}")


def _require_num(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    return float(v)


# ---------------------------------------------------------------- grid model

def load_system(text: str, label: str = "model") -> GridModel:
    """Parse a grid-model document, apply defaults, and enforce invariants."""
    doc = _parse_yaml(text, label)
    model = _parse_model(doc, label)
    problems = validate(model)
    if problems:
        lines = "; ".join(str(v) for v in problems)
        raise ConfigError(f"{label}: model violates invariants: {lines}")
    return model


def _parse_model(doc: dict, label: str) -> GridModel:
    n = _Node(doc, label)
    name = n.text("name")
    f0 = n.num("f0", required=False, default=60.0)
    finit = n.num("initial_frequency", required=False, default=60.0)
    areas = tuple(
        _parse_area(_Node(a, f"{label}.areas[{i}]"))
        for i, a in enumerate(n.seq("areas"))
    )
    ties = tuple(
        _parse_tie(_Node(t, f"{label}.tie_lines[{i}]"))
        for i, t in enumerate(n.seq("tie_lines", required=False))
    )
    n.close()
    return GridModel(name=name, f0=f0, initial_frequency=finit, areas=areas, tie_lines=ties)


def _parse_area(n: _Node) -> Area:
    aid = n.text("id")
    load = n.num("load_mw")
    damping = n.num("load_damping", required=False, default=1.0)
    fleets = tuple(
        _parse_fleet(_Node(f, f"{n.path}.fleets[{i}]"))
        for i, f in enumerate(n.seq("fleets", required=False))
    )
    ufls = None
    blocks = n.seq("ufls", required=False)
    if blocks:
        ufls = _parse_ufls(blocks, f"{n.path}.ufls")
    ffr = tuple(
        _parse_ffr(_Node(r, f"{n.path}.ffr[{i}]"))
        for i, r in enumerate(n.seq("ffr", required=False))
    )
    n.close()
    return Area(id=aid, load_mw=load, load_damping=damping, fleets=fleets, ufls=ufls, ffr=ffr)


def _parse_fleet(n: _Node) -> GeneratorFleet:
    fid = n.text("id")
    kind = n.text("kind")
    rated = n.num("rated_mw")
    committed = n.num("committed_mw")
    h = n.num("inertia_h", required=False, default=0.0)
    gov = None
    gnode = n.submap("governor")
    if gnode is not None:
        gov = Governor(
            droop=gnode.num("droop", required=False, default=0.05),
            deadband_hz=gnode.num("deadband_hz", required=False, default=0.036),
            deadband_type=gnode.text("deadband_type", required=False, default="step"),
            responsive_fraction=gnode.num("responsive_fraction", required=False, default=1.0),
            headroom_mw=gnode.num("headroom_mw", required=False, default=None),
            tg_s=gnode.num("tg_s", required=False, default=0.5),
            tt_s=gnode.num("tt_s", required=False, default=7.0),
        )
        gnode.close()
    conv = None
    cnode = n.submap("converter")
    if cnode is not None:
        conv = ConverterControl(
            si_gain_mw_per_hzps=cnode.num("si_gain_mw_per_hzps", required=False, default=0.0),
            si_boost_limit_frac=cnode.num("si_boost_limit_frac", required=False, default=0.05),
            si_filter_s=cnode.num("si_filter_s", required=False, default=0.5),
            droop=cnode.num("droop", required=False, default=None),
            response_lag_s=cnode.num("response_lag_s", required=False, default=0.3),
            headroom_mw=cnode.num("headroom_mw", required=False, default=0.0),
        )
        cnode.close()
    n.close()
    return GeneratorFleet(
        id=fid, kind=kind, rated_mw=rated, committed_mw=committed,
        inertia_h=h, gov=gov, conv=conv,
    )


def _parse_tie(n: _Node) -> TieLine:
    line = TieLine(
        from_area=n.text("from"),
        to_area=n.text("to"),
        k_sync_mw_per_rad=n.num("k_sync_mw_per_rad"),
        limit_mw=n.num("limit_mw", required=False, default=None),
    )
    n.close()
    return line


def _parse_ufls(blocks: list, path: str) -> UflsScheme:
    parsed = []
    for i, b in enumerate(blocks):
        bn = _Node(b, f"{path}[{i}]")
        parsed.append(
            UflsBlock(
                setpoint_hz=bn.num("setpoint_hz"),
                shed_fraction=bn.num("shed_fraction"),
                max_trip_cycles=bn.num("max_trip_cycles"),
            )
        )
        bn.close()
    return UflsScheme(tuple(parsed))


def _parse_ffr(n: _Node) -> FfrResource:
    res = FfrResource(
        amount_mw=n.num("amount_mw"),
        trigger_hz=n.num("trigger_hz", required=False, default=59.7),
        response_cycles=n.num("response_cycles", required=False, default=30.0),
        latched=n.flag("latched", default=True),
    )
    n.close()
    return res


def serialize(model: GridModel) -> str:
    """Render a model back to the config dialect (load_system inverse)."""
    doc = {
        "name": model.name,
        "f0": model.f0,
        "initial_frequency": model.initial_frequency,
        "areas": [_area_doc(a) for a in model.areas],
        "tie_lines": [
            _drop_none(
                {
                    "from": t.from_area,
                    "to": t.to_area,
                    "k_sync_mw_per_rad": t.k_sync_mw_per_rad,
                    "limit_mw": t.limit_mw,
                }
            )
            for t in model.tie_lines
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def _area_doc(a: Area) -> dict:
    doc = {
        "id": a.id,
        "load_mw": a.load_mw,
        "load_damping": a.load_damping,
        "fleets": [_fleet_doc(f) for f in a.fleets],
    }
    if a.ufls is not None:
        doc["ufls"] = [
            {
                "setpoint_hz": b.setpoint_hz,
                "shed_fraction": b.shed_fraction,
                "max_trip_cycles": b.max_trip_cycles,
            }
            for b in a.ufls.blocks
        ]
    if a.ffr:
        doc["ffr"] = [
            {
                "amount_mw": r.amount_mw,
                "trigger_hz": r.trigger_hz,
                "response_cycles": r.response_cycles,
                "latched": r.latched,
            }
            for r in a.ffr
        ]
    return doc


def _fleet_doc(f: GeneratorFleet) -> dict:
    doc = {
        "id": f.id,
        "kind": f.kind,
        "rated_mw": f.rated_mw,
        "committed_mw": f.committed_mw,
        "inertia_h": f.inertia_h,
    }
    if f.gov is not None:
        doc["governor"] = {
            "droop": f.gov.droop,
            "deadband_hz": f.gov.deadband_hz,
            "deadband_type": f.gov.deadband_type,
            "responsive_fraction": f.gov.responsive_fraction,
            "headroom_mw": f.gov.headroom_mw,
            "tg_s": f.gov.tg_s,
            "tt_s": f.gov.tt_s,
        }
    if f.conv is not None:
        doc["converter"] = _drop_none(
            {
                "si_gain_mw_per_hzps": f.conv.si_gain_mw_per_hzps,
                "si_boost_limit_frac": f.conv.si_boost_limit_frac,
                "si_filter_s": f.conv.si_filter_s,
                "droop": f.conv.droop,
                "response_lag_s": f.conv.response_lag_s,
                "headroom_mw": f.conv.headroom_mw,
            }
        )
    return doc


# ------------------------------------------------- scenarios / contingencies

def load_scenario(text: str, label: str = "scenario"):
    """Parse a penetration-scenario document.

    Returns (name, PenetrationTargets, pv RegionalWeights | None,
    wtg RegionalWeights | None); omitted weights fall back to load share.
    """
    doc = _parse_yaml(text, label)
    n = _Node(doc, label)
    name = n.text("name")
    targets = PenetrationTargets(
        pv_frac=n.num("pv_fraction"),
        wtg_frac=n.num("wtg_fraction"),
    )
    pv_w = _parse_weights(n.submap("pv_weights"))
    wtg_w = _parse_weights(n.submap("wtg_weights"))
    n.close()
    return name, targets, pv_w, wtg_w


def _parse_weights(node: _Node | None) -> RegionalWeights | None:
    if node is None:
        return None
    weights = {}
    for key in list(node.data):
        weights[key] = node.num(key)
    node.close()
    return RegionalWeights(weights)


def load_contingency(text: str, label: str = "contingency") -> Contingency:
    doc = _parse_yaml(text, label)
    n = _Node(doc, label)
    cont = Contingency(
        name=n.text("name", required=False, default="contingency"),
        area=n.text("area"),
        delta_p_mw=n.num("delta_p_mw"),
        t_event_s=n.num("t_event_s", required=False, default=1.0),
    )
    n.close()
    if cont.t_event_s < 0:
        raise ConfigError(f"{label}.t_event_s: must be nonnegative")
    return cont


# ----------------------------------------------------------------- protection

def load_protection(text: str, label: str = "protection") -> ProtectionScheme:
    doc = _parse_yaml(text, label)
    n = _Node(doc, label)
    name = n.text("name", required=False, default="custom")
    ufls = None
    blocks = n.seq("ufls", required=False)
    if blocks:
        ufls = _parse_ufls(blocks, f"{label}.ufls")
    by_area = []
    ba = n.submap("ufls_by_area")
    if ba is not None:
        for key in list(ba.data):
            ba.seen.add(key)
            by_area.append((key, _parse_ufls(ba.data[key], f"{label}.ufls_by_area.{key}")))
        ba.close()
    ffr = []
    for i, r in enumerate(n.seq("ffr", required=False)):
        rn = _Node(r, f"{label}.ffr[{i}]")
        area = rn.text("area")
        res = FfrResource(
            amount_mw=rn.num("amount_mw"),
            trigger_hz=rn.num("trigger_hz", required=False, default=59.7),
            response_cycles=rn.num("response_cycles", required=False, default=30.0),
            latched=rn.flag("latched", default=True),
        )
        rn.close()
        ffr.append((area, res))
    n.close()
    scheme = ProtectionScheme(ufls=ufls, ufls_by_area=tuple(by_area), ffr=tuple(ffr), name=name)
    problems = scheme.check()
    if problems:
        raise ConfigError(f"{label}: invalid protection scheme: " + "; ".join(problems))
    return scheme


def serialize_protection(scheme: ProtectionScheme) -> str:
    doc: dict = {"name": scheme.name}
    if scheme.ufls is not None:
        doc["ufls"] = _ufls_doc(scheme.ufls)
    if scheme.ufls_by_area:
        doc["ufls_by_area"] = {aid: _ufls_doc(s) for aid, s in scheme.ufls_by_area}
    if scheme.ffr:
        doc["ffr"] = [
            {
                "area": aid,
                "amount_mw": r.amount_mw,
                "trigger_hz": r.trigger_hz,
                "response_cycles": r.response_cycles,
                "latched": r.latched,
            }
            for aid, r in scheme.ffr
        ]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False)


def _ufls_doc(scheme: UflsScheme) -> list:
    return [
        {
            "setpoint_hz": b.setpoint_hz,
            "shed_fraction": b.shed_fraction,
            "max_trip_cycles": b.max_trip_cycles,
        }
        for b in scheme.blocks
    ]


# ------------------------------------------------------------------ expansion

def load_expansion_problem(text: str, label: str = "problem") -> ExpansionProblem:
    doc = _parse_yaml(text, label)
    n = _Node(doc, label)
    name = n.text("name", required=False, default="expansion")
    years = []
    for i, y in enumerate(n.seq("years")):
        yn = _Node(y, f"{label}.years[{i}]")
        years.append(yn.num("discount"))
        yn.close()
    blocks = []
    for i, b in enumerate(n.seq("blocks")):
        bn = _Node(b, f"{label}.blocks[{i}]")
        blocks.append(bn.num("duration_h"))
        bn.close()
    capex = n.numbers("pv_capex_per_mw")
    if len(capex) != len(years):
        raise ConfigError(f"{label}.pv_capex_per_mw: need one value per year")
    regions = []
    for i, r in enumerate(n.seq("regions")):
        regions.append(_parse_region(_Node(r, f"{label}.regions[{i}]"), len(years), len(blocks)))
    interfaces = []
    for i, itf in enumerate(n.seq("interfaces", required=False)):
        inode = _Node(itf, f"{label}.interfaces[{i}]")
        interfaces.append(
            Interface(
                from_region=inode.text("from"),
                to_region=inode.text("to"),
                capacity_mw=inode.num("capacity_mw"),
                wheeling_price_per_mwh=inode.num("wheeling_price_per_mwh", required=False, default=0.0),
            )
        )
        inode.close()
    problem = ExpansionProblem(
        name=name,
        discount=tuple(years),
        block_hours=tuple(blocks),
        pv_capex_per_mw=tuple(capex),
        pv_fixed_om_per_mw_year=n.num("pv_fixed_om_per_mw_year", required=False, default=0.0),
        build_increment_mw=n.num("build_increment_mw", required=False, default=50.0),
        reserve_margin_frac=n.num("reserve_margin_frac", required=False, default=0.0),
        regions=tuple(regions),
        interfaces=tuple(interfaces),
    )
    n.close()
    problems = problem.check()
    if problems:
        raise ConfigError(f"{label}: invalid problem: " + "; ".join(problems))
    return problem


def _parse_region(n: _Node, n_years: int, n_blocks: int) -> Region:
    rid = n.text("id")
    load_rows = n.seq("load_mw")
    if len(load_rows) != n_years:
        raise ConfigError(f"{n.path}.load_mw: need one row per year")
    load = []
    for y, row in enumerate(load_rows):
        if not isinstance(row, list) or len(row) != n_blocks:
            raise ConfigError(f"{n.path}.load_mw[{y}]: need one value per time block")
        load.append(tuple(_require_num(v, f"{n.path}.load_mw[{y}][{b}]") for b, v in enumerate(row)))
    avail = n.numbers("solar_availability")
    if len(avail) != n_blocks:
        raise ConfigError(f"{n.path}.solar_availability: need one value per time block")
    units = []
    for i, u in enumerate(n.seq("units", required=False)):
        un = _Node(u, f"{n.path}.units[{i}]")
        units.append(
            ExistingUnit(
                id=un.text("id"),
                rated_mw=un.num("rated_mw"),
                availability=un.num("availability", required=False, default=1.0),
                heat_rate_mmbtu_per_mwh=un.num("heat_rate_mmbtu_per_mwh", required=False, default=0.0),
                fuel_price_per_mmbtu=un.num("fuel_price_per_mmbtu", required=False, default=0.0),
                var_om_per_mwh=un.num("var_om_per_mwh", required=False, default=0.0),
                fixed_om_per_mw_year=un.num("fixed_om_per_mw_year", required=False, default=0.0),
                emission_t_per_mwh=un.num("emission_t_per_mwh", required=False, default=0.0),
                emission_price_per_t=un.num("emission_price_per_t", required=False, default=0.0),
            )
        )
        un.close()
    region = Region(
        id=rid,
        land_price_per_mw=n.num("land_price_per_mw", required=False, default=0.0),
        lost_load_price_per_mwh=n.num("lost_load_price_per_mwh", required=False, default=1e4),
        portfolio_floor=n.num("portfolio_floor", required=False, default=0.0),
        build_speed_mw_per_year=n.num("build_speed_mw_per_year", required=False, default=float("inf")),
        solar_availability=tuple(avail),
        load_mw=tuple(load),
        pv_initial_mw=n.num("pv_initial_mw", required=False, default=0.0),
        units=tuple(units),
    )
    n.close()
    return region


# ------------------------------------------------------------- shipped inputs

_DATA_KINDS = ("models", "scenarios", "contingencies", "protection", "expansion", "traces")


def data_text(relpath: str) -> str:
    """Read a file shipped inside the package data directory."""
    return (resources.files("gridfreq") / "data" / relpath).read_text()


def named_inputs(kind: str) -> tuple[str, ...]:
    """Names of shipped inputs of one kind (models, scenarios, ...)."""
    if kind not in _DATA_KINDS:
        raise KeyError(f"unknown input kind {kind!r}")
    root = resources.files("gridfreq") / "data" / kind
    names = []
    for entry in root.iterdir():
        if entry.name.endswith(".yaml"):
            names.append(entry.name[:-5])
        elif entry.name.endswith(".csv"):
            names.append(entry.name[:-4])
    return tuple(sorted(names))


def resolve_text(kind: str, name_or_path: str) -> tuple[str, str]:
    """Fetch input text by file path or shipped-input name.

    Returns (text, label).  Paths win over names so local files can shadow
    shipped examples.
    """
    if os.path.exists(name_or_path):
        with open(name_or_path) as fh:
            return fh.read(), name_or_path
    suffix = ".csv" if kind == "traces" else ".yaml"
    try:
        return data_text(f"{kind}/{name_or_path}{suffix}"), f"{kind}:{name_or_path}"
    except (FileNotFoundError, KeyError, OSError):
        known = ", ".join(named_inputs(kind)) or "(none)"
        raise ConfigError(
            f"{name_or_path!r} is neither a file nor a shipped {kind[:-1]} (known: {known})"
        ) from None


def resolve_protection(spec: str, model: GridModel | None = None) -> ProtectionScheme:
    """Resolve a --protection argument: none, model, preset name, or file."""
    if spec == "none":
        return ProtectionScheme.none()
    if spec == "model":
        if model is None:
            raise ConfigError("protection 'model' needs a grid model")
        return ProtectionScheme.from_model(model)
    if spec in preset_names():
        return ProtectionScheme(ufls=preset_scheme(spec), name=spec)
    text, label = resolve_text("protection", spec)
    return load_protection(text, label)
