"""Aggregated multi-area interconnection model.

Generators are represented as per-area fleets by kind (synchronous, pv,
wtg) carrying the quantities that drive frequency response: inertia,
governor droop/deadband/headroom, and converter fast-response settings.
Network detail is reduced to tie-lines with a linear synchronizing
stiffness; everything else (voltages, impedances, topology) is out of
scope.

Models are immutable after construction and safe to share across
concurrent simulation runs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .protection import FfrResource, UflsScheme

__all__ = [
    "Governor",
    "ConverterControl",
    "GeneratorFleet",
    "Area",
    "TieLine",
    "GridModel",
    "Violation",
    "InertiaSummary",
    "system_inertia",
    "validate",
    "initial_tie_flows",
]

FLEET_KINDS = ("synchronous", "pv", "wtg")
DEADBAND_TYPES = ("step", "offset")

# Per-unit imbalance below which a model still passes the 1e-5 pu flat-run
# criterion with an order-of-magnitude margin (damping maps pu imbalance to
# pu frequency roughly one to one at D = 1).
BALANCE_TOL_PU = 1e-6


@dataclass(frozen=True)
class Governor:
    """Turbine-governor response parameters of one synchronous fleet.

    ``droop`` is on the fleet rated-MW base; ``responsive_fraction`` is the
    share of the fleet actually under governor control; ``headroom_mw`` is
    the spinning reserve the governor can deliver (defaults to the fleet's
    full rated minus committed slack when left unset).
    """

    droop: float = 0.05
    deadband_hz: float = 0.036
    deadband_type: str = "step"
    responsive_fraction: float = 1.0
    headroom_mw: float | None = None
    tg_s: float = 0.5
    tt_s: float = 7.0


@dataclass(frozen=True)
class ConverterControl:
    """Fast frequency support from a converter-based (pv/wtg) fleet.

    Synthetic inertia boosts output proportionally to the filtered rate of
    change of frequency, capped at a fraction of rated power (at most 10%).
    An optional droop adds governor-like proportional response through a
    first-order lag.  Both act only for under-frequency (boost) events.
    """

    si_gain_mw_per_hzps: float = 0.0
    si_boost_limit_frac: float = 0.05
    si_filter_s: float = 0.5
    droop: float | None = None
    response_lag_s: float = 0.3
    headroom_mw: float = 0.0


@dataclass(frozen=True)
class GeneratorFleet:
    """Aggregated per-area generation of one kind."""

    id: str
    kind: str
    rated_mw: float
    committed_mw: float
    inertia_h: float = 0.0
    gov: Governor | None = None
    conv: ConverterControl | None = None

    def __post_init__(self):
        if self.gov is not None and self.gov.headroom_mw is None:
            object.__setattr__(
                self, "gov", replace(self.gov, headroom_mw=self.rated_mw - self.committed_mw)
            )

    @property
    def kinetic_mws(self) -> float:
        """Stored kinetic energy at rated speed, MW·s."""
        return self.inertia_h * self.rated_mw


@dataclass(frozen=True)
class Area:
    """One balancing area: load, damping, fleets, and local relays."""

    id: str
    load_mw: float
    load_damping: float = 1.0
    fleets: tuple[GeneratorFleet, ...] = ()
    ufls: UflsScheme | None = None
    ffr: tuple[FfrResource, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "fleets", tuple(self.fleets))
        object.__setattr__(self, "ffr", tuple(self.ffr))

    @property
    def committed_mw(self) -> float:
        return sum(f.committed_mw for f in self.fleets)

    def committed_by_kind(self, kind: str) -> float:
        return sum(f.committed_mw for f in self.fleets if f.kind == kind)


@dataclass(frozen=True)
class TieLine:
    """Linearized tie between two areas: MW of flow per radian of angle gap."""

    from_area: str
    to_area: str
    k_sync_mw_per_rad: float
    limit_mw: float | None = None


@dataclass(frozen=True)
class GridModel:
    """Immutable interconnection model."""

    name: str
    areas: tuple[Area, ...]
    tie_lines: tuple[TieLine, ...] = ()
    f0: float = 60.0
    initial_frequency: float = 60.0

    def __post_init__(self):
        object.__setattr__(self, "areas", tuple(self.areas))
        object.__setattr__(self, "tie_lines", tuple(self.tie_lines))

    def area(self, area_id: str) -> Area:
        for a in self.areas:
            if a.id == area_id:
                return a
        raise KeyError(f"no area named {area_id!r}")

    def area_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.areas)

    @property
    def total_load_mw(self) -> float:
        return sum(a.load_mw for a in self.areas)

    @property
    def total_committed_mw(self) -> float:
        return sum(a.committed_mw for a in self.areas)


class InertiaSummary(NamedTuple):
    h_sys_s: float
    kinetic_mws: float


class Violation(NamedTuple):
    """One failed validation rule, naming the offending entity."""

    entity: str
    rule: str

    def __str__(self) -> str:
        return f"{self.entity}: {self.rule}"


def system_inertia(model: GridModel) -> InertiaSummary:
    """Rating-weighted inertia constant and total kinetic energy.

    Both are taken over committed synchronous fleets only; converter-based
    fleets carry no inertia unless synthetic inertia is configured, which
    does not enter this total.
    """
    rated = 0.0
    kinetic = 0.0
    for area in model.areas:
        for f in area.fleets:
            if f.kind == "synchronous" and f.committed_mw > 0:
                rated += f.rated_mw
                kinetic += f.kinetic_mws
    if rated <= 0:
        raise ValueError("zero-inertia system: no committed synchronous fleet")
    return InertiaSummary(h_sys_s=kinetic / rated, kinetic_mws=kinetic)


def _tie_graph_components(model: GridModel) -> list[set[str]]:
    ids = list(model.area_ids())
    parent = {i: i for i in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for line in model.tie_lines:
        if line.from_area in parent and line.to_area in parent:
            ra, rb = find(line.from_area), find(line.to_area)
            if ra != rb:
                parent[ra] = rb
    groups: dict[str, set[str]] = {}
    for i in ids:
        groups.setdefault(find(i), set()).add(i)
    return list(groups.values())


def initial_tie_flows(model: GridModel) -> tuple[np.ndarray, np.ndarray]:
    """Pre-event tie-line angles and flows carrying the scheduled interchange.

    Solves the linear stiffness system so each area's committed-minus-load
    surplus is exported over the ties; returns (angles_rad per area, flow_mw
    per tie-line, positive from->to).  The least-squares solve leaves any
    unbalanced component as a residual, which `validate` reports.
    """
    ids = list(model.area_ids())
    idx = {a: k for k, a in enumerate(ids)}
    n = len(ids)
    lap = np.zeros((n, n))
    for line in model.tie_lines:
        i, j = idx[line.from_area], idx[line.to_area]
        k = line.k_sync_mw_per_rad
        lap[i, i] += k
        lap[j, j] += k
        lap[i, j] -= k
        lap[j, i] -= k
    surplus = np.array([a.committed_mw - a.load_mw for a in model.areas])
    if n == 1 or not model.tie_lines:
        angles = np.zeros(n)
    else:
        angles, *_ = np.linalg.lstsq(lap, surplus, rcond=None)
        angles -= angles[0]  # gauge: only angle differences matter
    flows = np.array(
        [
            line.k_sync_mw_per_rad * (angles[idx[line.from_area]] - angles[idx[line.to_area]])
            for line in model.tie_lines
        ]
    )
    return angles, flows


def validate(model: GridModel) -> list[Violation]:
    """Check every type invariant plus the t=0 power-balance condition.

    Returns an empty list exactly when the model is ready for a clean
    20-second flat run; violations are data, not exceptions.
    """
    out: list[Violation] = []
    if len(model.areas) == 0:
        out.append(Violation("model", "at least one area required"))
        return out
    if not model.f0 > 0:
        out.append(Violation("model", f"nominal frequency {model.f0} must be positive"))
    if not 59.0 <= model.initial_frequency <= 61.0:
        out.append(
            Violation("model", f"initial frequency {model.initial_frequency} outside [59, 61] Hz")
        )

    ids = [a.id for a in model.areas]
    if len(set(ids)) != len(ids):
        out.append(Violation("model", "duplicate area ids"))

    for area in model.areas:
        ent = f"area {area.id}"
        if area.load_mw < 0:
            out.append(Violation(ent, f"load {area.load_mw} MW must be nonnegative"))
        if area.load_damping < 0:
            out.append(Violation(ent, f"load damping {area.load_damping} must be nonnegative"))
        if area.ufls is not None:
            out.extend(Violation(ent, msg) for msg in area.ufls.check())
        for res in area.ffr:
            out.extend(Violation(ent, msg) for msg in res.check())
        for f in area.fleets:
            out.extend(_check_fleet(area.id, f))

    for line in model.tie_lines:
        ent = f"tie {line.from_area}-{line.to_area}"
        if line.from_area == line.to_area:
            out.append(Violation(ent, "tie-line endpoints must differ"))
        for end in (line.from_area, line.to_area):
            if end not in ids:
                out.append(Violation(ent, f"endpoint {end!r} names no area"))
        if not line.k_sync_mw_per_rad > 0:
            out.append(Violation(ent, "synchronizing coefficient must be positive"))

    ties_ok = not any(v.entity.startswith("tie") for v in out)

    # t=0 balance: each tie-connected component must carry its own load, and
    # the scheduled interchange must fit within tie limits.
    scale = max(1.0, model.total_committed_mw)
    for comp in _tie_graph_components(model):
        gen = sum(a.committed_mw for a in model.areas if a.id in comp)
        load = sum(a.load_mw for a in model.areas if a.id in comp)
        if abs(gen - load) > BALANCE_TOL_PU * scale:
            names = ",".join(sorted(comp))
            out.append(
                Violation(f"areas {names}", f"power imbalance {gen - load:+.6g} MW at t=0")
            )
    if ties_ok:
        _, flows = initial_tie_flows(model)
        for line, flow in zip(model.tie_lines, flows):
            if line.limit_mw is not None and abs(flow) > line.limit_mw * (1 + 1e-9):
                out.append(
                    Violation(
                        f"tie {line.from_area}-{line.to_area}",
                        f"scheduled flow {flow:.1f} MW exceeds limit {line.limit_mw} MW",
                    )
                )
    return out


def _check_fleet(area_id: str, f: GeneratorFleet) -> list[Violation]:
    ent = f"fleet {area_id}/{f.id}"
    out: list[Violation] = []
    if f.kind not in FLEET_KINDS:
        out.append(Violation(ent, f"unknown kind {f.kind!r}"))
        return out
    if not f.rated_mw > 0:
        out.append(Violation(ent, f"rated {f.rated_mw} MW must be positive"))
    if not 0 <= f.committed_mw <= f.rated_mw * (1 + 1e-9):
        out.append(
            Violation(ent, f"committed {f.committed_mw} MW outside [0, rated={f.rated_mw}]")
        )
    if f.kind == "synchronous":
        if not f.inertia_h > 0:
            out.append(Violation(ent, "synchronous fleet must have inertia H > 0"))
        if f.conv is not None:
            out.append(Violation(ent, "converter control applies to pv/wtg fleets only"))
    else:
        if f.inertia_h != 0:
            out.append(Violation(ent, f"{f.kind} fleet must have H = 0"))
        if f.gov is not None:
            out.append(Violation(ent, f"{f.kind} fleet cannot carry a turbine governor"))
    if f.gov is not None:
        g = f.gov
        if not g.droop > 0:
            out.append(Violation(ent, f"droop {g.droop} must be positive"))
        if g.deadband_hz < 0:
            out.append(Violation(ent, f"deadband {g.deadband_hz} Hz must be nonnegative"))
        if g.deadband_type not in DEADBAND_TYPES:
            out.append(Violation(ent, f"unknown deadband type {g.deadband_type!r}"))
        if not 0 <= g.responsive_fraction <= 1:
            out.append(Violation(ent, f"responsive fraction {g.responsive_fraction} outside [0, 1]"))
        if not g.tg_s > 0 or not g.tt_s > 0:
            out.append(Violation(ent, "governor time constants must be positive"))
        slack = f.rated_mw - f.committed_mw
        if g.headroom_mw < 0:
            out.append(Violation(ent, f"headroom {g.headroom_mw} MW must be nonnegative"))
        elif g.headroom_mw > slack * (1 + 1e-9) + 1e-9:
            out.append(
                Violation(ent, f"headroom {g.headroom_mw} MW exceeds rated-committed slack {slack:.6g} MW")
            )
    if f.conv is not None:
        c = f.conv
        if not 0 <= c.si_boost_limit_frac <= 0.10:
            out.append(Violation(ent, f"synthetic-inertia boost limit {c.si_boost_limit_frac} outside [0, 0.10]"))
        if not c.si_filter_s > 0:
            out.append(Violation(ent, "synthetic-inertia filter time constant must be positive"))
        if c.si_gain_mw_per_hzps < 0:
            out.append(Violation(ent, "synthetic-inertia gain must be nonnegative"))
        if c.droop is not None and not c.droop > 0:
            out.append(Violation(ent, f"converter droop {c.droop} must be positive"))
        if not c.response_lag_s > 0:
            out.append(Violation(ent, "converter response lag must be positive"))
        if c.headroom_mw < 0:
            out.append(Violation(ent, "converter headroom must be nonnegative"))
    return out
