"""Fixed-step simulation of generation-loss contingencies.

One run integrates the per-area swing equation

    (2 H_a / f0) dx_a/dt = p_mech + p_conv - p_loss + p_shed
                           - D_a (x_a - x_init) / f0 - p_tie      [pu]

with turbine-governor lags (droop, deadband, headroom limits), optional
converter fast response (synthetic inertia and droop through a lag), linear
tie-lines carrying the scheduled interchange, and UFLS/FFR relays evaluated
at every step boundary.  x_a is the deviation of area frequency from
nominal; damping and converter response are referenced to the initial
operating point so a model that starts at 59.974 Hz is in equilibrium.

All per-unit conversions happen in `_compile`; the kernel works in MW, Hz,
and seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel
from .model import ConverterControl, GridModel, initial_tie_flows
from .protection import ProtectionScheme, RelayEvent

__all__ = [
    "Contingency",
    "SimConfig",
    "SimulationResult",
    "EngineDivergenceError",
    "simulate",
    "steady_state_frequency",
    "initial_rocof",
    "apply_deadband",
    "synthetic_inertia_power",
]

OVER_FREQUENCY_HZ = 60.5  # diagnostic flag threshold, not a relay


class EngineDivergenceError(RuntimeError):
    """A state became non-finite; carries the last valid simulation time."""

    def __init__(self, last_valid_time_s: float):
        super().__init__(f"simulation diverged after t={last_valid_time_s:.3f} s")
        self.last_valid_time_s = last_valid_time_s


@dataclass(frozen=True)
class Contingency:
    """Step loss (+) or gain (-) of generation in one area."""

    area: str | None = None
    delta_p_mw: float = 0.0
    t_event_s: float = 1.0
    name: str = "contingency"

    @classmethod
    def none(cls) -> "Contingency":
        return cls(area=None, delta_p_mw=0.0, t_event_s=0.0, name="none")


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings."""

    dt: float = 0.005
    horizon_s: float = 60.0
    output_dt: float = 0.1

    def __post_init__(self):
        if not 0 < self.dt <= self.output_dt <= self.horizon_s:
            raise ValueError("need 0 < dt <= output_dt <= horizon_s")
        if abs(self.steps_per_sample * self.dt - self.output_dt) > 1e-9:
            raise ValueError("output_dt must be an integer multiple of dt")

    @property
    def steps_per_sample(self) -> int:
        return max(1, round(self.output_dt / self.dt))

    @property
    def n_steps(self) -> int:
        return round(self.horizon_s / self.dt)


@dataclass
class SimulationResult:
    """Sampled traces, relay events, and diagnostics of one run."""

    model_name: str
    area_ids: tuple[str, ...]
    t: np.ndarray
    f_hz: np.ndarray           # (n_samples, n_areas)
    mech_mw: np.ndarray        # governor/turbine deviation from committed
    conv_mw: np.ndarray        # converter fast-response boost
    ffr_mw: np.ndarray         # active FFR load reduction
    ufls_mw: np.ndarray        # cumulative UFLS shed
    tie_export_mw: np.ndarray  # net tie export deviation from schedule
    events: tuple[RelayEvent, ...]
    load_mw: np.ndarray        # pre-event load per area
    kinetic_mws: np.ndarray    # per-area stored kinetic energy
    f0: float
    initial_frequency: float
    contingency: Contingency
    over_frequency: bool
    max_f_hz: float
    min_f_hz: float

    def area_index(self, area_id: str) -> int:
        return self.area_ids.index(area_id)

    def system_frequency(self) -> np.ndarray:
        """Inertia-weighted system frequency (center-of-inertia average)."""
        w = self.kinetic_mws / self.kinetic_mws.sum()
        return self.f_hz @ w

    def write_trace(self, path) -> None:
        """Delimited trace: time, per-area frequency, then power channels."""
        cols = ["time_s"]
        cols += [f"f_{a}" for a in self.area_ids]
        for ch in ("mech", "conv", "ffr", "ufls"):
            cols += [f"{ch}_{a}" for a in self.area_ids]
        data = np.column_stack(
            [self.t, self.f_hz, self.mech_mw, self.conv_mw, self.ffr_mw, self.ufls_mw]
        )
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(f"{v:.6f}" for v in row) + "\n")


def apply_deadband(delta_f_hz: float, deadband_hz: float, kind: str = "step") -> float:
    """Governor deadband: zero inside the band, per-kind response outside.

    "step" passes the full signal once outside the band; "offset" measures
    the signal from the band edge.
    """
    if deadband_hz < 0:
        raise ValueError("deadband must be nonnegative")
    if abs(delta_f_hz) <= deadband_hz:
        return 0.0
    if kind == "step":
        return delta_f_hz
    if kind == "offset":
        return math.copysign(abs(delta_f_hz) - deadband_hz, delta_f_hz)
    raise ValueError(f"unknown deadband kind {kind!r}")


def synthetic_inertia_power(
    filtered_dfdt_hzps: float, conv: ConverterControl, rated_mw: float
) -> float:
    """Synthetic-inertia boost in MW for a filtered df/dt, under-frequency only."""
    p = -conv.si_gain_mw_per_hzps * filtered_dfdt_hzps
    cap = min(conv.si_boost_limit_frac * rated_mw, conv.headroom_mw)
    return min(max(p, 0.0), max(cap, 0.0))


def steady_state_frequency(model: GridModel, delta_p_mw: float) -> float:
    """Closed-form post-governor frequency deviation for a generation loss.

    Linearized steady state ignoring deadbands and limits: the loss is
    shared by governor droop response (including converter droop) and load
    damping.  Returns the deviation in Hz (negative for a loss).
    """
    gain = 0.0  # MW per pu frequency deviation
    for area in model.areas:
        gain += area.load_damping * area.load_mw
        for f in area.fleets:
            if f.gov is not None and f.committed_mw > 0:
                gain += f.gov.responsive_fraction * f.rated_mw / f.gov.droop
            if f.conv is not None and f.conv.droop is not None:
                gain += f.rated_mw / f.conv.droop
    if gain <= 0:
        raise ValueError("no governor response and no load damping")
    return -delta_p_mw / gain * model.f0


def initial_rocof(model: GridModel, delta_p_mw: float) -> float:
    """Inertial rate of change of frequency right after the loss, Hz/s."""
    from .model import system_inertia

    kinetic = system_inertia(model).kinetic_mws
    return -delta_p_mw * model.f0 / (2.0 * kinetic)


def _compile(model: GridModel, protection: ProtectionScheme, contingency: Contingency,
             cfg: SimConfig):
    ids = list(model.area_ids())
    idx = {a: k for k, a in enumerate(ids)}
    na = len(ids)
    f0 = model.f0
    x0 = model.initial_frequency - f0

    kinetic = np.zeros(na)
    load0 = np.zeros(na)
    dcoef = np.zeros(na)
    for k, area in enumerate(model.areas):
        load0[k] = area.load_mw
        dcoef[k] = area.load_damping * area.load_mw / f0
        for f in area.fleets:
            if f.kind == "synchronous" and f.committed_mw > 0:
                kinetic[k] += f.kinetic_mws
    for k, area in enumerate(model.areas):
        if kinetic[k] <= 0:
            raise ValueError(
                f"area {area.id!r} has no committed synchronous inertia; "
                "the swing equation needs H > 0 in every area"
            )
    a_c0 = f0 / (2.0 * kinetic)

    govs = []
    for k, area in enumerate(model.areas):
        for f in area.fleets:
            if f.gov is not None and f.committed_mw > 0:
                govs.append((k, f))
    ng = len(govs)
    g_area = np.array([k for k, _ in govs], dtype=np.int64)
    g_par = np.zeros((max(ng, 1), 7))
    g_dbkind = np.zeros(max(ng, 1), dtype=np.int64)
    for i, (k, f) in enumerate(govs):
        g = f.gov
        g_par[i, 0] = f.rated_mw
        g_par[i, 1] = g.responsive_fraction / g.droop
        g_par[i, 2] = g.deadband_hz
        g_par[i, 3] = 1.0 / g.tg_s
        g_par[i, 4] = 1.0 / g.tt_s
        g_par[i, 5] = -f.committed_mw / f.rated_mw
        g_par[i, 6] = g.headroom_mw / f.rated_mw
        g_dbkind[i] = 0 if g.deadband_type == "step" else 1
    g_par = g_par[:ng]
    g_dbkind = g_dbkind[:ng]

    convs = []
    for k, area in enumerate(model.areas):
        for f in area.fleets:
            if f.conv is not None:
                convs.append((k, f))
    nc = len(convs)
    c_area = np.array([k for k, _ in convs], dtype=np.int64)
    c_par = np.zeros((max(nc, 1), 6))
    for j, (k, f) in enumerate(convs):
        c = f.conv
        c_par[j, 0] = c.si_gain_mw_per_hzps
        c_par[j, 1] = c.si_boost_limit_frac * f.rated_mw
        c_par[j, 2] = 1.0 / c.si_filter_s
        c_par[j, 3] = f.rated_mw / c.droop if c.droop else 0.0
        c_par[j, 4] = 1.0 / c.response_lag_s
        c_par[j, 5] = c.headroom_mw
    c_par = c_par[:nc]

    angles0, flows0 = initial_tie_flows(model)
    # standing per-area mismatch after the ties carry what they can; zero
    # for validated models, drives the drift the flat run looks for otherwise
    export0 = np.zeros(na)
    for line, flow in zip(model.tie_lines, flows0):
        export0[idx[line.from_area]] += flow
        export0[idx[line.to_area]] -= flow
    pinj0 = np.array([a.committed_mw for a in model.areas]) - load0 - export0
    nl = len(model.tie_lines)
    l_from = np.array([idx[t.from_area] for t in model.tie_lines], dtype=np.int64)
    l_to = np.array([idx[t.to_area] for t in model.tie_lines], dtype=np.int64)
    l_par = np.zeros((max(nl, 1), 3))
    for l, line in enumerate(model.tie_lines):
        l_par[l, 0] = line.k_sync_mw_per_rad
        l_par[l, 1] = line.limit_mw if line.limit_mw is not None else np.inf
        l_par[l, 2] = flows0[l]
    l_par = l_par[:nl]

    # relays, flattened over areas
    u_rows = []
    for k, area in enumerate(model.areas):
        scheme = protection.scheme_for(area.id)
        if scheme is None:
            continue
        for b, block in enumerate(scheme.blocks):
            u_rows.append((k, block.setpoint_hz, block.shed_fraction * area.load_mw,
                           _steps_for(block.trip_time_s, cfg.dt),
                           f"ufls:{area.id}:{b + 1}"))
    r_rows = []
    ffr_count: dict[str, int] = {}
    for aid, res in protection.ffr:
        if aid not in idx:
            raise ValueError(f"FFR resource bound to unknown area {aid!r}")
        ffr_count[aid] = ffr_count.get(aid, 0) + 1
        r_rows.append((idx[aid], res.trigger_hz, res.amount_mw,
                       _steps_for(res.response_time_s, cfg.dt),
                       f"ffr:{aid}:{ffr_count[aid]}"))

    nu, nf = len(u_rows), len(r_rows)
    u_area = np.array([r[0] for r in u_rows], dtype=np.int64)
    u_set = np.array([r[1] for r in u_rows], dtype=np.float64)
    u_shed = np.array([r[2] for r in u_rows], dtype=np.float64)
    u_steps = np.array([r[3] for r in u_rows], dtype=np.int64)
    u_ids = [r[4] for r in u_rows]
    r_area = np.array([r[0] for r in r_rows], dtype=np.int64)
    r_trig = np.array([r[1] for r in r_rows], dtype=np.float64)
    r_amount = np.array([r[2] for r in r_rows], dtype=np.float64)
    r_delay = np.array([r[3] for r in r_rows], dtype=np.int64)
    r_ids = [r[4] for r in r_rows]

    if contingency.area is None or contingency.delta_p_mw == 0.0:
        cont_area, cont_step, cont_mw = -1, 0, 0.0
    else:
        if contingency.area not in idx:
            raise ValueError(f"contingency names unknown area {contingency.area!r}")
        committed = model.area(contingency.area).committed_mw
        if abs(contingency.delta_p_mw) > committed * (1 + 1e-9):
            raise ValueError(
                f"contingency {contingency.delta_p_mw} MW exceeds committed "
                f"generation {committed:.1f} MW of area {contingency.area!r}"
            )
        cont_area = idx[contingency.area]
        cont_step = _steps_for(contingency.t_event_s, cfg.dt)
        cont_mw = float(contingency.delta_p_mw)

    # initial state: equilibrium at the model's initial frequency
    y0 = np.zeros(2 * na + 2 * ng + 2 * nc)
    y0[:na] = x0
    off_w = 2 * na + 2 * ng
    y0[off_w:off_w + nc] = x0  # washout settled, filtered df/dt = 0

    return dict(
        na=na, ng=ng, nc=nc, f0=f0, x0=x0, y0=y0, a_c0=a_c0, a_dcoef=dcoef,
        pinj0=pinj0, load0=load0, kinetic=kinetic,
        cont_area=cont_area, cont_step=cont_step, cont_mw=cont_mw,
        g_area=g_area, g_par=g_par, g_dbkind=g_dbkind,
        c_area=c_area, c_par=c_par,
        l_from=l_from, l_to=l_to, l_par=l_par,
        u_area=u_area, u_set=u_set, u_shed=u_shed, u_steps=u_steps, u_ids=u_ids,
        r_area=r_area, r_trig=r_trig, r_amount=r_amount, r_delay=r_delay, r_ids=r_ids,
    )


def _steps_for(duration_s: float, dt: float) -> int:
    return max(0, math.ceil(duration_s / dt - 1e-9))


def simulate(
    model: GridModel,
    contingency: Contingency | None = None,
    protection: ProtectionScheme | None = None,
    cfg: SimConfig | None = None,
) -> SimulationResult:
    """Run one contingency through the model and return sampled traces.

    Deterministic: identical inputs give bit-identical traces.  The model
    is expected to pass `validate` and the flat-run check; structural
    problems (zero-inertia areas, unknown contingency area, an oversized
    loss) raise ValueError, while a plain power imbalance simply shows up
    as drift.  Raises EngineDivergenceError if any state goes non-finite.
    """
    contingency = contingency if contingency is not None else Contingency.none()
    protection = protection if protection is not None else ProtectionScheme.none()
    cfg = cfg if cfg is not None else SimConfig()
    problems = protection.check()
    if problems:
        raise ValueError("invalid protection scheme: " + "; ".join(problems))

    p = _compile(model, protection, contingency, cfg)
    (out_t, out_f, out_mech, out_conv, out_ffr, out_ufls, out_exp,
     ev_time, ev_kind, ev_idx, ev_mw, status, last_valid, max_x, min_x) = _kernel.run_sim(
        cfg.n_steps, cfg.dt, cfg.steps_per_sample,
        p["na"], p["ng"], p["nc"], p["f0"], p["x0"],
        p["y0"], p["a_c0"], p["a_dcoef"], p["pinj0"],
        p["cont_area"], p["cont_step"], p["cont_mw"],
        p["g_area"], p["g_par"], p["g_dbkind"],
        p["c_area"], p["c_par"],
        p["l_from"], p["l_to"], p["l_par"],
        p["u_area"], p["u_set"], p["u_shed"], p["u_steps"],
        p["r_area"], p["r_trig"], p["r_amount"], p["r_delay"],
    )
    if status != 0:
        raise EngineDivergenceError(float(last_valid))

    actions = {0: "ufls_trip", 1: "ffr_trigger", 2: "ffr_activate"}
    events = tuple(
        RelayEvent(
            time_s=float(ev_time[i]),
            relay_id=(p["u_ids"][ev_idx[i]] if ev_kind[i] == 0 else p["r_ids"][ev_idx[i]]),
            action=actions[int(ev_kind[i])],
            amount_mw=float(ev_mw[i]),
        )
        for i in range(len(ev_time))
    )
    max_f = p["f0"] + float(max_x)
    min_f = p["f0"] + float(min_x)
    return SimulationResult(
        model_name=model.name,
        area_ids=model.area_ids(),
        t=out_t,
        f_hz=out_f,
        mech_mw=out_mech,
        conv_mw=out_conv,
        ffr_mw=out_ffr,
        ufls_mw=out_ufls,
        tie_export_mw=out_exp,
        events=events,
        load_mw=p["load0"],
        kinetic_mws=p["kinetic"],
        f0=p["f0"],
        initial_frequency=model.initial_frequency,
        contingency=contingency,
        over_frequency=max_f > OVER_FREQUENCY_HZ,
        max_f_hz=max_f,
        min_f_hz=min_f,
    )
