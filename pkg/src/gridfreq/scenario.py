"""Build target-penetration scenarios from a base model.

Displacement rule: every synchronous fleet is scaled down proportionally
(rated, committed, and governor headroom together, i.e. units are
decommitted at constant loading), so aggregate inertia and governor
response shrink with the synchronous share.  New PV capacity is placed per
regional weights; WTG defaults to load-share placement.  Total committed
generation and per-area loads are preserved exactly; tie-lines carry the
resulting interchange.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from .engine import Contingency, EngineDivergenceError, SimConfig, simulate
from .model import GeneratorFleet, GridModel

__all__ = [
    "PenetrationTargets",
    "RegionalWeights",
    "ScenarioError",
    "FlatRunReport",
    "build_scenario",
    "penetration_of",
    "flat_run_check",
    "FLAT_RUN_LIMIT_PU",
]

FLAT_RUN_LIMIT_PU = 1e-5


class ScenarioError(ValueError):
    """Infeasible targets or weights that name unknown areas."""


@dataclass(frozen=True)
class PenetrationTargets:
    """Instantaneous penetration shares of committed output."""

    pv_frac: float
    wtg_frac: float

    def __post_init__(self):
        if not (0 <= self.pv_frac <= 1 and 0 <= self.wtg_frac <= 1):
            raise ScenarioError("penetration fractions must lie in [0, 1]")
        if self.pv_frac + self.wtg_frac >= 1:
            raise ScenarioError("some synchronous generation must remain (pv + wtg < 1)")


@dataclass(frozen=True)
class RegionalWeights:
    """Nonnegative per-area placement weights, normalized to sum to one."""

    weights: Mapping[str, float]

    def __post_init__(self):
        if not self.weights:
            raise ScenarioError("weights must name at least one area")
        if any(w < 0 for w in self.weights.values()):
            raise ScenarioError("weights must be nonnegative")
        total = sum(self.weights.values())
        if total <= 0:
            raise ScenarioError("weights must not all be zero")
        object.__setattr__(
            self, "weights", {k: v / total for k, v in self.weights.items()}
        )

    def for_model(self, model: GridModel) -> dict[str, float]:
        unknown = set(self.weights) - set(model.area_ids())
        if unknown:
            raise ScenarioError(f"weights name unknown area(s): {', '.join(sorted(unknown))}")
        return dict(self.weights)


def _load_share_weights(model: GridModel) -> dict[str, float]:
    total = model.total_load_mw
    if total <= 0:
        raise ScenarioError("cannot derive load-share weights for a zero-load model")
    return {a.id: a.load_mw / total for a in model.areas}


def penetration_of(model: GridModel) -> dict[str, float]:
    """Committed-output shares by kind: pv, wtg, and their total."""
    total = model.total_committed_mw
    if total <= 0:
        raise ScenarioError("zero committed generation")
    pv = sum(a.committed_by_kind("pv") for a in model.areas) / total
    wtg = sum(a.committed_by_kind("wtg") for a in model.areas) / total
    return {"pv_frac": pv, "wtg_frac": wtg, "total_renewable_frac": pv + wtg}


def build_scenario(
    base: GridModel,
    targets: PenetrationTargets,
    pv_weights: RegionalWeights | None = None,
    wtg_weights: RegionalWeights | None = None,
) -> GridModel:
    """Displace synchronous output with PV/WTG to hit the target shares.

    The result satisfies penetration_of == targets (to rounding), keeps
    total committed generation and every area load unchanged, and scales
    each synchronous fleet proportionally.  Raises ScenarioError when the
    targets cannot be met against rated capacities.
    """
    total = base.total_committed_mw
    if total <= 0:
        raise ScenarioError("base model has zero committed generation")

    sync0 = sum(a.committed_by_kind("synchronous") for a in base.areas)
    pv0 = sum(a.committed_by_kind("pv") for a in base.areas)
    wtg0 = sum(a.committed_by_kind("wtg") for a in base.areas)

    pv_t = targets.pv_frac * total
    wtg_t = targets.wtg_frac * total
    sync_t = total - pv_t - wtg_t

    if sync0 <= 0:
        raise ScenarioError("base model has no committed synchronous generation to displace")
    k_sync = sync_t / sync0
    if k_sync > 1 + 1e-9:
        raise ScenarioError(
            "targets require more synchronous output than the base commits "
            f"({sync_t:.1f} MW vs {sync0:.1f} MW)"
        )

    pv_add = _per_area_addition(base, "pv", pv0, pv_t, pv_weights)
    wtg_add = _per_area_addition(base, "wtg", wtg0, wtg_t, wtg_weights)
    k_pv = 1.0 if pv_t >= pv0 else (pv_t / pv0 if pv0 > 0 else 1.0)
    k_wtg = 1.0 if wtg_t >= wtg0 else (wtg_t / wtg0 if wtg0 > 0 else 1.0)

    new_areas = []
    for area in base.areas:
        fleets = []
        for f in area.fleets:
            if f.kind == "synchronous":
                fleets.append(_scale_sync(f, k_sync))
            elif f.kind == "pv":
                fleets.append(_curtail(f, k_pv))
            else:
                fleets.append(_curtail(f, k_wtg))
        for kind, add in (("pv", pv_add.get(area.id, 0.0)), ("wtg", wtg_add.get(area.id, 0.0))):
            if add > 0:
                fleets.append(
                    GeneratorFleet(
                        id=f"{area.id}-{kind}-added",
                        kind=kind,
                        rated_mw=add,
                        committed_mw=add,
                    )
                )
        new_areas.append(replace(area, fleets=tuple(fleets)))
    return replace(base, areas=tuple(new_areas))


def _per_area_addition(base, kind, existing, target, weights) -> dict[str, float]:
    delta = target - existing
    if delta <= 1e-12:
        return {}
    w = weights.for_model(base) if weights is not None else _load_share_weights(base)
    return {aid: delta * frac for aid, frac in w.items() if frac > 0}


def _scale_sync(f: GeneratorFleet, k: float) -> GeneratorFleet:
    if k == 1.0:
        return f
    gov = f.gov
    if gov is not None:
        gov = replace(gov, headroom_mw=gov.headroom_mw * k)
    return replace(
        f, rated_mw=f.rated_mw * k, committed_mw=f.committed_mw * k, gov=gov
    )


def _curtail(f: GeneratorFleet, k: float) -> GeneratorFleet:
    if k == 1.0:
        return f
    return replace(f, committed_mw=f.committed_mw * k)


@dataclass(frozen=True)
class FlatRunReport:
    max_abs_dev_pu: float
    passed: bool
    diagnostics: str = ""


def flat_run_check(model: GridModel, duration_s: float = 20.0, dt: float = 0.005) -> FlatRunReport:
    """No-contingency run; passes when frequency stays put to 1e-5 pu.

    Deviation is measured from the run's starting frequency so models that
    deliberately start below nominal (e.g. 59.974 Hz) are judged on drift,
    not on the configured offset.  Engine divergence is reported as a
    failure with diagnostics rather than raised.
    """
    cfg = SimConfig(dt=dt, horizon_s=duration_s, output_dt=0.1)
    try:
        res = simulate(model, Contingency.none(), None, cfg)
    except EngineDivergenceError as e:
        return FlatRunReport(max_abs_dev_pu=float("inf"), passed=False, diagnostics=str(e))
    dev = max(
        abs(res.max_f_hz - model.initial_frequency),
        abs(res.min_f_hz - model.initial_frequency),
    ) / model.f0
    return FlatRunReport(max_abs_dev_pu=dev, passed=dev < FLAT_RUN_LIMIT_PU)
