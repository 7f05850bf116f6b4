"""PV capacity-expansion planning at desk scale.

Minimizes discounted total cost over a planning horizon: PV expansion
(panels plus land), fixed O&M, variable O&M, fuel, wheeling, lost load,
and emissions.  Chronology is reduced to duration-weighted time blocks per
year.  Build decisions are integer multiples of a MW increment, solved by
branch-and-bound on linear-programming relaxations (HiGHS); dispatch,
interchange, and unserved energy are continuous within each node's LP.

Constraint families (numbered as reported by `check_feasibility`):
  1 regional power balance per block
  2 PV installation speed per region-year (and increment granularity)
  3 unit capacity net of outage/maintenance availability
  4 capacity adequacy: firm capacity covers peak load plus reserve
  5 interface transmission capacity
  6 regional renewable portfolio floor
  7 PV output limited by the per-block solar availability factor
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

__all__ = [
    "ExistingUnit",
    "Region",
    "Interface",
    "ExpansionProblem",
    "ExpansionPlan",
    "CostBreakdown",
    "ConstraintViolation",
    "Certificate",
    "ExpansionSolution",
    "InfeasibleProblemError",
    "evaluate_cost",
    "check_feasibility",
    "solve",
]

HOURS_PER_YEAR = 8760.0


class InfeasibleProblemError(RuntimeError):
    """No feasible plan exists; names the binding constraint family."""

    def __init__(self, families: tuple[str, ...]):
        super().__init__(f"infeasible problem; binding constraint family: {', '.join(families)}")
        self.families = families


@dataclass(frozen=True)
class ExistingUnit:
    """One dispatchable unit with its cost and emission coefficients."""

    id: str
    rated_mw: float
    availability: float = 1.0
    heat_rate_mmbtu_per_mwh: float = 0.0
    fuel_price_per_mmbtu: float = 0.0
    var_om_per_mwh: float = 0.0
    fixed_om_per_mw_year: float = 0.0
    emission_t_per_mwh: float = 0.0
    emission_price_per_t: float = 0.0

    @property
    def available_mw(self) -> float:
        return self.rated_mw * self.availability

    @property
    def fuel_cost_per_mwh(self) -> float:
        return self.heat_rate_mmbtu_per_mwh * self.fuel_price_per_mmbtu

    @property
    def emission_cost_per_mwh(self) -> float:
        return self.emission_t_per_mwh * self.emission_price_per_t


@dataclass(frozen=True)
class Region:
    id: str
    solar_availability: tuple[float, ...]      # per time block
    load_mw: tuple[tuple[float, ...], ...]     # per year, per time block
    land_price_per_mw: float = 0.0
    lost_load_price_per_mwh: float = 1e4
    portfolio_floor: float = 0.0
    build_speed_mw_per_year: float = float("inf")
    pv_initial_mw: float = 0.0
    units: tuple[ExistingUnit, ...] = ()

    def peak_load_mw(self, year: int) -> float:
        return max(self.load_mw[year])

    def reserve_requirement_mw(self, year: int, margin_frac: float) -> float:
        # reserve covers the larger of a load margin and the biggest unit
        largest = max((u.rated_mw for u in self.units), default=0.0)
        return max(margin_frac * self.peak_load_mw(year), largest)


@dataclass(frozen=True)
class Interface:
    from_region: str
    to_region: str
    capacity_mw: float
    wheeling_price_per_mwh: float = 0.0


@dataclass(frozen=True)
class ExpansionProblem:
    name: str
    discount: tuple[float, ...]                # present-value coefficient per year
    block_hours: tuple[float, ...]
    pv_capex_per_mw: tuple[float, ...]         # per year
    regions: tuple[Region, ...]
    interfaces: tuple[Interface, ...] = ()
    pv_fixed_om_per_mw_year: float = 0.0
    build_increment_mw: float = 50.0
    reserve_margin_frac: float = 0.0

    @property
    def n_years(self) -> int:
        return len(self.discount)

    @property
    def n_blocks(self) -> int:
        return len(self.block_hours)

    def region(self, rid: str) -> Region:
        for r in self.regions:
            if r.id == rid:
                return r
        raise KeyError(f"no region {rid!r}")

    def check(self) -> list[str]:
        out = []
        if abs(sum(self.block_hours) - HOURS_PER_YEAR) > 1e-6 * HOURS_PER_YEAR:
            out.append(f"block durations sum to {sum(self.block_hours):g} h, expected {HOURS_PER_YEAR:g}")
        if any(h <= 0 for h in self.block_hours):
            out.append("block durations must be positive")
        if any(d <= 0 for d in self.discount):
            out.append("discount coefficients must be positive")
        if len(self.pv_capex_per_mw) != self.n_years:
            out.append("need one PV capex value per year")
        if any(c < 0 for c in self.pv_capex_per_mw):
            out.append("PV capex must be nonnegative")
        if self.build_increment_mw <= 0:
            out.append("build increment must be positive")
        ids = [r.id for r in self.regions]
        if len(set(ids)) != len(ids):
            out.append("duplicate region ids")
        uids = [u.id for r in self.regions for u in r.units]
        if len(set(uids)) != len(uids):
            out.append("unit ids must be globally unique")
        for r in self.regions:
            if len(r.solar_availability) != self.n_blocks:
                out.append(f"region {r.id}: need one solar availability per block")
            elif any(not 0 <= a <= 1 for a in r.solar_availability):
                out.append(f"region {r.id}: solar availability must lie in [0, 1]")
            if len(r.load_mw) != self.n_years or any(len(row) != self.n_blocks for row in r.load_mw):
                out.append(f"region {r.id}: load table must be years x blocks")
            elif any(v < 0 for row in r.load_mw for v in row):
                out.append(f"region {r.id}: loads must be nonnegative")
            if not 0 <= r.portfolio_floor < 1:
                out.append(f"region {r.id}: portfolio floor must lie in [0, 1)")
            for u in r.units:
                if u.rated_mw <= 0 or not 0 <= u.availability <= 1:
                    out.append(f"unit {u.id}: bad rating or availability")
        for itf in self.interfaces:
            if itf.from_region not in ids or itf.to_region not in ids:
                out.append(f"interface {itf.from_region}->{itf.to_region} names unknown region")
            if itf.capacity_mw < 0 or itf.wheeling_price_per_mwh < 0:
                out.append(f"interface {itf.from_region}->{itf.to_region}: negative capacity or price")
        return out


@dataclass
class ExpansionPlan:
    """Builds, dispatch, interchange, and unserved energy.

    Builds are MW added per (region, year); dispatch and PV output are MW
    per (unit/region, year, block); flows are signed MW per (interface
    index, year, block), positive from->to; unserved energy is MWh.
    Missing keys mean zero.
    """

    pv_build_mw: dict = field(default_factory=dict)
    dispatch_mw: dict = field(default_factory=dict)
    pv_output_mw: dict = field(default_factory=dict)
    flow_mw: dict = field(default_factory=dict)
    unserved_mwh: dict = field(default_factory=dict)

    def cumulative_pv_mw(self, problem: ExpansionProblem, rid: str, year: int) -> float:
        base = problem.region(rid).pv_initial_mw
        return base + sum(self.pv_build_mw.get((rid, y), 0.0) for y in range(year + 1))


@dataclass(frozen=True)
class CostBreakdown:
    """The seven discounted cost terms of the planning objective."""

    pv_expansion: float
    fixed_om: float
    variable_om: float
    fuel: float
    wheeling: float
    lost_load: float
    emission: float

    @property
    def total(self) -> float:
        return (self.pv_expansion + self.fixed_om + self.variable_om + self.fuel
                + self.wheeling + self.lost_load + self.emission)

    def to_doc(self) -> dict:
        return {
            "pv_expansion": self.pv_expansion,
            "fixed_om": self.fixed_om,
            "variable_om": self.variable_om,
            "fuel": self.fuel,
            "wheeling": self.wheeling,
            "lost_load": self.lost_load,
            "emission": self.emission,
            "total": self.total,
        }


class ConstraintViolation(NamedTuple):
    family: str
    entity: str
    amount: float

    def __str__(self):
        return f"[{self.family}] {self.entity}: {self.amount:.6g}"


class Certificate(NamedTuple):
    """Branch-and-bound optimality certificate."""

    optimal_cost: float
    lower_bound: float
    gap: float
    nodes_explored: int
    node_bounds: tuple[float, ...]


class ExpansionSolution(NamedTuple):
    plan: ExpansionPlan
    cost: CostBreakdown
    certificate: Certificate


def _check_plan_keys(plan: ExpansionPlan, problem: ExpansionProblem):
    rids = {r.id for r in problem.regions}
    uids = {u.id for r in problem.regions for u in r.units}
    ny, nb, ni = problem.n_years, problem.n_blocks, len(problem.interfaces)
    for (rid, y) in plan.pv_build_mw:
        if rid not in rids or not 0 <= y < ny:
            raise ValueError(f"plan build key ({rid}, {y}) does not match the problem")
    for (uid, y, b) in plan.dispatch_mw:
        if uid not in uids or not 0 <= y < ny or not 0 <= b < nb:
            raise ValueError(f"plan dispatch key ({uid}, {y}, {b}) does not match the problem")
    for (rid, y, b) in plan.pv_output_mw:
        if rid not in rids or not 0 <= y < ny or not 0 <= b < nb:
            raise ValueError(f"plan pv key ({rid}, {y}, {b}) does not match the problem")
    for (i, y, b) in plan.flow_mw:
        if not 0 <= i < ni or not 0 <= y < ny or not 0 <= b < nb:
            raise ValueError(f"plan flow key ({i}, {y}, {b}) does not match the problem")
    for (rid, y, b) in plan.unserved_mwh:
        if rid not in rids or not 0 <= y < ny or not 0 <= b < nb:
            raise ValueError(f"plan unserved key ({rid}, {y}, {b}) does not match the problem")


def evaluate_cost(plan: ExpansionPlan, problem: ExpansionProblem) -> CostBreakdown:
    """Exact discounted sum of the seven cost terms for a given plan."""
    _check_plan_keys(plan, problem)
    pv_exp = fixed = vom = fuel = wheel = lost = emis = 0.0
    for y, d in enumerate(problem.discount):
        capex = problem.pv_capex_per_mw[y]
        for r in problem.regions:
            built = plan.pv_build_mw.get((r.id, y), 0.0)
            pv_exp += d * built * (capex + r.land_price_per_mw)
            fixed += d * problem.pv_fixed_om_per_mw_year * plan.cumulative_pv_mw(problem, r.id, y)
            for u in r.units:
                fixed += d * u.fixed_om_per_mw_year * u.rated_mw
            for b, h in enumerate(problem.block_hours):
                lost += d * r.lost_load_price_per_mwh * plan.unserved_mwh.get((r.id, y, b), 0.0)
                for u in r.units:
                    energy = plan.dispatch_mw.get((u.id, y, b), 0.0) * h
                    vom += d * u.var_om_per_mwh * energy
                    fuel += d * u.fuel_cost_per_mwh * energy
                    emis += d * u.emission_cost_per_mwh * energy
        for i, itf in enumerate(problem.interfaces):
            for b, h in enumerate(problem.block_hours):
                wheel += d * itf.wheeling_price_per_mwh * abs(plan.flow_mw.get((i, y, b), 0.0)) * h
    return CostBreakdown(
        pv_expansion=pv_exp, fixed_om=fixed, variable_om=vom, fuel=fuel,
        wheeling=wheel, lost_load=lost, emission=emis,
    )


def check_feasibility(
    plan: ExpansionPlan, problem: ExpansionProblem, tol: float = 1e-6
) -> list[ConstraintViolation]:
    """Evaluate all seven constraint families; empty list means feasible."""
    _check_plan_keys(plan, problem)
    out: list[ConstraintViolation] = []
    inc = problem.build_increment_mw
    ny, nb = problem.n_years, problem.n_blocks

    inflow: dict[tuple[str, int, int], float] = {}
    outflow: dict[tuple[str, int, int], float] = {}
    for i, itf in enumerate(problem.interfaces):
        for y in range(ny):
            for b in range(nb):
                fl = plan.flow_mw.get((i, y, b), 0.0)
                if abs(fl) > itf.capacity_mw + tol * max(1.0, itf.capacity_mw):
                    out.append(ConstraintViolation(
                        "5:interface", f"{itf.from_region}->{itf.to_region} y{y} b{b}",
                        abs(fl) - itf.capacity_mw))
                inflow[(itf.to_region, y, b)] = inflow.get((itf.to_region, y, b), 0.0) + max(fl, 0.0)
                inflow[(itf.from_region, y, b)] = inflow.get((itf.from_region, y, b), 0.0) + max(-fl, 0.0)
                outflow[(itf.from_region, y, b)] = outflow.get((itf.from_region, y, b), 0.0) + max(fl, 0.0)
                outflow[(itf.to_region, y, b)] = outflow.get((itf.to_region, y, b), 0.0) + max(-fl, 0.0)

    for r in problem.regions:
        for y in range(ny):
            built = plan.pv_build_mw.get((r.id, y), 0.0)
            if built < -tol:
                out.append(ConstraintViolation("plan", f"{r.id} y{y} negative build", built))
            steps = built / inc
            if abs(steps - round(steps)) > 1e-6:
                out.append(ConstraintViolation(
                    "2:build-speed", f"{r.id} y{y} build {built:g} MW not a multiple of {inc:g} MW",
                    built))
            if built > r.build_speed_mw_per_year + tol * max(1.0, r.build_speed_mw_per_year):
                out.append(ConstraintViolation(
                    "2:build-speed", f"{r.id} y{y}", built - r.build_speed_mw_per_year))

            cum = plan.cumulative_pv_mw(problem, r.id, y)
            firm = sum(u.available_mw for u in r.units)
            af_floor = min(r.solar_availability) if r.solar_availability else 0.0
            need = r.peak_load_mw(y) + r.reserve_requirement_mw(y, problem.reserve_margin_frac)
            have = firm + af_floor * cum
            if have < need - tol * max(1.0, need):
                out.append(ConstraintViolation("4:adequacy", f"{r.id} y{y}", need - have))

            pv_energy = 0.0
            thermal_energy = 0.0
            for b, h in enumerate(problem.block_hours):
                load = r.load_mw[y][b]
                pv = plan.pv_output_mw.get((r.id, y, b), 0.0)
                uns = plan.unserved_mwh.get((r.id, y, b), 0.0) / h
                if uns < -tol:
                    out.append(ConstraintViolation("plan", f"{r.id} y{y} b{b} negative unserved", uns))
                gen = 0.0
                for u in r.units:
                    dmw = plan.dispatch_mw.get((u.id, y, b), 0.0)
                    gen += dmw
                    thermal_energy += dmw * h
                    if dmw < -tol or dmw > u.available_mw + tol * max(1.0, u.available_mw):
                        out.append(ConstraintViolation(
                            "3:unit-capacity", f"{u.id} y{y} b{b}", dmw - u.available_mw))
                pv_energy += pv * h
                cap = r.solar_availability[b] * cum
                if pv < -tol or pv > cap + tol * max(1.0, cap):
                    out.append(ConstraintViolation("7:pv-output", f"{r.id} y{y} b{b}", pv - cap))
                bal = (gen + pv + inflow.get((r.id, y, b), 0.0) - outflow.get((r.id, y, b), 0.0)
                       + uns - load)
                if abs(bal) > tol * max(1.0, load):
                    out.append(ConstraintViolation("1:balance", f"{r.id} y{y} b{b}", bal))
            if r.portfolio_floor > 0:
                total = pv_energy + thermal_energy
                if pv_energy < r.portfolio_floor * total - tol * max(1.0, total):
                    out.append(ConstraintViolation(
                        "6:portfolio", f"{r.id} y{y}",
                        r.portfolio_floor * total - pv_energy))
    return out


# ------------------------------------------------------------- LP + B&B solve

class _LpLayout:
    """Column layout: builds, unit dispatch, pv output, flows (2 dirs), unserved."""

    def __init__(self, problem: ExpansionProblem):
        self.problem = problem
        self.units = [(r.id, u) for r in problem.regions for u in r.units]
        R, Y, B, U, I = (len(problem.regions), problem.n_years, problem.n_blocks,
                         len(self.units), len(problem.interfaces))
        self.R, self.Y, self.B, self.U, self.I = R, Y, B, U, I
        self.nb = R * Y
        self.o_d = self.nb
        self.o_p = self.o_d + U * Y * B
        self.o_ff = self.o_p + R * Y * B
        self.o_fb = self.o_ff + I * Y * B
        self.o_s = self.o_fb + I * Y * B
        self.n = self.o_s + R * Y * B

    def b(self, r, y):
        return r * self.Y + y

    def d(self, u, y, bl):
        return self.o_d + (u * self.Y + y) * self.B + bl

    def p(self, r, y, bl):
        return self.o_p + (r * self.Y + y) * self.B + bl

    def ff(self, i, y, bl):
        return self.o_ff + (i * self.Y + y) * self.B + bl

    def fb(self, i, y, bl):
        return self.o_fb + (i * self.Y + y) * self.B + bl

    def s(self, r, y, bl):
        return self.o_s + (r * self.Y + y) * self.B + bl


def _build_lp(problem: ExpansionProblem, include_adequacy=True, include_portfolio=True):
    lay = _LpLayout(problem)
    pr = problem
    inc = pr.build_increment_mw
    c = np.zeros(lay.n)
    bounds: list[tuple[float, float | None]] = [(0.0, None)] * lay.n
    constant = 0.0

    for y, d in enumerate(pr.discount):
        constant += d * pr.pv_fixed_om_per_mw_year * sum(r.pv_initial_mw for r in pr.regions)
        for r in pr.regions:
            for u in r.units:
                constant += d * u.fixed_om_per_mw_year * u.rated_mw

    for ri, r in enumerate(pr.regions):
        for y in range(pr.n_years):
            j = lay.b(ri, y)
            tail_om = pr.pv_fixed_om_per_mw_year * sum(pr.discount[y:])
            c[j] = pr.discount[y] * inc * (pr.pv_capex_per_mw[y] + r.land_price_per_mw) + inc * tail_om
            if math.isfinite(r.build_speed_mw_per_year):
                ub = math.floor(r.build_speed_mw_per_year / inc + 1e-9)
            else:
                # generous fallback cap so branching stays finite
                ub = max(40, math.ceil(4.0 * max(r.peak_load_mw(yy) for yy in range(pr.n_years)) / inc))
            bounds[j] = (0.0, float(ub))

    for ui, (rid, u) in enumerate(lay.units):
        mc = u.var_om_per_mwh + u.fuel_cost_per_mwh + u.emission_cost_per_mwh
        for y in range(pr.n_years):
            for bl, h in enumerate(pr.block_hours):
                j = lay.d(ui, y, bl)
                c[j] = pr.discount[y] * h * mc
                bounds[j] = (0.0, u.available_mw)

    for ii, itf in enumerate(pr.interfaces):
        for y in range(pr.n_years):
            for bl, h in enumerate(pr.block_hours):
                w = pr.discount[y] * h * itf.wheeling_price_per_mwh
                c[lay.ff(ii, y, bl)] = w
                c[lay.fb(ii, y, bl)] = w
                bounds[lay.ff(ii, y, bl)] = (0.0, itf.capacity_mw)
                bounds[lay.fb(ii, y, bl)] = (0.0, itf.capacity_mw)

    for ri, r in enumerate(pr.regions):
        for y in range(pr.n_years):
            for bl, h in enumerate(pr.block_hours):
                j = lay.s(ri, y, bl)
                c[j] = pr.discount[y] * h * r.lost_load_price_per_mwh
                bounds[j] = (0.0, r.load_mw[y][bl])

    # balance equalities
    rows_eq = []
    rhs_eq = []
    rid_to_ri = {r.id: ri for ri, r in enumerate(pr.regions)}
    for ri, r in enumerate(pr.regions):
        for y in range(pr.n_years):
            for bl in range(pr.n_blocks):
                row = np.zeros(lay.n)
                for ui, (rid, u) in enumerate(lay.units):
                    if rid == r.id:
                        row[lay.d(ui, y, bl)] = 1.0
                row[lay.p(ri, y, bl)] = 1.0
                row[lay.s(ri, y, bl)] = 1.0
                for ii, itf in enumerate(pr.interfaces):
                    if itf.to_region == r.id:
                        row[lay.ff(ii, y, bl)] += 1.0
                        row[lay.fb(ii, y, bl)] -= 1.0
                    if itf.from_region == r.id:
                        row[lay.ff(ii, y, bl)] -= 1.0
                        row[lay.fb(ii, y, bl)] += 1.0
                rows_eq.append(row)
                rhs_eq.append(r.load_mw[y][bl])

    rows_ub = []
    rhs_ub = []
    for ri, r in enumerate(pr.regions):
        af_floor = min(r.solar_availability)
        for y in range(pr.n_years):
            # 7: pv output within availability of cumulative capacity
            for bl in range(pr.n_blocks):
                af = r.solar_availability[bl]
                row = np.zeros(lay.n)
                row[lay.p(ri, y, bl)] = 1.0
                for y2 in range(y + 1):
                    row[lay.b(ri, y2)] = -af * inc
                rows_ub.append(row)
                rhs_ub.append(af * r.pv_initial_mw)
            # 4: adequacy
            if include_adequacy:
                firm = sum(u.available_mw for u in r.units)
                need = r.peak_load_mw(y) + r.reserve_requirement_mw(y, pr.reserve_margin_frac)
                row = np.zeros(lay.n)
                for y2 in range(y + 1):
                    row[lay.b(ri, y2)] = -af_floor * inc
                rows_ub.append(row)
                rhs_ub.append(firm + af_floor * r.pv_initial_mw - need)
            # 6: portfolio floor on annual regional energy
            if include_portfolio and r.portfolio_floor > 0:
                row = np.zeros(lay.n)
                for bl, h in enumerate(pr.block_hours):
                    row[lay.p(ri, y, bl)] = -(1.0 - r.portfolio_floor) * h
                    for ui, (rid, u) in enumerate(lay.units):
                        if rid == r.id:
                            row[lay.d(ui, y, bl)] = r.portfolio_floor * h
                rows_ub.append(row)
                rhs_ub.append(0.0)

    A_eq = np.array(rows_eq) if rows_eq else None
    b_eq = np.array(rhs_eq) if rows_eq else None
    A_ub = np.array(rows_ub) if rows_ub else None
    b_ub = np.array(rhs_ub) if rows_ub else None
    return lay, c, constant, A_eq, b_eq, A_ub, b_ub, bounds


def _solve_node(c, A_eq, b_eq, A_ub, b_ub, bounds):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res


def solve(problem: ExpansionProblem, node_limit: int = 100000) -> ExpansionSolution:
    """Minimize total discounted cost; returns a provably optimal plan.

    Integer build decisions are searched by depth-first branch-and-bound
    with LP relaxation bounds; dispatch within a node is an exact LP.
    Raises InfeasibleProblemError naming the binding constraint family
    when no plan exists.
    """
    issues = problem.check()
    if issues:
        raise ValueError("invalid problem: " + "; ".join(issues))
    lay, c, constant, A_eq, b_eq, A_ub, b_ub, bounds0 = _build_lp(problem)

    root = _solve_node(c, A_eq, b_eq, A_ub, b_ub, bounds0)
    if root.status == 2:
        raise InfeasibleProblemError(_diagnose_infeasibility(problem))
    if root.status != 0:
        raise RuntimeError(f"root relaxation failed: {root.message}")

    nb = lay.nb
    best_cost = math.inf
    best_x = None
    node_bounds: list[float] = []
    nodes = 0
    stack = [tuple(bounds0[:nb])]

    while stack:
        node_bnds = stack.pop()
        bounds = list(node_bnds) + bounds0[nb:]
        res = _solve_node(c, A_eq, b_eq, A_ub, b_ub, bounds)
        nodes += 1
        if nodes > node_limit:
            raise RuntimeError("branch-and-bound node limit exceeded")
        if res.status == 2:
            continue
        if res.status != 0:
            raise RuntimeError(f"node relaxation failed: {res.message}")
        z = res.fun + constant
        node_bounds.append(z)
        if z >= best_cost - 1e-9 * max(1.0, abs(best_cost)):
            continue
        frac = res.x[:nb] - np.round(res.x[:nb])
        j = int(np.argmax(np.abs(frac)))
        if abs(frac[j]) <= 1e-6:
            ints = np.round(res.x[:nb])
            fixed = [(float(v), float(v)) for v in ints]
            res_fix = _solve_node(c, A_eq, b_eq, A_ub, b_ub, fixed + bounds0[nb:])
            if res_fix.status == 0:
                z_fix = res_fix.fun + constant
                if z_fix < best_cost - 1e-9 * max(1.0, abs(z_fix)):
                    best_cost = z_fix
                    best_x = res_fix.x
            continue
        lo, hi = bounds[j]
        floor_v = math.floor(res.x[j])
        up = (floor_v + 1.0, hi)
        down = (lo, float(floor_v))
        stack.append((*node_bnds[:j], up, *node_bnds[j + 1:]))
        stack.append((*node_bnds[:j], down, *node_bnds[j + 1:]))

    if best_x is None:
        raise InfeasibleProblemError(_diagnose_infeasibility(problem))

    plan = _extract_plan(problem, lay, best_x)
    cost = evaluate_cost(plan, problem)
    cert = Certificate(
        optimal_cost=best_cost,
        lower_bound=best_cost,
        gap=0.0,
        nodes_explored=nodes,
        node_bounds=tuple(node_bounds),
    )
    return ExpansionSolution(plan=plan, cost=cost, certificate=cert)


def _extract_plan(problem: ExpansionProblem, lay: _LpLayout, x: np.ndarray) -> ExpansionPlan:
    def clean(v):
        return 0.0 if abs(v) < 1e-9 else float(v)

    plan = ExpansionPlan()
    inc = problem.build_increment_mw
    for ri, r in enumerate(problem.regions):
        for y in range(problem.n_years):
            built = round(x[lay.b(ri, y)]) * inc
            if built:
                plan.pv_build_mw[(r.id, y)] = float(built)
            for bl, h in enumerate(problem.block_hours):
                p = clean(x[lay.p(ri, y, bl)])
                if p:
                    plan.pv_output_mw[(r.id, y, bl)] = p
                s = clean(x[lay.s(ri, y, bl)])
                if s:
                    plan.unserved_mwh[(r.id, y, bl)] = s * h
    for ui, (rid, u) in enumerate(lay.units):
        for y in range(problem.n_years):
            for bl in range(problem.n_blocks):
                d = clean(x[lay.d(ui, y, bl)])
                if d:
                    plan.dispatch_mw[(u.id, y, bl)] = d
    for ii in range(len(problem.interfaces)):
        for y in range(problem.n_years):
            for bl in range(problem.n_blocks):
                fl = clean(x[lay.ff(ii, y, bl)] - x[lay.fb(ii, y, bl)])
                if fl:
                    plan.flow_mw[(ii, y, bl)] = fl
    return plan


def _diagnose_infeasibility(problem: ExpansionProblem) -> tuple[str, ...]:
    """Identify which optional constraint families block feasibility."""
    trials = (
        ("4:adequacy", dict(include_adequacy=False, include_portfolio=True)),
        ("6:portfolio", dict(include_adequacy=True, include_portfolio=False)),
    )
    for family, kw in trials:
        lay, c, const, A_eq, b_eq, A_ub, b_ub, bounds = _build_lp(problem, **kw)
        res = _solve_node(c, A_eq, b_eq, A_ub, b_ub, bounds)
        if res.status == 0:
            return (family,)
    return ("4:adequacy", "6:portfolio")
