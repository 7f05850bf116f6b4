import itertools
import math

import pytest

from gridfreq.expansion import (
    CostBreakdown,
    ExistingUnit,
    ExpansionPlan,
    ExpansionProblem,
    InfeasibleProblemError,
    Interface,
    Region,
    check_feasibility,
    evaluate_cost,
    solve,
    _build_lp,
    _solve_node,
)

H = 8760.0


def unit(uid, rated, mc_fuel=0.0, vom=0.0, fom=0.0, avail=1.0, emis=0.0, ep=0.0):
    # mc_fuel given directly as heat_rate * fuel_price
    return ExistingUnit(
        id=uid, rated_mw=rated, availability=avail,
        heat_rate_mmbtu_per_mwh=1.0 if mc_fuel else 0.0,
        fuel_price_per_mmbtu=mc_fuel,
        var_om_per_mwh=vom, fixed_om_per_mw_year=fom,
        emission_t_per_mwh=emis, emission_price_per_t=ep,
    )


def one_region_problem(
    blocks=((1460.0, 0.6), (7300.0, 0.0)),  # (hours, solar availability)
    load=(100.0, 80.0),
    units=(("gas", 120.0, 3.0, 2.0), ("gas2", 120.0, 4.0, 2.5)),
    capex=1000.0,
    land=0.0,
    floor=0.0,
    speed=200.0,
    inc=50.0,
    voll=5000.0,
    margin=0.0,
):
    region = Region(
        id="r",
        solar_availability=tuple(b[1] for b in blocks),
        load_mw=(tuple(load),),
        land_price_per_mw=land,
        lost_load_price_per_mwh=voll,
        portfolio_floor=floor,
        build_speed_mw_per_year=speed,
        units=tuple(unit(u[0], u[1], mc_fuel=u[2], vom=u[3]) for u in units),
    )
    return ExpansionProblem(
        name="one",
        discount=(1.0,),
        block_hours=tuple(b[0] for b in blocks),
        pv_capex_per_mw=(capex,),
        regions=(region,),
        build_increment_mw=inc,
        reserve_margin_frac=margin,
    )


def brute_force_optimum(problem):
    """Enumerate every integer build combination; dispatch via the node LP."""
    lay, c, const, A_eq, b_eq, A_ub, b_ub, bounds = _build_lp(problem)
    ubs = [int(b[1]) for b in bounds[: lay.nb]]
    best = math.inf
    n = 0
    for combo in itertools.product(*[range(u + 1) for u in ubs]):
        n += 1
        fixed = [(float(v), float(v)) for v in combo]
        res = _solve_node(c, A_eq, b_eq, A_ub, b_ub, fixed + bounds[lay.nb:])
        if res.status == 0:
            best = min(best, res.fun + const)
    assert n <= 1000, "instance too large for the enumeration oracle"
    return best


class TestEvaluateCost:
    def test_zero_plan_zero_cost(self):
        prob = one_region_problem()
        assert evaluate_cost(ExpansionPlan(), prob).total == 0.0

    def test_hand_computed_instance(self):
        # one region, one year (D=1), one 100 h block: 10 MW built at 1/MW
        # plus 50 MW dispatched at 2/MWh -> 10 + 50*100*2 = 10,010
        prob = ExpansionProblem(
            name="hand", discount=(1.0,), block_hours=(100.0,),
            pv_capex_per_mw=(1.0,),
            regions=(Region(id="r", solar_availability=(0.5,), load_mw=((60.0,),),
                            units=(unit("u", 100.0, mc_fuel=0.0, vom=2.0),)),),
            build_increment_mw=10.0,
        )
        plan = ExpansionPlan(
            pv_build_mw={("r", 0): 10.0},
            dispatch_mw={("u", 0, 0): 50.0},
        )
        cost = evaluate_cost(plan, prob)
        assert cost.pv_expansion == pytest.approx(10.0)
        assert cost.variable_om == pytest.approx(10000.0)
        assert cost.total == pytest.approx(10010.0)

    def test_discount_linearity(self):
        prob1 = one_region_problem()
        prob2 = ExpansionProblem(
            name="d2", discount=(2.0,), block_hours=prob1.block_hours,
            pv_capex_per_mw=prob1.pv_capex_per_mw, regions=prob1.regions,
            build_increment_mw=prob1.build_increment_mw,
        )
        plan = ExpansionPlan(pv_build_mw={("r", 0): 50.0},
                             dispatch_mw={("gas", 0, 0): 40.0, ("gas", 0, 1): 30.0})
        assert evaluate_cost(plan, prob2).total == pytest.approx(
            2.0 * evaluate_cost(plan, prob1).total
        )

    def test_seven_terms(self):
        doc = CostBreakdown(1, 2, 3, 4, 5, 6, 7).to_doc()
        assert len([k for k in doc if k != "total"]) == 7
        assert doc["total"] == 28

    def test_dimension_mismatch(self):
        prob = one_region_problem()
        with pytest.raises(ValueError, match="does not match"):
            evaluate_cost(ExpansionPlan(dispatch_mw={("ghost", 0, 0): 1.0}), prob)


class TestCheckFeasibility:
    def balanced_plan(self, prob):
        plan = ExpansionPlan()
        for b, h in enumerate(prob.block_hours):
            plan.dispatch_mw[("gas", 0, b)] = prob.regions[0].load_mw[0][b]
        return plan

    def test_balanced_plan_clean(self):
        prob = one_region_problem()
        assert check_feasibility(self.balanced_plan(prob), prob) == []

    def test_overloaded_unit_family_three(self):
        prob = one_region_problem()
        plan = self.balanced_plan(prob)
        plan.dispatch_mw[("gas", 0, 0)] = 130.0  # above the 120 MW rating
        plan.dispatch_mw[("gas2", 0, 0)] = prob.regions[0].load_mw[0][0] - 130.0
        fams = {v.family for v in check_feasibility(plan, prob)}
        assert "3:unit-capacity" in fams

    def test_pv_above_availability_family_seven(self):
        prob = one_region_problem()
        plan = self.balanced_plan(prob)
        plan.pv_build_mw[("r", 0)] = 50.0
        plan.pv_output_mw[("r", 0, 1)] = 10.0  # block 1 has zero availability
        plan.dispatch_mw[("gas", 0, 1)] -= 10.0
        fams = {v.family for v in check_feasibility(plan, prob)}
        assert "7:pv-output" in fams

    def test_imbalance_family_one(self):
        prob = one_region_problem()
        plan = self.balanced_plan(prob)
        plan.dispatch_mw[("gas", 0, 0)] -= 25.0
        fams = {v.family for v in check_feasibility(plan, prob)}
        assert "1:balance" in fams

    def test_build_speed_family_two(self):
        prob = one_region_problem(speed=100.0)
        plan = self.balanced_plan(prob)
        plan.pv_build_mw[("r", 0)] = 150.0
        fams = {v.family for v in check_feasibility(plan, prob)}
        assert "2:build-speed" in fams

    def test_increment_granularity(self):
        prob = one_region_problem()
        plan = self.balanced_plan(prob)
        plan.pv_build_mw[("r", 0)] = 75.0  # not a multiple of 50
        assert any("multiple" in v.entity for v in check_feasibility(plan, prob))

    def test_adequacy_family_four(self):
        # firm capacity 240 cannot cover peak 100 plus a 150-unit reserve
        prob = one_region_problem(units=(("gas", 150.0, 3.0, 2.0), ("gas2", 90.0, 4.0, 2.5)))
        plan = ExpansionPlan(dispatch_mw={("gas", 0, b): l
                                          for b, l in enumerate((100.0, 80.0))})
        fams = {v.family for v in check_feasibility(plan, prob)}
        assert "4:adequacy" in fams

    def test_interface_family_five(self):
        prob = two_region_problem(cap=50.0)
        plan = ExpansionPlan(flow_mw={(0, 0, 0): 80.0})
        fams = {v.family for v in check_feasibility(plan, prob)}
        assert "5:interface" in fams

    def test_portfolio_family_six(self):
        prob = one_region_problem(floor=0.5)
        plan = self.balanced_plan(prob)  # all-thermal energy
        fams = {v.family for v in check_feasibility(plan, prob)}
        assert "6:portfolio" in fams


def two_region_problem(cap=100.0, wheel=1.0, voll=4000.0, cheap_mc=1.0, dear_mc=6.0):
    """Cheap generation in A, expensive in B; the interface matters."""
    ra = Region(id="A", solar_availability=(0.5, 0.0), load_mw=((80.0, 60.0),),
                lost_load_price_per_mwh=voll, build_speed_mw_per_year=200.0,
                units=(unit("a-gas", 200.0, mc_fuel=cheap_mc),
                       unit("a-gas2", 180.0, mc_fuel=cheap_mc + 0.2)))
    rb = Region(id="B", solar_availability=(0.5, 0.0), load_mw=((120.0, 100.0),),
                lost_load_price_per_mwh=voll, build_speed_mw_per_year=200.0,
                units=(unit("b-gas", 250.0, mc_fuel=dear_mc),
                       unit("b-gas2", 200.0, mc_fuel=dear_mc + 0.2)))
    return ExpansionProblem(
        name="two", discount=(1.0,), block_hours=(4380.0, 4380.0),
        pv_capex_per_mw=(2e6,),
        regions=(ra, rb),
        interfaces=(Interface("A", "B", capacity_mw=cap, wheeling_price_per_mwh=wheel),),
        build_increment_mw=50.0,
    )


class TestSolve:
    def test_zero_build_optimal_when_pv_costly(self):
        prob = one_region_problem(capex=1e9)
        sol = solve(prob)
        assert sol.plan.pv_build_mw == {}
        assert check_feasibility(sol.plan, prob) == []

    def test_portfolio_floor_forces_exact_build(self):
        # 50% renewable floor with cheap PV: the smallest feasible build wins
        prob = one_region_problem(floor=0.5, capex=10.0, speed=500.0)
        sol = solve(prob)
        built = sol.plan.pv_build_mw.get(("r", 0), 0.0)
        # brute-force confirms both optimality and the hand expectation
        assert sol.cost.total == pytest.approx(brute_force_optimum(prob), rel=1e-9)
        pv_energy = sum(sol.plan.pv_output_mw.get(("r", 0, b), 0.0) * h
                        for b, h in enumerate(prob.block_hours))
        total = pv_energy + sum(sol.plan.dispatch_mw.get(("gas", 0, b), 0.0) * h
                                for b, h in enumerate(prob.block_hours))
        assert pv_energy >= 0.5 * total - 1e-6 * total
        assert built > 0

    def test_matches_enumeration_on_tiny_instances(self):
        for prob in (
            one_region_problem(),
            one_region_problem(floor=0.3, capex=50.0),
            two_region_problem(),
        ):
            sol = solve(prob)
            assert sol.cost.total == pytest.approx(brute_force_optimum(prob), rel=1e-9)
            assert check_feasibility(sol.plan, prob) == []
            assert sol.certificate.gap == 0.0

    def test_root_relaxation_bounds_optimum(self):
        # the root LP relaxation is a valid lower bound; deeper nodes bound
        # their own subtrees (pruned ones may legitimately exceed the optimum)
        prob = one_region_problem(floor=0.4, capex=100.0)
        sol = solve(prob)
        tol = 1e-6 * abs(sol.certificate.optimal_cost)
        assert sol.certificate.node_bounds[0] <= sol.certificate.optimal_cost + tol
        assert min(sol.certificate.node_bounds) <= sol.certificate.optimal_cost + tol
        assert sol.certificate.lower_bound == sol.certificate.optimal_cost
        assert sol.certificate.gap == 0.0

    def test_lost_load_penalty_monotonicity(self):
        # raising the penalty price never cheapens the optimum
        lo = solve(one_region_problem(voll=1000.0)).cost.total
        hi = solve(one_region_problem(voll=5000.0)).cost.total
        assert hi >= lo - 1e-9

    def test_interface_capacity_monotonicity(self):
        tight = solve(two_region_problem(cap=20.0)).cost.total
        wide = solve(two_region_problem(cap=120.0)).cost.total
        assert wide <= tight + 1e-9

    def test_unreachable_floor_resolved_by_shedding(self):
        # an extreme floor at a tight build cap is met by shedding served
        # energy: the lost-load slack keeps the portfolio family feasible,
        # at a steep cost
        hard = one_region_problem(floor=0.9, speed=50.0, capex=1.0)
        easy = one_region_problem(floor=0.0, speed=50.0, capex=1.0)
        sol = solve(hard)
        assert check_feasibility(sol.plan, hard) == []
        assert sum(sol.plan.unserved_mwh.values()) > 0
        assert sol.cost.lost_load > 0
        assert sol.cost.total > solve(easy).cost.total

    def test_infeasible_adequacy_named(self):
        prob = one_region_problem(units=(("gas", 50.0, 3.0, 2.0),), margin=0.5)
        with pytest.raises(InfeasibleProblemError) as err:
            solve(prob)
        assert any("adequacy" in fam for fam in err.value.families)

    def test_problem_validation(self):
        bad = ExpansionProblem(
            name="bad", discount=(1.0,), block_hours=(100.0,),  # not 8,760 h
            pv_capex_per_mw=(1.0,),
            regions=(Region(id="r", solar_availability=(0.5,), load_mw=((60.0,),)),),
        )
        assert any("8760" in msg or "8,760" in msg for msg in bad.check())
        with pytest.raises(ValueError, match="invalid problem"):
            solve(bad)
