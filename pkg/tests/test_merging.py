import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cemi import merging as mg
from cemi.conditioning import cemi_objective, extension, separable_flag_extension, trivial_extension
from cemi.entropy import mutual_information
from cemi.errors import InvariantError, LayoutError
from cemi.tensor import (
    PureStateVector,
    SubsystemLayout,
    bell_state,
    ghz_state,
    ket,
    random_density,
    random_pure,
    tensor,
)

FIVE = SubsystemLayout.of(("A", 2), ("A'", 2), ("B", 2), ("B'", 2), ("E", 2))


def five(seed):
    return random_pure(FIVE, seed)


def bell_scenario():
    psi = tensor(bell_state(), PureStateVector(SubsystemLayout.of(("E", 1)), [1.0]))
    return mg.MergeScenario(psi, {"alice": ("A", ()), "bob": ("B", ())}, ("E",))


# -- redistribution cost ----------------------------------------------


def test_cost_with_empty_reference_is_zero():
    assert mg.redistribution_cost(bell_state(), [], [], ["A"], ["B"]) == pytest.approx(0, abs=1e-12)


def test_cost_ghz():
    assert mg.redistribution_cost(ghz_state(), ["A"], [], ["B"], ["C"]) == pytest.approx(0.5, abs=1e-12)


def test_cost_empty_message():
    assert mg.redistribution_cost(ghz_state(), ["A"], ["B"], [], ["C"]) == 0.0


def test_cost_requires_partition_and_purity():
    with pytest.raises(LayoutError):
        mg.redistribution_cost(ghz_state(), ["A"], [], ["B"], [])
    with pytest.raises(InvariantError):
        mg.redistribution_cost(ghz_state().density(), ["A"], [], ["B"], ["C"])


# -- routes ------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_route_totals_match_displayed_formulas(seed):
    psi = five(seed)
    scn = mg.bipartite_scenario(psi)
    q1 = mg.route_cost(scn, mg.route_one(scn)).total
    q2 = mg.route_cost(scn, mg.route_two(scn)).total
    assert q1 == pytest.approx(mg.q_one_formula(psi), abs=1e-10)
    assert q2 == pytest.approx(mg.q_two_formula(psi), abs=1e-10)
    assert sum(mg.q_one_via_complements(psi)) == pytest.approx(q1, abs=1e-10)
    assert q1 == pytest.approx(q2, abs=1e-9)
    assert q1 == pytest.approx(mg.scenario_objective(scn), abs=1e-9)


def test_bell_trivial_routes():
    scn = bell_scenario()
    for order in (["A", "B"], ["B", "A"]):
        cost = mg.route_cost(scn, mg.plan_from_tokens(scn, order))
        assert cost.total == pytest.approx(1, abs=1e-12)
        assert sorted(round(s.cost, 12) for s in cost.steps) == [0.0, 1.0]


def test_route_two_signs():
    scn = mg.bipartite_scenario(five(3))
    steps = mg.route_cost(scn, mg.route_two(scn)).steps
    assert [s.sign for s in steps] == [1, 1, -1]
    assert steps[-1].cost <= 1e-12


def test_plan_tokens():
    scn = mg.bipartite_scenario(five(1))
    plan = mg.plan_from_tokens(scn, ["A+A'", "B", "-A'"])
    assert plan == mg.route_two(scn)
    with pytest.raises(LayoutError):
        mg.plan_from_tokens(scn, ["A+B"])
    with pytest.raises(LayoutError):
        mg.plan_from_tokens(scn, ["E"])


def test_incomplete_route_rejected():
    scn = mg.bipartite_scenario(five(1))
    with pytest.raises(LayoutError):
        mg.route_cost(scn, mg.plan_from_tokens(scn, ["A"]))
    with pytest.raises(LayoutError):
        mg.route_cost(scn, mg.plan_from_tokens(scn, ["A", "A", "B"]))
    partial = mg.route_cost(scn, mg.plan_from_tokens(scn, ["A"]), require_merged=False)
    assert len(partial.steps) == 1


def test_scenario_must_partition_layout():
    with pytest.raises(LayoutError):
        mg.MergeScenario(five(0), {"alice": ("A", "A'"), "bob": ("B", ())}, ("E",))
    with pytest.raises(LayoutError):
        mg.MergeScenario(five(0), {"center": ("A", "A'"), "bob": ("B", "B'")}, ("E",))


def test_route_report_serializes():
    scn = mg.bipartite_scenario(five(2))
    d = mg.route_cost(scn, mg.route_one(scn)).to_dict()
    assert len(d["steps"]) == 2 and d["total"] == pytest.approx(sum(s["cost"] for s in d["steps"]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_conservation_property(seed):
    psi = five(seed)
    scn = mg.bipartite_scenario(psi)
    q1 = mg.route_cost(scn, mg.route_one(scn)).total
    q2 = mg.route_cost(scn, mg.route_two(scn)).total
    target = 0.5 * (mutual_information(psi, [["A", "A'"], ["B", "B'"]]) - mutual_information(psi, [["A'"], ["B'"]]))
    assert abs(q1 - target) <= 1e-9 and abs(q2 - target) <= 1e-9


# -- net flow -----------------------------------------------------------


def test_net_flow_separable_flag_is_zero():
    q = SubsystemLayout.of(("A", 2)), SubsystemLayout.of(("B", 2))
    ext = separable_flag_extension([(0.5, ket(q[0], (0,)), ket(q[1], (0,))), (0.5, ket(q[0], (1,)), ket(q[1], (1,)))])
    assert abs(mg.net_flow(ext)) <= 1e-9


def test_net_flow_trivial_bell():
    assert mg.net_flow(trivial_extension(bell_state())) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_net_flow_equals_objective(seed):
    lay = SubsystemLayout.of(("A", 2), ("A'", 2), ("B", 2), ("B'", 2))
    ext = extension(random_density(lay, seed, rank=3), [("A", "A'"), ("B", "B'")])
    assert mg.net_flow(ext) == pytest.approx(cemi_objective(ext), abs=1e-9)


# -- multiparty --------------------------------------------------------


SEVEN = SubsystemLayout.of(("A", 2), ("A'", 2), ("B", 2), ("B'", 2), ("C", 2), ("C'", 2), ("E", 2))


def test_multiparty_two_party_reduces():
    psi = five(4)
    scn = mg.multiparty_scenario(psi, [("A", "A'"), ("B", "B'")], ("E",))
    two = mg.bipartite_scenario(psi)
    assert mg.multiparty_route_cost(scn, ["p0", "p1"]).total == pytest.approx(
        mg.route_cost(two, mg.route_one(two)).total, abs=1e-12)


def test_multiparty_ghz_all_orders():
    psi = tensor(ghz_state(), PureStateVector(SubsystemLayout.of(("E", 1)), [1.0]))
    scn = mg.multiparty_scenario(psi, [("A", ()), ("B", ()), ("C", ())], ("E",))
    spread, totals = mg.order_spread(scn)
    assert len(totals) == 6
    assert all(t == pytest.approx(1.5, abs=1e-12) for t in totals.values())
    assert spread <= 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_multiparty_random_orders_agree(seed):
    scn = mg.multiparty_scenario(random_pure(SEVEN, seed), [("A", "A'"), ("B", "B'"), ("C", "C'")], ("E",))
    spread, totals = mg.order_spread(scn)
    assert spread <= 1e-9
    assert next(iter(totals.values())) == pytest.approx(mg.scenario_objective(scn), abs=1e-9)


def test_multiparty_order_must_be_permutation():
    scn = mg.multiparty_scenario(random_pure(SEVEN, 0), [("A", "A'"), ("B", "B'"), ("C", "C'")], ("E",))
    with pytest.raises(LayoutError):
        mg.multiparty_route_cost(scn, ["p0", "p1"])
