from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robusthedge import builders
from robusthedge.exceptions import ArbitrageAtNode, UnsupportedConstraint
from robusthedge.geometry import cone_closedness, generated_cone
from robusthedge.model import supported_children
from robusthedge.numeric import dot
from robusthedge.one_period import (check_na_node, dual_value_one_step, find_dominating_q,
                                    superhedge_one_step, super_replicates, support_penalty)
from robusthedge.oracle import arbitrage_node, grid_superhedge, random_node
from conftest import tangent_ball_node, one_step_call

F = Fraction


def test_na_holds_for_plus_minus():
    assert check_na_node(one_step_call(), "root").holds


def test_na_fails_for_plus_zero():
    m = builders.one_period([1, 0], builders.box([0], [1]), [["1/2", "1/2"]])
    rep = check_na_node(m, "root")
    assert not rep.holds
    assert rep.witness == (1,) and rep.witness_atom == "a0"


def test_tangent_ball_na_holds_without_dominating_q():
    m = tangent_ball_node()
    assert check_na_node(m, "root").holds
    assert find_dominating_q(m, "root", ["1/3"] * 3) is None
    closed, _ = cone_closedness(generated_cone(m.nodes["root"].constraint))
    assert not closed


def test_dominating_q_max_margin():
    q = find_dominating_q(one_step_call(), "root", ["1/5", "4/5"])
    assert q == (F(1, 2), F(1, 2))
    assert 2 * q[0] - 1 <= 0


def test_dominating_q_single_flat_child():
    m = builders.one_period([0], builders.box([0], [1]), [[1]])
    assert find_dominating_q(m, "root", [1]) == (1,)


def test_call_price_and_strategy():
    res = superhedge_one_step(one_step_call(), "root", {"a0": 1, "a1": 0})
    assert res.price == F(1, 2) and res.strategy == (F(1, 2),)
    assert res.dual_measure == (F(1, 2), F(1, 2))


def test_constant_payoff():
    res = superhedge_one_step(one_step_call(), "root", [3, 3])
    assert res.price == 3 and res.strategy == (0,)


def test_put_under_long_cone():
    m = builders.one_period([1, -1], builders.cone([[1]]), [["1/2", "1/2"]])
    res = superhedge_one_step(m, "root", [0, 1])
    assert res.price == 1 and res.strategy == (0,)
    dual = dual_value_one_step(m, "root", [0, 1])
    assert dual.price == 1 and dual.dual_measure == (0, 1)


def test_dual_call_value():
    dual = dual_value_one_step(one_step_call(), "root", [1, 0])
    assert dual.price == F(1, 2)
    assert dual.dual_measure == (F(1, 2), F(1, 2)) and dual.dual_penalty == 0


def test_arbitrage_refuses_to_price():
    m = builders.one_period([1, 0], builders.box([0], [1]), [["1/2", "1/2"]])
    with pytest.raises(ArbitrageAtNode):
        superhedge_one_step(m, "root", [1, 0])


def test_ball_pricing_unsupported():
    with pytest.raises(UnsupportedConstraint):
        superhedge_one_step(tangent_ball_node(), "root", [1, 0, 0])


def test_support_penalty_values():
    m = one_step_call()
    assert support_penalty(m, "root", ["4/5", "1/5"]) == F(3, 5)
    assert support_penalty(m, "root", ["1/2", "1/2"]) == 0
    cone = builders.one_period([1, -1], builders.cone([[1]]), [["1/2", "1/2"]])
    assert support_penalty(cone, "root", ["4/5", "1/5"]) == float("inf")


def test_grid_oracle_brackets_call():
    rep = grid_superhedge(one_step_call(), {"a0": 1, "a1": 0}, steps=1000, node_id="root")
    assert rep.contains(F(1, 2))
    assert rep.value[1] - rep.value[0] <= 2e-3


def test_grid_oracle_degenerate_for_constants():
    rep = grid_superhedge(one_step_call(), {"a0": 2, "a1": 2}, steps=10, node_id="root")
    assert rep.value[1] == 2


def _payoff(rng, m):
    return {c: int(rng.integers(-3, 4)) for c in m.nodes["root"].children}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_duality_and_certificates(seed):
    rng = np.random.default_rng(seed)
    m = random_node(rng)
    f = _payoff(rng, m)
    primal = superhedge_one_step(m, "root", f)
    dual = dual_value_one_step(m, "root", f)
    assert primal.price == dual.price
    assert super_replicates(m, "root", primal.price, primal.strategy, f)
    assert super_replicates(m, "root", dual.price, dual.strategy, f)
    assert m.nodes["root"].constraint.contains(primal.strategy, True)
    assert m.nodes["root"].constraint.contains(dual.strategy, True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_translation_and_monotonicity(seed):
    rng = np.random.default_rng(seed)
    m = random_node(rng)
    f = _payoff(rng, m)
    g = {k: v + int(rng.integers(0, 3)) for k, v in f.items()}
    p = superhedge_one_step(m, "root", f).price
    assert superhedge_one_step(m, "root", {k: v + 5 for k, v in f.items()}).price == p + 5
    assert superhedge_one_step(m, "root", g).price >= p


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_ftap_both_directions(seed):
    rng = np.random.default_rng(seed)
    m = random_node(rng) if seed % 2 else arbitrage_node(rng)
    node = m.nodes["root"]
    rep = check_na_node(m, "root")
    doms = [find_dominating_q(m, "root", P) for P in node.extremes]
    assert rep.holds == all(q is not None for q in doms)
    if not rep.holds:
        kids = supported_children(m, "root")
        incs = dict(zip(node.children, m.increments("root")))
        gains = [dot(rep.witness, incs[k]) for k in kids]
        assert min(gains) >= 0 and max(gains) > 0
        assert dot(rep.witness, incs[rep.witness_atom]) > 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_closedness_of_limits(seed):
    # f_n -> f from above; a price bound valid along the sequence survives the limit
    rng = np.random.default_rng(seed)
    m = random_node(rng)
    f = _payoff(rng, m)
    prices = [superhedge_one_step(m, "root", {k: v + F(1, n) for k, v in f.items()}).price
              for n in range(1, 8)]
    x = min(prices)
    assert superhedge_one_step(m, "root", f).price <= x


@pytest.mark.parametrize("mode", ["float"])
def test_float_mode_matches_exact(mode):
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = random_node(rng)
        f = _payoff(rng, m)
        from robusthedge.model import dumps, loads
        mf = loads(dumps(m), mode)
        pe = superhedge_one_step(m, "root", f).price
        pf = superhedge_one_step(mf, "root", f).price
        df = dual_value_one_step(mf, "root", f).price
        assert abs(float(pe) - pf) <= 1e-9 and abs(pf - df) <= 1e-9
