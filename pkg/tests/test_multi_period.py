from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robusthedge import builders
from robusthedge.exceptions import ArbitrageDetected, InfinitePenalty, NotASupermartingale
from robusthedge.model import reachable_nodes
from robusthedge.multi_period import (check_na_global, decomposition_holds, dominates,
                                      dual_price_joint, extreme_selection, hedge_holds,
                                      in_martingale_set, measure_from_kernels, optional_decomposition,
                                      penalty_process, strategy_admissible, superhedge_european,
                                      verify_local_supermartingale)
from robusthedge.one_period import dual_value_one_step
from robusthedge.oracle import grid_superhedge, random_payoff, random_tree

F = Fraction
BOX = builders.box([0], [1])


def _defect_tree(polar):
    """Three-way root (+1, 0, -1); the middle child is the defective node
    with increments {+1, 0}.  With ``polar`` the root never charges it."""
    def branches(path):
        if path == ("m",):
            return [("u", 1), ("z", 0)]
        return [("u", 1), ("m", 0), ("d", -1)]

    def extremes(path):
        if path == ():
            return [["1/2", 0, "1/2"]] if polar else [["1/3", "1/3", "1/3"]]
        if path == ("m",):
            return [["1/2", "1/2"]]
        return [["1/3", "1/3", "1/3"]]

    return builders.build_tree(2, [0], branches, lambda p: BOX, extremes)


def test_binomial_na(binom2):
    rep = check_na_global(binom2)
    assert rep.holds and not rep.failing_nodes and not rep.polar_nodes


def test_reachable_defect_fails():
    rep = check_na_global(_defect_tree(polar=False))
    assert not rep.holds
    assert [r.node_id for r in rep.failing_nodes] == ["m"]
    assert rep.failing_nodes[0].witness == (1,)


def test_polar_defect_is_harmless():
    rep = check_na_global(_defect_tree(polar=True))
    assert rep.holds
    assert [r.node_id for r in rep.polar_nodes] == ["m"]


def test_call_price_and_strategy(binom2, call2):
    hedge = superhedge_european(binom2, call2)
    assert hedge.price == F(1, 2)
    assert hedge.strategy["root"] == (F(1, 2),)
    assert hedge.strategy["u"] == (1,) and hedge.strategy["d"] == (0,)
    assert hedge_holds(binom2, hedge.price, hedge.strategy, call2)
    assert dual_price_joint(binom2, call2)[0] == F(1, 2)


def test_call_grid_oracle(binom2, call2):
    assert grid_superhedge(binom2, call2, steps=100).contains(F(1, 2))


def test_constant_claim(binom2):
    hedge = superhedge_european(binom2, {a: 3 for a in binom2.leaves})
    assert hedge.price == 3
    assert all(h == (0,) for h in hedge.strategy.values())
    assert dual_price_joint(binom2, {a: 3 for a in binom2.leaves})[0] == 3


def test_linear_claim(binom2):
    f = {"uu": -2, "ud": 0, "du": 0, "dd": 2}
    hedge = superhedge_european(binom2, f)
    assert hedge.price == 2
    assert all(h == (0,) for h in hedge.strategy.values())


def test_arbitrage_blocks_pricing():
    with pytest.raises(ArbitrageDetected):
        superhedge_european(_defect_tree(False), {a: 0 for a in _defect_tree(False).leaves})


def test_one_period_joint_equals_one_step():
    m = builders.binomial(1)
    assert dual_price_joint(m, {"u": 1, "d": 0})[0] == dual_value_one_step(m, "root", [0, 1]).price


def test_penalty_process(binom2):
    Q = measure_from_kernels(binom2, {n: {n + "u" if n != "root" else "u": "4/5",
                                          n + "d" if n != "root" else "d": "1/5"}
                                      for n in binom2.internal_nodes})
    B = penalty_process(binom2, Q)
    assert B["u"] == F(3, 5) and B["uu"] == F(6, 5) and B["dd"] == F(6, 5)
    half = measure_from_kernels(binom2, {n: ["1/2", "1/2"] for n in binom2.internal_nodes})
    assert all(v == 0 for v in penalty_process(binom2, half).values())
    cone = builders.binomial(2, constraint=builders.cone([[1]]))
    Qc = measure_from_kernels(cone, {"root": {"u": "4/5", "d": "1/5"}, "u": [1, 0], "d": [1, 0]})
    with pytest.raises(InfinitePenalty):
        penalty_process(cone, Qc)


def test_local_supermartingale_checks(binom2, call2):
    V = superhedge_european(binom2, call2).values
    Q = measure_from_kernels(binom2, {n: ["3/10", "7/10"] for n in binom2.internal_nodes})
    assert verify_local_supermartingale(binom2, V, Q)
    assert verify_local_supermartingale(binom2, {n: 4 for n in binom2.nodes}, Q)
    rising = {n: binom2.nodes[n].depth for n in binom2.nodes}
    half = measure_from_kernels(binom2, {n: ["1/2", "1/2"] for n in binom2.internal_nodes})
    assert not verify_local_supermartingale(binom2, rising, half)


def test_decomposition_of_call(binom2, call2):
    hedge = superhedge_european(binom2, call2)
    dec = optional_decomposition(binom2, hedge.values)
    assert all(c == 0 for c in dec.consumption.values())
    assert dec.strategy == hedge.strategy
    lifted = dict(hedge.values, root=F(7, 10))
    dec = optional_decomposition(binom2, lifted)
    assert dec.consumption["u"] == dec.consumption["d"] == F(1, 5)
    assert dec.strategy["root"] == (F(1, 2),)
    assert decomposition_holds(binom2, lifted, dec)


def test_decomposition_of_constant(binom2):
    dec = optional_decomposition(binom2, {n: 2 for n in binom2.nodes})
    assert all(c == 0 for c in dec.consumption.values())
    assert all(h == (0,) for h in dec.strategy.values())


def test_not_a_supermartingale(binom2):
    with pytest.raises(NotASupermartingale) as err:
        optional_decomposition(binom2, {n: binom2.nodes[n].depth for n in binom2.nodes})
    assert err.value.node_id in binom2.internal_nodes


def _sample_q(rng, m):
    """Random Q in the martingale set: extreme dual laws mixed with random weights."""
    from robusthedge.one_period import find_dominating_q
    kernels = {}
    for nid in reachable_nodes(m):
        node = m.nodes[nid]
        if node.is_leaf:
            continue
        P = node.extremes[int(rng.integers(len(node.extremes)))]
        kernels[nid] = find_dominating_q(m, nid, P)
    return measure_from_kernels(m, kernels)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_recursion_equals_joint_lp(seed):
    rng = np.random.default_rng(seed)
    m = random_tree(rng, max_T=3)
    f = random_payoff(rng, m)
    hedge = superhedge_european(m, f)
    value, Q = dual_price_joint(m, f)
    assert hedge.price == value
    assert hedge_holds(m, hedge.price, hedge.strategy, f)
    assert strategy_admissible(m, {n: hedge.strategy[n] for n in reachable_nodes(m)
                                   if not m.nodes[n].is_leaf})
    dec = optional_decomposition(m, hedge.values)
    assert decomposition_holds(m, hedge.values, dec)
    for _ in range(5):
        Q = _sample_q(rng, m)
        assert in_martingale_set(m, Q)
        assert verify_local_supermartingale(m, hedge.values, Q)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6))
def test_ftap_dominating_product(seed):
    rng = np.random.default_rng(seed)
    m = random_tree(rng, max_T=2)
    rep = check_na_global(m, extreme_selection(m))
    assert rep.holds
    Q = rep.dominating_measure
    P = measure_from_kernels(m, extreme_selection(m))
    assert Q is not None and in_martingale_set(m, Q) and dominates(m, Q, P)


def test_float_mode_agrees():
    rng = np.random.default_rng(11)
    from robusthedge.model import dumps, loads
    for _ in range(10):
        m = random_tree(rng, max_T=3)
        f = random_payoff(rng, m)
        mf = loads(dumps(m), "float")
        pe = superhedge_european(m, f).price
        pf = superhedge_european(mf, f).price
        jf = dual_price_joint(mf, f)[0]
        assert abs(float(pe) - pf) <= 1e-9 and abs(pf - jf) <= 1e-9
