"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line; the lines are also collected
into the pytest terminal summary.  Run directly with
``python tests/test_acceptance.py`` for the bare table.
"""
import time
from fractions import Fraction

import numpy as np

from robusthedge import builders
from robusthedge.american import count_stopping_rules, rule_table, superhedge_american
from robusthedge.geometry import cone_closedness, generated_cone
from robusthedge.lp import solve, verify
from robusthedge.model import dumps, loads, reachable_nodes, supported_children
from robusthedge.multi_period import (decomposition_holds, dual_price_joint,
                                      measure_from_kernels, optional_decomposition, penalty_process,
                                      strategy_admissible, superhedge_european,
                                      verify_local_supermartingale)
from robusthedge.numeric import dot
from robusthedge.one_period import (check_na_node, dual_value_one_step, find_dominating_q,
                                    super_replicates, superhedge_one_step, support_penalty)
from robusthedge.oracle import (arbitrage_node, grid_superhedge, minimax_semistatic,
                                random_american_payoff, random_cone_instance, random_lp,
                                random_node, random_payoff, random_tree)
from robusthedge.semistatic import (certificate_holds, check_completeness, option_payoffs,
                                    price_semistatic, replication_predicates)

F = Fraction
RESULTS = []


def report(number, title, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] AC{number:<2} {title}" + (f" -- {detail}" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def _float(model):
    return loads(dumps(model), "float")


def _node_payoff(rng, m):
    return {c: int(rng.integers(-3, 6)) for c in m.nodes["root"].children}


def _node_corpus():
    rng = np.random.default_rng(1001)
    return [random_node(rng) for _ in range(200)]


# -- 1 -------------------------------------------------------------------------------

def test_ac1_one_period_duality():
    rng = np.random.default_rng(1)
    worst, exact_ok, n = 0.0, True, 0
    for m in _node_corpus():
        f = _node_payoff(rng, m)
        p, d = superhedge_one_step(m, "root", f), dual_value_one_step(m, "root", f)
        exact_ok &= p.price == d.price and super_replicates(m, "root", p.price, p.strategy, f)
        mf = _float(m)
        gap = abs(superhedge_one_step(mf, "root", f).price - dual_value_one_step(mf, "root", f).price)
        worst = max(worst, gap)
        n += 1
    report(1, "one-period duality", exact_ok and worst <= 1e-9,
           f"{n} nodes, exact equal={exact_ok}, max float gap={worst:.2e}")


# -- 2 -------------------------------------------------------------------------------

def _verify_na_certificates(m):
    node = m.nodes["root"]
    rep = check_na_node(m, "root")
    doms = [find_dominating_q(m, "root", P) for P in node.extremes]
    agree = rep.holds == all(q is not None for q in doms)
    ok = True
    incs = dict(zip(node.children, m.increments("root")))
    if rep.holds:
        for P, q in zip(node.extremes, doms):
            ok &= sum(q) == 1 and all(qi > 0 for qi, pi in zip(q, P) if pi > 0)
            ok &= support_penalty(m, "root", q) == 0
    else:
        gains = [dot(rep.witness, incs[k]) for k in supported_children(m, "root")]
        ok &= min(gains) >= 0 and max(gains) > 0
        ok &= node.constraint.contains(rep.witness, True)
    return agree, ok, rep.holds


def test_ac2_one_period_ftap():
    rng = np.random.default_rng(2)
    corpus = _node_corpus() + [arbitrage_node(rng) for _ in range(100)]
    agree = certs = 0
    fails = 0
    for m in corpus:
        a, c, holds = _verify_na_certificates(m)
        agree += a
        certs += c
        fails += not holds
    n = len(corpus)
    report(2, "one-period FTAP", agree == n and certs == n and fails == 100,
           f"{n} nodes ({fails} arbitrage), verdict agreement {agree}/{n}, certificates {certs}/{n}")


# -- 3 -------------------------------------------------------------------------------

def test_ac3_tangent_ball_counterexample():
    incs = [[0, -1], ["1/2", -1], [1, -1]]
    m = builders.one_period(incs, builders.ball([0, 1], 1), [["1/3", "1/3", "1/3"]])
    na = check_na_node(m, "root").holds
    q = find_dominating_q(m, "root", ["1/3", "1/3", "1/3"])
    closed, witness = cone_closedness(generated_cone(m.nodes["root"].constraint))
    report(3, "tangent-ball counterexample", na and q is None and not closed,
           f"NA={na}, dominating q={q}, closed={closed}, witness={witness}")


# -- 4 and 5 ---------------------------------------------------------------------------

def _tree_corpus():
    rng = np.random.default_rng(4004)
    out = []
    for _ in range(100):
        m = random_tree(rng, max_T=4, max_branch=3, max_d=2)
        out.append((m, random_payoff(rng, m)))
    return out


def test_ac4_multi_period_duality():
    exact_ok, worst = True, 0.0
    corpus = _tree_corpus()
    for m, f in corpus:
        exact_ok &= superhedge_european(m, f).price == dual_price_joint(m, f)[0]
        mf = _float(m)
        worst = max(worst, abs(superhedge_european(mf, f).price - dual_price_joint(mf, f)[0]))
    report(4, "multi-period duality", exact_ok and worst <= 1e-9,
           f"{len(corpus)} trees, exact equal={exact_ok}, max float gap={worst:.2e}")


def _q_sampler(rng, m):
    """Kernels for random Q with finite penalty: any law on the support at
    polytope nodes, mixtures of dominating laws at cone nodes."""
    pools = {}
    for nid in reachable_nodes(m):
        node = m.nodes[nid]
        if node.is_leaf or not node.constraint.is_cone:
            continue
        pools[nid] = [find_dominating_q(m, nid, P) for P in node.extremes]

    def sample():
        kernels = {}
        for nid in reachable_nodes(m):
            node = m.nodes[nid]
            if node.is_leaf:
                continue
            if nid in pools:
                w = rng.integers(1, 5, size=len(pools[nid]))
                k = [sum(F(int(wi), int(w.sum())) * q[i] for wi, q in zip(w, pools[nid]))
                     for i in range(len(node.children))]
            else:
                supp = supported_children(m, nid)
                w = {c: int(rng.integers(0, 4)) for c in supp}
                if not sum(w.values()):
                    w[supp[0]] = 1
                s = sum(w.values())
                k = [F(w.get(c, 0), s) for c in node.children]
            kernels[nid] = k
        return measure_from_kernels(m, kernels)

    return sample


def test_ac5_optional_decomposition():
    rng = np.random.default_rng(5)
    dec_ok = sm_ok = 0
    corpus = _tree_corpus()
    for m, f in corpus:
        V = superhedge_european(m, f).values
        dec = optional_decomposition(m, V)
        reach = [n for n in reachable_nodes(m) if not m.nodes[n].is_leaf]
        dec_ok += decomposition_holds(m, V, dec) and strategy_admissible(
            m, {n: dec.strategy[n] for n in reach})
        sample = _q_sampler(rng, m)
        good = True
        for _ in range(50):
            Q = sample()
            good &= all(b != float("inf") for b in penalty_process(m, Q).values())
            good &= verify_local_supermartingale(m, V, Q)
        sm_ok += good
    n = len(corpus)
    report(5, "optional decomposition", dec_ok == n and sm_ok == n,
           f"identity/monotone/admissible {dec_ok}/{n}, local supermartingale (50 Q) {sm_ok}/{n}")


# -- 6 -------------------------------------------------------------------------------

def _rule_trees(rng, count, kinds):
    out = []
    while len(out) < count:
        m = random_tree(rng, max_T=3, max_branch=3, kinds=kinds)
        if count_stopping_rules(m) <= 60:
            out.append((m, random_american_payoff(rng, m)))
    return out


def test_ac6_american():
    rng = np.random.default_rng(6)
    a = b = c = 0
    mixed = _rule_trees(rng, 30, ("box", "polytope", "cone"))
    cones = _rule_trees(rng, 15, ("cone",))
    for m, f in mixed + cones:
        sup = superhedge_american(m, f)
        table = rule_table(m, f)
        a += sup.price == max(r.sup_stopped for r in table)
        sub = max(r.inf_terminal for r in table)
        hat = max(r.sup_terminal for r in table)
        b += sub <= hat <= sup.price
    for m, f in cones:
        table = rule_table(m, f)
        c += max(r.sup_terminal for r in table) == superhedge_american(m, f).price
    n = len(mixed) + len(cones)
    report(6, "American prices", a == n and b == n and c == len(cones),
           f"(a) Snell = enumeration {a}/{n}, (b) sub <= hat <= super {b}/{n}, "
           f"(c) cone hat = super {c}/{len(cones)}")


# -- 7 -------------------------------------------------------------------------------

def test_ac7_worked_instances():
    m = builders.binomial(2)
    call = {"uu": 2, "ud": 0, "du": 0, "dd": 0}
    hedge = superhedge_european(m, call)
    grid = grid_superhedge(m, call, steps=1000)
    ok_call = (hedge.price == F(1, 2) and hedge.strategy["root"] == (F(1, 2),)
               and hedge.strategy["u"] == (1,) and hedge.strategy["d"] == (0,)
               and grid.contains(hedge.price))
    am = {"root": 0, "u": 1, "d": 0, "uu": 2, "ud": 0, "du": 0, "dd": 0}
    ok_am = superhedge_american(m, am).price == F(1, 2)
    lin = superhedge_european(m, {"uu": -2, "ud": 0, "du": 0, "dd": 2})
    ok_lin = lin.price == 2 and all(h == (0,) for h in lin.strategy.values())
    report(7, "worked instances", ok_call and ok_am and ok_lin,
           f"call {hedge.price} H0={hedge.strategy['root'][0]} grid {grid.value[0]:.4f}..{grid.value[1]:.4f}; "
           f"American {superhedge_american(m, am).price}; linear {lin.price}")


# -- 8 -------------------------------------------------------------------------------

def test_ac8_semistatic():
    cone = builders.cone([[1], [-1]])
    tri = builders.one_period([1, 0, -1], cone, [["1/3", "1/3", "1/3"]])
    g = [{"a0": "1/2", "a1": "-1/2", "a2": "1/2"}]
    f = {"a0": 1, "a1": 0, "a2": 0}
    cert = price_semistatic(tri, f, g)
    ok_tri = cert.price == F(1, 4) and certificate_holds(tri, f, option_payoffs(tri, g), cert)
    four = builders.one_period([2, 1, -1, -2], cone, [["1/4"] * 4])
    ok_complete = check_completeness(tri, g) and not check_completeness(
        four, [{"a0": 1, "a1": -1, "a2": -1, "a3": 1}])
    rng = np.random.default_rng(8)
    agree, worst = 0, 0.0
    for _ in range(50):
        m, opts = random_cone_instance(rng, max_T=2, max_d=1, max_opts=1)
        pay = random_payoff(rng, m)
        p = replication_predicates(m, pay, opts)
        agree += p["a"] == p["b"] == p["c"]
        lp_value = price_semistatic(m, pay, opts).price
        worst = max(worst, abs(minimax_semistatic(m, pay, opts).value - float(lp_value)))
    report(8, "semi-static hedging", ok_tri and ok_complete and agree == 50 and worst <= 1e-7,
           f"trinomial price {cert.price}, completeness ok={ok_complete}, "
           f"(a)(b)(c) agreement {agree}/50, max minimax gap={worst:.2e}")


# -- 9 -------------------------------------------------------------------------------

def test_ac9_monotone_convergence():
    rng = np.random.default_rng(9)
    ok = 0
    for _ in range(50):
        m = random_node(rng)
        v = {c: int(rng.integers(-3, 10)) for c in m.nodes["root"].children}
        target = superhedge_one_step(m, "root", v).price
        prices = [superhedge_one_step(m, "root", {c: min(x, n) for c, x in v.items()}).price
                  for n in range(min(v.values()), max(v.values()) + 1)]
        ok += all(a <= b for a, b in zip(prices, prices[1:])) and prices[-1] == target
    report(9, "monotone convergence", ok == 50, f"{ok}/50 nodes reach the limit with gap 0")


# -- 10 ------------------------------------------------------------------------------

def test_ac10_lp_module():
    rng = np.random.default_rng(10)
    certs, worst, statuses = 0, 0.0, {}
    for i in range(500):
        lp = random_lp(rng, "infeasible" if i % 5 == 0 else "feasible")
        ex, fl = solve(lp, "exact"), solve(lp, "float")
        statuses[ex.status.value] = statuses.get(ex.status.value, 0) + 1
        certs += ex.status == fl.status and verify(lp, ex) and verify(lp, fl, 1e-7)
        if ex.optimal:
            worst = max(worst, abs(float(ex.objective) - fl.objective))
    report(10, "LP module", certs == 500 and worst <= 1e-7,
           f"500 LPs {statuses}, certificates {certs}/500, max exact/float gap={worst:.2e}")


if __name__ == "__main__":
    import sys
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_ac"):
            start = time.perf_counter()
            try:
                fn()
            except AssertionError:
                failed += 1
            print(f"       ({time.perf_counter() - start:.1f}s)")
    sys.exit(1 if failed else 0)
