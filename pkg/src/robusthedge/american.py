"""Super- and sub-hedging of American options on the tree.

Stopping rules are first-hitting rules of the raw filtration: a set of nodes
that every root-leaf path meets exactly once.  The super-hedging price comes
from the penalised Snell recursion; the sub-hedging price has no recursion
(``sup`` over rules and ``inf`` over measures do not commute) and is computed
by enumerating rules, one LP per rule.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .exceptions import CapExceeded
from .lp import MAX, MIN, Status
from .model import reachable_nodes, supported_children
from .multi_period import (_require_na, gains_process, optional_decomposition,
                           solve_joint, superhedge_european)
from .numeric import convert
from .one_period import superhedge_one_step

DEFAULT_CAP = 10**5


@dataclass(frozen=True)
class StoppingRule:
    """Exercise nodes; every root-leaf path passes exactly one of them."""

    stops: frozenset

    def stop_node(self, model, node_id):
        """First node of ``stops`` on the root path to ``node_id`` (or None)."""
        for nid in model.path(node_id):
            if nid in self.stops:
                return nid
        return None

    def continuation_nodes(self, model):
        """Non-leaf nodes strictly before the exercise time."""
        return {nid for nid in model.internal_nodes if self.stop_node(model, nid) is None}


def count_stopping_rules(model, node_id=None):
    node = model.nodes[model.root if node_id is None else node_id]
    if node.is_leaf:
        return 1
    prod = 1
    for c in node.children:
        prod *= count_stopping_rules(model, c)
    return 1 + prod


def _rules(model, nid):
    node = model.nodes[nid]
    yield frozenset([nid])
    if node.is_leaf:
        return
    # product over children, lazily
    def combos(kids):
        if not kids:
            yield frozenset()
            return
        for head in _rules(model, kids[0]):
            for tail in combos(kids[1:]):
                yield head | tail
    yield from combos(list(node.children))


def enumerate_stopping_rules(model, cap=DEFAULT_CAP):
    count = count_stopping_rules(model)
    if count > cap:
        raise CapExceeded(count, cap)
    for stops in _rules(model, model.root):
        yield StoppingRule(stops)


def node_payoff(model, f):
    """Normalise an American payoff to a dict covering every reachable node."""
    f = {str(k): convert(v, model.exact) for k, v in f.items()}
    missing = [n for n in reachable_nodes(model) if n not in f]
    if missing:
        raise ValueError(f"American payoff missing at nodes {missing}")
    return f


def stopped_payoff(model, f, rule):
    """Terminal payoff ``f_tau`` as a function of the leaf."""
    return {leaf: f[rule.stop_node(model, leaf)] for leaf in model.leaves
            if rule.stop_node(model, leaf) in f}


@dataclass
class AmericanHedge:
    price: object
    strategy: dict
    values: dict
    consumption: dict
    verified_rules: int = None


def snell_envelope(model, f):
    """``V_t = max(f_t, one-step super-hedging price of V_{t+1})``."""
    reach = reachable_nodes(model)
    V = {}
    for nid in reversed(reach):
        node = model.nodes[nid]
        if node.is_leaf:
            V[nid] = f[nid]
            continue
        kids = supported_children(model, nid)
        cont = superhedge_one_step(model, nid, {c: V[c] for c in kids}, check_na=False).price
        V[nid] = max(f[nid], cont)
    return V


def superhedge_american(model, f, cap=DEFAULT_CAP, verify=True):
    """Penalised Snell envelope and a strategy covering every exercise time.

    With ``verify`` the strategy is checked against every enumerated rule
    when the rule count fits under ``cap``; otherwise only the node-level
    inequality ``price + (H.S)_t >= f_t`` (which implies all rules) is
    checked.
    """
    _require_na(model)
    f = node_payoff(model, f)
    V = snell_envelope(model, f)
    dec = optional_decomposition(model, V, check=False)
    price = V[model.root]
    out = AmericanHedge(price, dec.strategy, V, dec.consumption)
    if verify:
        if not covers_all_nodes(model, price, dec.strategy, f):
            raise RuntimeError("super-hedging strategy fails the node-level check")
        if count_stopping_rules(model) <= cap:
            n = 0
            for rule in enumerate_stopping_rules(model, cap):
                if not covers_rule(model, price, dec.strategy, f, rule):
                    raise RuntimeError(f"strategy fails for stopping rule {sorted(rule.stops)}")
                n += 1
            out.verified_rules = n
    return out


def covers_all_nodes(model, price, strategy, f, tol=None):
    slack = 0 if model.exact else (1e-9 if tol is None else tol)
    g = gains_process(model, strategy)
    return all(price + g[n] >= f[n] - slack for n in reachable_nodes(model))


def covers_rule(model, price, strategy, f, rule, tol=None):
    """``price + (H.S)_tau >= f_tau`` on every reachable path."""
    slack = 0 if model.exact else (1e-9 if tol is None else tol)
    g = gains_process(model, strategy)
    reach = set(reachable_nodes(model))
    for n in rule.stops:
        if n in reach and price + g[n] < f[n] - slack:
            return False
    return True


@dataclass
class RuleValues:
    rule: StoppingRule
    sup_stopped: object
    sup_terminal: object
    inf_terminal: object


def rule_values(model, f, rule):
    """Per-rule LP values.

    * ``sup_stopped``: sup over measures of ``E[f_tau - B_tau]``;
    * ``sup_terminal``: sup of ``E[f_tau - B_T]``;
    * ``inf_terminal``: inf of ``E[f_tau + B_T]``.
    """
    payoff = stopped_payoff(model, f, rule)
    before = rule.continuation_nodes(model)
    vals = []
    for sense, penalized in ((MAX, before), (MAX, "all"), (MIN, "all")):
        res, _, _, _ = solve_joint(model, payoff, sense, penalized)
        if res.status is not Status.OPTIMAL:
            raise RuntimeError(f"per-rule LP status {res.status.value}")
        vals.append(res.objective)
    return RuleValues(rule, *vals)


def _rule_values_star(args):
    return rule_values(*args)


def rule_table(model, f, cap=DEFAULT_CAP, jobs=1):
    f = node_payoff(model, f)
    rules = list(enumerate_stopping_rules(model, cap))
    if jobs and jobs > 1 and len(rules) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_rule_values_star, [(model, f, r) for r in rules]))
    return [rule_values(model, f, r) for r in rules]


@dataclass
class SubHedge:
    price: object
    rule: StoppingRule
    strategy: dict


def subhedge_american(model, f, cap=DEFAULT_CAP, jobs=1):
    """``max`` over rules of ``inf_Q E_Q[f_tau + B_T^Q]``.

    The strategy is the super-hedge of ``-f_tau`` for the optimal rule, so
    that ``f_tau + (H.S)_T >= price`` quasi-surely.
    """
    _require_na(model)
    f = node_payoff(model, f)
    table = rule_table(model, f, cap, jobs)
    best = table[0]
    for row in table[1:]:
        if row.inf_terminal > best.inf_terminal:
            best = row
    payoff = stopped_payoff(model, f, best.rule)
    hedge = superhedge_european(model, {k: -v for k, v in payoff.items()}, check=False)
    return SubHedge(best.inf_terminal, best.rule, hedge.strategy)


def hat_price(model, f, cap=DEFAULT_CAP, jobs=1):
    """``max`` over rules of ``sup_Q E_Q[f_tau - B_T^Q]``: the price when the
    exercise rule is announced in advance."""
    _require_na(model)
    table = rule_table(model, f, cap, jobs)
    return max(row.sup_terminal for row in table)
