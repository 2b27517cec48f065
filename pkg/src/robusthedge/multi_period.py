"""Multi-period no-arbitrage, super-hedging recursion, joint dual LP and the
constrained optional decomposition.

Node-indexed quantities (value processes, strategies, penalties) are plain
dicts keyed by node id.  Only quasi-surely reachable nodes carry values; the
others are polar and irrelevant for every price.
"""
from dataclasses import dataclass, field

from .exceptions import (ArbitrageDetected, InfinitePenalty, NotASupermartingale,
                         UnsupportedConstraint)
from .lp import EQ, GE, LE, MAX, LinearProgram, Status, solve
from .model import reachable_leaves, reachable_nodes, supported_children
from .numeric import convert, dot, is_neg, is_pos, is_zero
from .one_period import (check_na_node, find_dominating_q,
                         superhedge_one_step, support_penalty)


@dataclass
class DualMeasure:
    """A pricing measure on the leaves with its per-node kernels.

    ``kernels`` holds, for every charged non-leaf node, the conditional law
    over that node's children; ``penalty`` is filled by
    :func:`penalty_process` when the measure has finite penalty.
    """

    leaf_probs: dict
    kernels: dict
    mass: dict
    penalty: dict = None

    def charged(self, node_id):
        m = self.mass.get(node_id, 0)
        return m > 0 if not isinstance(m, float) else m > 1e-12


@dataclass
class GlobalNAReport:
    holds: bool
    failing_nodes: list
    polar_nodes: list
    node_reports: dict
    dominating_measure: DualMeasure = None


@dataclass
class EuropeanHedge:
    price: object
    strategy: dict
    values: dict


@dataclass
class Decomposition:
    strategy: dict
    consumption: dict


# -- measures -----------------------------------------------------------------

def _masses(model, leaf_probs):
    zero = model.zero()
    mass = {}
    for nid in reversed(list(model.nodes)):
        node = model.nodes[nid]
        if node.is_leaf:
            mass[nid] = leaf_probs.get(nid, zero)
        else:
            mass[nid] = sum((mass[c] for c in node.children), zero)
    return mass


def measure_from_leaves(model, leaf_probs):
    exact = model.exact
    probs = {k: convert(v, exact) for k, v in leaf_probs.items()}
    mass = _masses(model, probs)
    kernels = {}
    for nid in model.internal_nodes:
        m = mass[nid]
        if is_pos(m, exact):
            kernels[nid] = tuple(mass[c] / m for c in model.nodes[nid].children)
    return DualMeasure(probs, kernels, mass)


def measure_from_kernels(model, kernels):
    """Product measure from one conditional law per non-leaf node.

    A kernel is a vector in canonical child order or a dict keyed by child id.
    """
    exact = model.exact
    one = convert(1, exact)
    probs = {}

    def walk(nid, p):
        node = model.nodes[nid]
        if node.is_leaf:
            probs[nid] = p
            return
        k = kernels.get(nid)
        if isinstance(k, dict):
            k = [k.get(c, 0) for c in node.children]
        for c, w in zip(node.children, k if k is not None else [0] * len(node.children)):
            w = convert(w, exact)
            if is_pos(w, exact) and is_pos(p, exact):
                walk(c, p * w)

    walk(model.root, one)
    return measure_from_leaves(model, probs)


def extreme_selection(model, choice=None):
    """Kernels choosing one extreme law per node (index 0 unless ``choice``)."""
    choice = choice or {}
    return {nid: model.nodes[nid].extremes[choice.get(nid, 0)] for nid in model.internal_nodes}


def mixture_selection(model):
    """Uniform mixture of the extremes at every node; it charges exactly the
    quasi-sure support."""
    out = {}
    for nid in model.internal_nodes:
        ext = model.nodes[nid].extremes
        k = len(ext)
        out[nid] = tuple(sum(col) / k for col in zip(*ext))
    return out


def dominates(model, Q, P):
    """Every leaf charged by ``P`` is charged by ``Q``."""
    return all(Q.leaf_probs.get(leaf, 0) > 0 for leaf, p in P.leaf_probs.items() if p > 0)


def in_martingale_set(model, Q):
    """``Q`` charges only quasi-sure paths and makes every admissible gain a
    supermartingale (zero penalty at every charged node)."""
    exact = model.exact
    reach = set(reachable_nodes(model))
    for leaf, p in Q.leaf_probs.items():
        if is_pos(p, exact) and leaf not in reach:
            return False
    for nid, k in Q.kernels.items():
        if is_pos(support_penalty(model, nid, k), exact):
            return False
    return True


# -- no-arbitrage -------------------------------------------------------------

def check_na_global(model, selection=None):
    """Quasi-sure no-arbitrage: every node where NA fails must be polar.

    With ``selection`` (one law per node, e.g. :func:`extreme_selection`)
    and NA holding, also builds the product pricing measure dominating the
    product of the selected laws.
    """
    reach = set(reachable_nodes(model))
    reports = {nid: check_na_node(model, nid) for nid in model.internal_nodes}
    failing = [r for nid, r in reports.items() if not r.holds and nid in reach]
    polar = [r for nid, r in reports.items() if not r.holds and nid not in reach]
    out = GlobalNAReport(not failing, failing, polar, reports)
    if out.holds and selection is not None:
        out.dominating_measure = dominating_measure(model, selection)
    return out


def dominating_measure(model, selection):
    """Product of the one-step dominating laws at every reachable node."""
    kernels = {}
    for nid in reachable_nodes(model):
        if model.nodes[nid].is_leaf:
            continue
        q = find_dominating_q(model, nid, selection[nid])
        if q is None:
            return None
        kernels[nid] = q
    return measure_from_kernels(model, kernels)


def _require_na(model):
    rep = check_na_global(model)
    if not rep.holds:
        raise ArbitrageDetected(rep.failing_nodes)
    return rep


# -- primal recursion -----------------------------------------------------------

def leaf_values(model, f):
    """Normalise a terminal payoff to a dict over the reachable leaves."""
    if not isinstance(f, dict):
        f = dict(zip(model.leaves, f))
    f = {str(k): v for k, v in f.items()}
    missing = [leaf for leaf in reachable_leaves(model) if leaf not in f]
    if missing:
        raise ValueError(f"payoff missing at leaves {missing}")
    return {k: convert(v, model.exact) for k, v in f.items() if k in model.nodes}


def superhedge_european(model, f, check=True):
    """Backward recursion ``V_T = f``, ``V_t = one-step price of V_{t+1}``."""
    if check:
        _require_na(model)
    f = leaf_values(model, f)
    reach = reachable_nodes(model)
    values, strategy = {}, {}
    for nid in reversed(reach):
        node = model.nodes[nid]
        if node.is_leaf:
            values[nid] = f[nid]
            continue
        kids = supported_children(model, nid)
        step = superhedge_one_step(model, nid, {c: values[c] for c in kids}, check_na=False)
        values[nid] = step.price
        strategy[nid] = step.strategy
    for nid in model.internal_nodes:
        strategy.setdefault(nid, model.zero_vector())
    return EuropeanHedge(values[model.root], strategy, values)


def gains_process(model, strategy):
    """``(H.S)`` at every node: accumulated gains along the root path."""
    zero = model.zero()
    out = {model.root: zero}
    for nid in model.nodes:
        node = model.nodes[nid]
        if node.is_leaf:
            continue
        H = strategy.get(nid, model.zero_vector())
        for c, inc in zip(node.children, model.increments(nid)):
            out[c] = out[nid] + dot(H, inc)
    return out


def hedge_holds(model, price, strategy, f, tol=None):
    """``price + (H.S)_T >= f`` on every reachable leaf."""
    exact = model.exact
    slack = 0 if exact else (1e-9 if tol is None else tol)
    g = gains_process(model, strategy)
    f = leaf_values(model, f)
    return all(price + g[leaf] >= f[leaf] - slack for leaf in reachable_leaves(model))


def strategy_admissible(model, strategy):
    return all(model.nodes[nid].constraint.contains(H, model.exact)
               for nid, H in strategy.items())


# -- joint dual LP ----------------------------------------------------------------

@dataclass
class _JointLayout:
    leaves: list
    penalty_vars: dict = field(default_factory=dict)
    extra_rows: int = 0


def joint_lp(model, payoff, sense=MAX, penalized="all", extra_rows=(), cones_only=False):
    """LP over leaf probabilities of the quasi-sure leaves.

    Conditional constraints are multiplied through by the node mass so they
    stay linear in the leaf probabilities (and hold vacuously on null nodes).
    ``penalized`` selects the nodes whose support-function penalty enters the
    objective (``"all"`` or a set of ids); rays are hard constraints at every
    reachable node.  ``extra_rows`` are ``(coeffs_by_leaf, relation, rhs)``.
    """
    reach = reachable_nodes(model)
    leaves = [n for n in reach if model.nodes[n].is_leaf]
    col = {leaf: i for i, leaf in enumerate(leaves)}
    nleaf = len(leaves)
    internal = [n for n in reach if not model.nodes[n].is_leaf]
    if penalized == "all":
        penalized = set(internal)
    layout = _JointLayout(leaves)

    # mean increment scaled by node mass, as coefficients over leaves
    scaled_mean = {}
    under = {}
    for nid in reversed(reach):
        node = model.nodes[nid]
        if node.is_leaf:
            under[nid] = [nid]
            continue
        kids = supported_children(model, nid)
        under[nid] = [leaf for c in kids for leaf in under[c]]
        incs = dict(zip(node.children, model.increments(nid)))
        coeffs = {}
        for c in kids:
            for leaf in under[c]:
                coeffs[leaf] = incs[c]
        scaled_mean[nid] = coeffs

    def mean_row(nid, direction):
        row = [0] * nleaf
        for leaf, inc in scaled_mean[nid].items():
            row[col[leaf]] = dot(direction, inc)
        return row

    rows, rhs, rels = [[1] * nleaf], [1], [EQ]
    tcols = []
    for nid in internal:
        cs = model.nodes[nid].constraint
        if cs.is_ball:
            raise UnsupportedConstraint(f"node {nid!r}: ball constraints cannot be priced")
        if cones_only and not cs.is_cone:
            raise UnsupportedConstraint(f"node {nid!r}: position set is not a cone")
        for r in cs.rays:
            rows.append(mean_row(nid, r))
            rhs.append(0)
            rels.append(LE)
        if nid in penalized and not cs.is_cone:
            layout.penalty_vars[nid] = len(tcols)
            tcols.append(nid)
    ntv = len(tcols)
    rows = [r + [0] * ntv for r in rows]
    for nid in tcols:
        k = layout.penalty_vars[nid]
        for v in model.nodes[nid].constraint.vertices:
            row = [-x for x in mean_row(nid, v)] + [0] * ntv
            row[nleaf + k] = 1
            rows.append(row)
            rhs.append(0)
            rels.append(GE)
    for coeffs, rel, b in extra_rows:
        rows.append([coeffs.get(leaf, 0) for leaf in leaves] + [0] * ntv)
        rhs.append(b)
        rels.append(rel)
        layout.extra_rows += 1
    sign = -1 if sense == MAX else 1
    c = [payoff.get(leaf, 0) for leaf in leaves] + [sign] * ntv
    bounds = [(0, None)] * (nleaf + ntv)
    return LinearProgram(c, rows, rhs, rels, bounds, sense), layout


def solve_joint(model, payoff, sense=MAX, penalized="all", extra_rows=(), cones_only=False):
    lp, layout = joint_lp(model, payoff, sense, penalized, extra_rows, cones_only)
    res = solve(lp, model.mode)
    Q = None
    if res.status is Status.OPTIMAL:
        Q = measure_from_leaves(model, dict(zip(layout.leaves, res.x[:len(layout.leaves)])))
    return res, Q, lp, layout


def dual_price_joint(model, f, check=True):
    """``sup_Q E_Q[f] - E_Q[B_T^Q]`` as one LP in leaf probabilities."""
    if check:
        _require_na(model)
    f = leaf_values(model, f)
    res, Q, _, _ = solve_joint(model, f)
    if res.status is not Status.OPTIMAL:
        raise RuntimeError(f"joint dual LP status {res.status.value}")
    Q.penalty = penalty_process(model, Q)
    return res.objective, Q


# -- penalties, supermartingale check, decomposition ----------------------------------

def penalty_process(model, Q):
    """``B`` per node: accumulated support-function penalties of the kernels;
    zero increments below uncharged nodes."""
    zero = model.zero()
    B = {model.root: zero}
    for nid in model.nodes:
        node = model.nodes[nid]
        if node.is_leaf:
            continue
        a = zero
        if Q.charged(nid):
            a = support_penalty(model, nid, Q.kernels[nid])
            if a == float("inf"):
                raise InfinitePenalty(nid)
        for c in node.children:
            B[c] = B[nid] + a
    return B


def verify_local_supermartingale(model, V, Q):
    """``E_kernel[V_{t+1}] - V_t <= A_t(kernel)`` at every charged node."""
    exact = model.exact
    for nid, k in Q.kernels.items():
        if not Q.charged(nid):
            continue
        a = support_penalty(model, nid, k)
        if a == float("inf"):
            continue
        node = model.nodes[nid]
        drift = sum((p * V[c] for p, c in zip(k, node.children) if p != 0), model.zero()) - V[nid]
        if is_pos(drift - a, exact):
            return False
    return True


def optional_decomposition(model, V, check=True):
    """``V_t = V_0 + (H.S)_t - C_t`` with admissible ``H`` and nondecreasing ``C``.

    At each reachable node ``H`` super-replicates the successor values from
    their one-step price; the unused cash is consumed.
    """
    if check:
        _require_na(model)
    exact = model.exact
    V = {k: convert(v, exact) for k, v in V.items()}
    reach = reachable_nodes(model)
    strategy = {}
    C = {model.root: model.zero()}
    for nid in reach:
        node = model.nodes[nid]
        if node.is_leaf:
            continue
        kids = supported_children(model, nid)
        step = superhedge_one_step(model, nid, {c: V[c] for c in kids}, check_na=False)
        if is_neg(V[nid] - step.price, exact):
            raise NotASupermartingale(nid, V[nid], step.price)
        H = step.strategy
        strategy[nid] = H
        incs = dict(zip(node.children, model.increments(nid)))
        for c in kids:
            C[c] = C[nid] + V[nid] + dot(H, incs[c]) - V[c]
    for nid in model.internal_nodes:
        strategy.setdefault(nid, model.zero_vector())
    return Decomposition(strategy, C)


def decomposition_holds(model, V, dec, tol=None):
    """Identity, monotone consumption and admissibility on reachable nodes."""
    exact = model.exact
    slack = 0 if exact else (1e-9 if tol is None else tol)
    g = gains_process(model, dec.strategy)
    reach = reachable_nodes(model)
    root = model.root
    if not is_zero(dec.consumption[root], exact):
        return False
    for nid in reach:
        if abs(V[nid] - (V[root] + g[nid] - dec.consumption[nid])) > slack:
            return False
        parent = model.nodes[nid].parent
        if parent is not None and dec.consumption[nid] < dec.consumption[parent] - slack:
            return False
    return strategy_admissible(model, {n: dec.strategy[n] for n in reach if not model.nodes[n].is_leaf})
