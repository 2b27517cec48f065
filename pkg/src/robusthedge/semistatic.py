"""Semi-static hedging with statically traded options under cone constraints.

Options are zero-cost payoffs ``g^i`` on the leaves (prices netted out).  The
pricing set ``Q_g`` is the martingale-cone polytope over leaf probabilities
cut by ``E_Q[g^i] = 0``; everything here is an LP over it or over the
matching primal variables (cone weights per node plus a free static
position ``h``).
"""
from dataclasses import dataclass

from .exceptions import ArbitrageWithOptions, PreconditionViolated, UnsupportedConstraint
from .geometry import generated_cone
from .lp import EQ, GE, LE, MAX, MIN, LinearProgram, Status, solve
from .model import reachable_leaves, reachable_nodes
from .multi_period import (DualMeasure, gains_process, leaf_values, measure_from_leaves,
                           solve_joint, superhedge_european)
from .numeric import convert, dot, is_pos, is_zero


@dataclass
class SemiStaticNA:
    holds: bool
    witness: tuple = None
    dual: DualMeasure = None


@dataclass
class SemiStaticCertificate:
    price: object
    static_position: tuple
    dynamic_strategy: dict
    dual_optimizer: DualMeasure


@dataclass
class Replication:
    replicable: bool
    x: object = None
    H: dict = None
    h: tuple = None
    upper: object = None
    lower: object = None


# -- inputs -------------------------------------------------------------------

def option_payoffs(model, options=None):
    """Option payoffs as dicts over the reachable leaves; defaults to the
    options stored on the model."""
    if options is None:
        options = model.options
    out = []
    for opt in options:
        pay = getattr(opt, "payoffs", opt)
        out.append(leaf_values(model, pay))
    return out


def _internal(model):
    return [n for n in reachable_nodes(model) if not model.nodes[n].is_leaf]


def require_cones(model):
    for nid in _internal(model):
        cs = model.nodes[nid].constraint
        if cs.is_ball or not cs.is_cone:
            raise PreconditionViolated(
                f"node {nid!r}: static options need a convex cone of positions")


def is_symmetric(model):
    """``H = -H`` at every reachable node."""
    for nid in _internal(model):
        cs = model.nodes[nid].constraint
        cone = generated_cone(cs, model.exact)
        for g in cone.generators:
            if not cone.contains(tuple(-x for x in g)):
                return False
    return True


# -- primal variables -----------------------------------------------------------

def _gain_layout(model, n_opts):
    """Leaf gains as linear forms in (cone weights per node, h).

    Returns ``(leaves, rows, gens)`` with ``rows[leaf]`` the coefficient list
    and ``gens`` the ``(node, generator)`` pair behind each cone weight.
    """
    leaves = reachable_leaves(model)
    gens = []
    for nid in _internal(model):
        for g in model.nodes[nid].constraint.generators:
            if any(g):
                gens.append((nid, g))
    index = {}
    for k, (nid, _) in enumerate(gens):
        index.setdefault(nid, []).append(k)
    nvar = len(gens) + n_opts
    zero = model.zero()
    rows = {}
    for leaf in leaves:
        row = [zero] * nvar
        path = model.path(leaf)
        for parent, child in zip(path, path[1:]):
            node = model.nodes[parent]
            inc = model.increments(parent)[node.children.index(child)]
            for k in index.get(parent, ()):
                row[k] = dot(gens[k][1], inc)
        rows[leaf] = row
    return leaves, rows, gens


def _strategy(model, gens, weights):
    H = {nid: model.zero_vector() for nid in model.internal_nodes}
    for (nid, g), w in zip(gens, weights):
        H[nid] = tuple(a + w * b for a, b in zip(H[nid], g))
    return H


def _with_options(rows, opts, leaf):
    return rows[leaf][:len(rows[leaf]) - len(opts)] + [g[leaf] for g in opts]


def replicable_at_zero(model, g):
    """Whether ``(H.S)_T = g`` quasi-surely for some admissible ``H``."""
    leaves, rows, gens = _gain_layout(model, 0)
    if not gens:
        return all(is_zero(g[leaf], model.exact) for leaf in leaves)
    A = [rows[leaf] for leaf in leaves]
    lp = LinearProgram([0] * len(gens), A, [g[leaf] for leaf in leaves], [EQ] * len(leaves))
    return solve(lp, model.mode).status is Status.OPTIMAL


def _preconditions(model, opts):
    require_cones(model)
    for i, g in enumerate(opts):
        if replicable_at_zero(model, g):
            raise PreconditionViolated(f"option {i} is replicable by dynamic trading alone")


# -- Q_g ------------------------------------------------------------------------

def _option_rows(opts):
    return [(g, EQ, 0) for g in opts]


def solve_qg(model, payoff, sense, opts):
    try:
        return solve_joint(model, payoff, sense, "all", _option_rows(opts), cones_only=True)
    except UnsupportedConstraint as exc:
        raise PreconditionViolated(str(exc)) from exc


def dominating_qg(model, opts, extra_rows=()):
    """Max ``delta`` with ``Q in Q_g`` and ``Q(a) >= delta`` on every quasi-sure
    leaf.  Such a Q dominates every measure of the family.  Returns
    ``(delta, Q)``; ``Q`` is None when ``Q_g`` is empty."""
    from .multi_period import joint_lp

    base, layout = joint_lp(model, {}, MAX, "all", _option_rows(opts) + list(extra_rows),
                            cones_only=True)
    n = len(base.c)
    leaves = layout.leaves
    A = [row + [0] for row in base.A]
    b, rel = list(base.b), list(base.relations)
    for i, leaf in enumerate(leaves):
        row = [0] * (n + 1)
        row[i] = 1
        row[n] = -1
        A.append(row)
        b.append(0)
        rel.append(GE)
    c = [0] * n + [1]
    bounds = list(base.bounds) + [(0, 1)]
    res = solve(LinearProgram(c, A, b, rel, bounds, MAX), model.mode)
    if res.status is not Status.OPTIMAL:
        return None, None
    Q = measure_from_leaves(model, dict(zip(leaves, res.x[:len(leaves)])))
    return res.objective, Q


# -- operations -------------------------------------------------------------------

def check_na_with_options(model, options=None):
    """Quasi-sure no-arbitrage with dynamic trading and static options.

    Primal: maximise the summed terminal gain subject to ``0 <= gain <= 1`` on
    every quasi-sure leaf; any positive optimum is an arbitrage.  Dual: a
    measure in ``Q_g`` charging every quasi-sure leaf.  The two must agree.
    """
    opts = option_payoffs(model, options)
    _preconditions(model, opts)
    exact = model.exact
    leaves, rows, gens = _gain_layout(model, len(opts))
    nvar = len(gens) + len(opts)
    A, b, rel = [], [], []
    for leaf in leaves:
        row = _with_options(rows, opts, leaf)
        A += [row, row]
        b += [0, 1]
        rel += [GE, LE]
    c = [sum(col) for col in zip(*A[::2])] if A else [0] * nvar
    bounds = [(0, None)] * len(gens) + [(None, None)] * len(opts)
    res = solve(LinearProgram(c, A, b, rel, bounds, MAX), model.mode)
    primal_arb = res.status is Status.OPTIMAL and is_pos(res.objective, exact)

    delta, Q = dominating_qg(model, opts)
    dual_ok = delta is not None and is_pos(delta, exact)
    if primal_arb == dual_ok:
        raise RuntimeError("primal and dual no-arbitrage verdicts disagree")
    if primal_arb:
        H = _strategy(model, gens, res.x[:len(gens)])
        return SemiStaticNA(False, witness=(H, tuple(res.x[len(gens):nvar])))
    return SemiStaticNA(True, dual=Q)


def _require_na(model, opts):
    rep = check_na_with_options(model, opts)
    if not rep.holds:
        raise ArbitrageWithOptions("arbitrage with dynamic trading and static options")
    return rep


def _static_value(opts, h, leaf):
    return sum((hi * g[leaf] for hi, g in zip(h, opts)), 0)


def certificate_holds(model, f, opts, cert, tol=None):
    """``price + (H.S)_T + h.g >= f`` on every quasi-sure leaf."""
    slack = 0 if model.exact else (1e-9 if tol is None else tol)
    gains = gains_process(model, cert.dynamic_strategy)
    return all(cert.price + gains[a] + _static_value(opts, cert.static_position, a) >= f[a] - slack
               for a in reachable_leaves(model))


def price_semistatic(model, f, options=None, check=True):
    """``max E_Q[f]`` over ``Q_g`` with the static position read from the
    duals of the option rows and the dynamic part from the recursion on
    ``f - h.g``."""
    opts = option_payoffs(model, options)
    if check:
        _require_na(model, opts)
    else:
        require_cones(model)
    f = leaf_values(model, f)
    res, Q, lp, layout = solve_qg(model, f, MAX, opts)
    if res.status is not Status.OPTIMAL:
        raise ArbitrageWithOptions(f"Q_g LP is {res.status.value}")
    k = layout.extra_rows
    h = tuple(res.dual[len(res.dual) - k:]) if k else ()
    residual = {a: f[a] - _static_value(opts, h, a) for a in reachable_leaves(model)}
    hedge = superhedge_european(model, residual, check=False)
    cert = SemiStaticCertificate(res.objective, h, hedge.strategy, Q)
    if not certificate_holds(model, f, opts, cert):
        raise RuntimeError("semi-static certificate fails by substitution")
    return cert


def qg_range(model, f, opts):
    """``(max, min)`` of ``E_Q[f]`` over ``Q_g``."""
    hi, _, _, _ = solve_qg(model, f, MAX, opts)
    lo, _, _, _ = solve_qg(model, f, MIN, opts)
    if hi.status is not Status.OPTIMAL or lo.status is not Status.OPTIMAL:
        raise ArbitrageWithOptions("Q_g is empty")
    return hi.objective, lo.objective


def _require_symmetric(model):
    if not is_symmetric(model):
        raise PreconditionViolated("replicability needs position sets closed under negation")


def check_replicable(model, f, options=None):
    """Replicable iff ``E_Q[f]`` is constant on ``Q_g``; the replicating
    triple is the semi-static super-hedge, checked for exact equality."""
    opts = option_payoffs(model, options)
    _require_na(model, opts)
    _require_symmetric(model)
    f = leaf_values(model, f)
    upper, lower = qg_range(model, f, opts)
    exact = model.exact
    if not is_zero(upper - lower, exact):
        return Replication(False, upper=upper, lower=lower)
    cert = price_semistatic(model, f, opts, check=False)
    gains = gains_process(model, cert.dynamic_strategy)
    for a in reachable_leaves(model):
        gap = cert.price + gains[a] + _static_value(opts, cert.static_position, a) - f[a]
        if not is_zero(gap, exact):
            raise RuntimeError(f"replication fails at leaf {a!r}")
    return Replication(True, cert.price, cert.dynamic_strategy, cert.static_position, upper, lower)


def check_completeness(model, options=None):
    """``Q_g`` is a single point: every leaf probability has max = min."""
    opts = option_payoffs(model, options)
    _require_na(model, opts)
    _require_symmetric(model)
    one = convert(1, model.exact)
    for a in reachable_leaves(model):
        upper, lower = qg_range(model, {a: one}, opts)
        if not is_zero(upper - lower, model.exact):
            return False
    return True


# -- the three replicability predicates ------------------------------------------

def exact_replication(model, f, opts):
    """(a): some ``x, H, h`` with ``x + (H.S)_T + h.g = f`` quasi-surely."""
    leaves, rows, gens = _gain_layout(model, len(opts))
    A = [[1] + _with_options(rows, opts, a) for a in leaves]
    bounds = [(None, None)] + [(0, None)] * len(gens) + [(None, None)] * len(opts)
    lp = LinearProgram([0] * len(A[0]), A, [f[a] for a in leaves], [EQ] * len(leaves), bounds)
    return solve(lp, model.mode).status is Status.OPTIMAL


def replication_predicates(model, f, options=None):
    """Evaluate the three equivalent replicability criteria independently:

    * ``a``: an exact replicating strategy exists;
    * ``b``: ``E_Q[f]`` is constant on ``Q_g``;
    * ``c``: some ``Q in Q_g`` dominating the family attains the price.
    """
    opts = option_payoffs(model, options)
    _require_na(model, opts)
    _require_symmetric(model)
    f = leaf_values(model, f)
    exact = model.exact
    upper, lower = qg_range(model, f, opts)
    delta, _ = dominating_qg(model, opts, [(f, EQ, upper)])
    return {
        "a": exact_replication(model, f, opts),
        "b": is_zero(upper - lower, exact),
        "c": delta is not None and is_pos(delta, exact),
    }
