"""Single-node no-arbitrage, pricing measures and super-hedging.

Everything here works on one non-leaf node of a :class:`MarketModel`: the
children are the atoms, the node's family of laws decides which atoms are
quasi-surely possible, and the node's constraint set is the admissible
position set.  Payoffs are dictionaries keyed by child id (or sequences in
canonical child order).
"""
from dataclasses import dataclass

from .exceptions import ArbitrageAtNode, UnboundedPrice, UnsupportedConstraint
from .lp import EQ, GE, LE, MAX, MIN, LinearProgram, Status, solve
from .model import quasi_sure_support, supported_children
from .numeric import convert, dot, is_pos, is_zero


@dataclass
class NAReport:
    node_id: str
    holds: bool
    witness: tuple = None
    witness_atom: str = None
    gains: dict = None
    polar_note: str = None


@dataclass
class OneStepPrice:
    """Super-hedging price at a node together with both optimisers.

    ``dual_measure`` is indexed like the node's children (zeros off the
    quasi-sure support); ``dual_penalty`` is the support function of the
    position set at the measure's mean increment.
    """

    node_id: str
    price: object
    strategy: tuple
    dual_measure: tuple
    dual_penalty: object


def _atoms(model, node_id):
    node = model.nodes[node_id]
    incs = dict(zip(node.children, model.increments(node_id)))
    kids = supported_children(model, node_id)
    return kids, [incs[c] for c in kids]


def child_values(model, node_id, f):
    """Normalise a per-child payoff to a dict over the node's children."""
    node = model.nodes[node_id]
    if isinstance(f, dict):
        out = {str(k): v for k, v in f.items()}
    else:
        f = list(f)
        if len(f) != len(node.children):
            raise ValueError(f"expected {len(node.children)} values, got {len(f)}")
        out = dict(zip(node.children, f))
    kids = supported_children(model, node_id)
    missing = [c for c in kids if c not in out]
    if missing:
        raise ValueError(f"payoff missing at supported children {missing}")
    return {c: convert(out[c], model.exact) for c in out if c in node.children}


def _ball_case(cs, exact):
    cc = dot(cs.center, cs.center)
    rr = cs.radius * cs.radius
    if cs.radius == 0:
        return "point"
    if exact:
        if cc < rr:
            return "interior"
        if cc == rr:
            return "tangent"
    else:
        if cc < rr - 1e-12:
            return "interior"
        if abs(cc - rr) <= 1e-12 * max(1.0, rr):
            return "tangent"
    return "outside"


def _axis_generators(d, exact):
    one = convert(1, exact)
    gens = []
    for i in range(d):
        e = tuple(one if k == i else one * 0 for k in range(d))
        gens.append(e)
        gens.append(tuple(-x for x in e))
    return gens


def check_na_node(model, node_id):
    """Search the generated cone for a position with nonnegative gain on every
    supported atom and positive gain on at least one.

    One LP maximises the summed gain over the compact slice
    ``sum(weights) <= 1`` of the cone; positivity is scale invariant, so NA
    fails iff the optimum is positive.
    """
    exact, mode = model.exact, model.mode
    node = model.nodes[node_id]
    cs = node.constraint
    kids, incs = _atoms(model, node_id)
    if cs.is_ball:
        case = _ball_case(cs, exact)
        if case == "point":
            return NAReport(node_id, True, polar_note="position set is {0}")
        if case == "outside":
            raise UnsupportedConstraint(f"node {node_id!r}: ball does not contain the origin")
        if case == "tangent":
            return _na_tangent_ball(model, node_id, kids, incs, cs)
        gens = _axis_generators(model.d, exact)
    else:
        gens = [g for g in cs.generators if any(g)]
    if not gens:
        return NAReport(node_id, True, polar_note="position set is {0}")

    k = len(gens)
    G = [[dot(g, a) for g in gens] for a in incs]
    c = [sum(G[r][i] for r in range(len(incs))) for i in range(k)]
    lp = LinearProgram(c, G + [[1] * k], [0] * len(incs) + [1], [GE] * len(incs) + [LE], sense=MAX)
    res = solve(lp, mode)
    if not is_pos(res.objective, exact):
        return NAReport(node_id, True)
    H = tuple(sum(w * g[j] for w, g in zip(res.x, gens)) for j in range(model.d))
    if cs.is_ball:
        H = _shrink_into_ball(H, cs, exact)
    return _arbitrage_report(node_id, H, kids, incs, exact)


def _arbitrage_report(node_id, H, kids, incs, exact):
    gains = {kid: dot(H, a) for kid, a in zip(kids, incs)}
    best = max(kids, key=lambda kid: gains[kid])
    return NAReport(node_id, False, witness=H, witness_atom=best, gains=gains)


def _shrink_into_ball(H, cs, exact):
    # t*H stays in B(c, r) once t^2|H|^2 + 2t|H.c| <= r^2 - |c|^2
    hh, hc = dot(H, H), dot(H, cs.center)
    slack = cs.radius * cs.radius - dot(cs.center, cs.center)
    t = min(convert(1, exact), slack / (hh + 2 * abs(hc)))
    return tuple(t * h for h in H)


def _na_tangent_ball(model, node_id, kids, incs, cs):
    # cone(B) = {H : H.c > 0} + {0}; arbitrage needs H.c > 0 and a strictly
    # positive gain, both normalised to >= 1 by scaling
    d = model.d
    exact = model.exact
    rows = [list(a) for a in incs]
    rows.append(list(cs.center))
    rows.append([sum(a[j] for a in incs) for j in range(d)])
    lp = LinearProgram([0] * d, rows, [0] * len(incs) + [1, 1],
                       [GE] * (len(incs) + 2), [(None, None)] * d)
    res = solve(lp, model.mode)
    if res.status is not Status.OPTIMAL:
        return NAReport(node_id, True,
                        polar_note="no gain-nonnegative direction enters the open half-space cone")
    H = tuple(res.x)
    # t = H.c / |H|^2 puts t*H inside the ball
    t = dot(H, cs.center) / dot(H, H)
    return _arbitrage_report(node_id, tuple(t * h for h in H), kids, incs, exact)


def find_dominating_q(model, node_id, P):
    """Pricing law charging every atom ``P`` charges, with ``E_q[H.dS] <= 0``
    for all admissible ``H``; ``None`` when no such law exists.

    Maximises the smallest mass ``delta`` placed on the atoms charged by
    ``P``.  ``P`` is a probability vector over the node's children.
    """
    exact, mode = model.exact, model.mode
    node = model.nodes[node_id]
    cs = node.constraint
    P = [convert(p, exact) for p in P]
    if len(P) != len(node.children):
        raise ValueError("P must have one entry per child")
    supp = quasi_sure_support(node)
    if any(is_pos(p, exact) for i, p in enumerate(P) if i not in supp):
        raise ValueError("P charges children outside the quasi-sure support")
    kids, incs = _atoms(model, node_id)
    idx = [node.children.index(k) for k in kids]
    n, d = len(kids), model.d

    # variables: q over supported atoms, delta, [alpha for a tangent ball]
    extra = 0
    A, b, rel = [], [], []
    A.append([1] * n + [0])
    b.append(1)
    rel.append(EQ)
    for pos, i in enumerate(idx):
        if is_pos(P[i], exact):
            row = [0] * (n + 1)
            row[pos] = 1
            row[n] = -1
            A.append(row)
            b.append(0)
            rel.append(GE)
    mean_rows = [[a[j] for a in incs] for j in range(d)]
    if cs.is_ball:
        case = _ball_case(cs, exact)
        if case == "outside":
            raise UnsupportedConstraint(f"node {node_id!r}: ball does not contain the origin")
        if case == "interior":
            for j in range(d):
                A.append(mean_rows[j] + [0])
                b.append(0)
                rel.append(EQ)
        elif case == "tangent":
            # c.m + r|m| <= 0 forces m = -alpha c with alpha >= 0
            extra = 1
            A = [row + [0] for row in A]
            for j in range(d):
                A.append(mean_rows[j] + [0, cs.center[j]])
                b.append(0)
                rel.append(EQ)
    else:
        for g in cs.generators:
            if any(g):
                A.append([dot(g, a) for a in incs] + [0])
                b.append(0)
                rel.append(LE)
    c = [0] * n + [1] + [0] * extra
    bounds = [(0, None)] * n + [(0, 1)] + [(0, None)] * extra
    res = solve(LinearProgram(c, A, b, rel, bounds, MAX), mode)
    if res.status is not Status.OPTIMAL or not is_pos(res.objective, exact):
        return None
    q = [convert(0, exact)] * len(node.children)
    for pos, i in enumerate(idx):
        q[i] = res.x[pos]
    return tuple(q)


def _require_polyhedral(model, node_id):
    cs = model.nodes[node_id].constraint
    if cs.is_ball:
        raise UnsupportedConstraint(
            f"node {node_id!r}: ball constraints are limited to no-arbitrage diagnostics")
    return cs


def superhedge_one_step(model, node_id, f, check_na=True):
    """Cheapest ``x`` with ``x + H.dS >= f`` on every supported atom, ``H``
    admissible.  The LP row duals give the optimal pricing law."""
    exact, mode = model.exact, model.mode
    node = model.nodes[node_id]
    cs = _require_polyhedral(model, node_id)
    if check_na:
        rep = check_na_node(model, node_id)
        if not rep.holds:
            raise ArbitrageAtNode(node_id, rep)
    vals = child_values(model, node_id, f)
    kids, incs = _atoms(model, node_id)
    V, R = cs.vertices, cs.rays
    nv, nr = len(V), len(R)
    # variables: x, lambda over vertices, mu over rays
    A, b, rel = [], [], []
    for kid, a in zip(kids, incs):
        A.append([1] + [dot(v, a) for v in V] + [dot(r, a) for r in R])
        b.append(vals[kid])
        rel.append(GE)
    A.append([0] + [1] * nv + [0] * nr)
    b.append(1)
    rel.append(EQ)
    c = [1] + [0] * (nv + nr)
    bounds = [(None, None)] + [(0, None)] * (nv + nr)
    res = solve(LinearProgram(c, A, b, rel, bounds, MIN), mode)
    if res.status is Status.UNBOUNDED:
        raise UnboundedPrice(f"node {node_id!r}: price is -inf although NA was not refuted")
    if res.status is not Status.OPTIMAL:
        raise RuntimeError(f"node {node_id!r}: super-hedging LP is infeasible")
    lam, mu = res.x[1:1 + nv], res.x[1 + nv:]
    H = tuple(sum(w * v[j] for w, v in zip(lam, V)) + sum(w * r[j] for w, r in zip(mu, R))
              for j in range(model.d))
    q = [convert(0, exact)] * len(node.children)
    for kid, y in zip(kids, res.dual):
        q[node.children.index(kid)] = y
    q = tuple(q)
    return OneStepPrice(node_id, res.objective, H, q, support_penalty(model, node_id, q))


def dual_value_one_step(model, node_id, f, check_na=True):
    """``max_q E_q[f] - A(q)`` over laws on the quasi-sure support.

    The penalty ``A(q)`` enters through an epigraph variable ``t`` bounded
    below by every vertex value; rays become hard constraints.  Row duals of
    the vertex and ray rows assemble an optimal position.
    """
    exact, mode = model.exact, model.mode
    node = model.nodes[node_id]
    cs = _require_polyhedral(model, node_id)
    if check_na:
        rep = check_na_node(model, node_id)
        if not rep.holds:
            raise ArbitrageAtNode(node_id, rep)
    vals = child_values(model, node_id, f)
    kids, incs = _atoms(model, node_id)
    n = len(kids)
    # variables: q over supported atoms, t
    A, b, rel = [[1] * n + [0]], [1], [EQ]
    for v in cs.vertices:
        A.append([-dot(v, a) for a in incs] + [1])
        b.append(0)
        rel.append(GE)
    for r in cs.rays:
        A.append([dot(r, a) for a in incs] + [0])
        b.append(0)
        rel.append(LE)
    c = [vals[k] for k in kids] + [-1]
    bounds = [(0, None)] * n + [(0, None)]
    res = solve(LinearProgram(c, A, b, rel, bounds, MAX), mode)
    if res.status is not Status.OPTIMAL:
        raise RuntimeError(f"node {node_id!r}: dual LP status {res.status.value}")
    q = [convert(0, exact)] * len(node.children)
    for pos, kid in enumerate(kids):
        q[node.children.index(kid)] = res.x[pos]
    nv = len(cs.vertices)
    yv = res.dual[1:1 + nv]
    yr = res.dual[1 + nv:]
    H = tuple(sum(-y * v[j] for y, v in zip(yv, cs.vertices)) + sum(y * r[j] for y, r in zip(yr, cs.rays))
              for j in range(model.d))
    return OneStepPrice(node_id, res.objective, H, tuple(q), res.x[n])


def mean_increment(model, node_id, q):
    incs = model.increments(node_id)
    return tuple(sum((p * a[j] for p, a in zip(q, incs)), convert(0, model.exact))
                 for j in range(model.d))


def support_penalty(model, node_id, q):
    """``sup_{H admissible} H . E_q[dS]``; ``float('inf')`` off the polar cone."""
    exact = model.exact
    node = model.nodes[node_id]
    q = [convert(p, exact) for p in q]
    if len(q) != len(node.children):
        raise ValueError("q must have one entry per child")
    supp = quasi_sure_support(node)
    if any(is_pos(p, exact) for i, p in enumerate(q) if i not in supp):
        raise ValueError("q charges children outside the quasi-sure support")
    if not is_zero(sum(q) - 1, exact):
        raise ValueError("q does not sum to 1")
    return node.constraint.support(mean_increment(model, node_id, q), exact)


def super_replicates(model, node_id, price, H, f, tol=None):
    """``price + H.dS >= f`` on every supported child."""
    exact = model.exact
    slack = 0 if exact else (1e-9 if tol is None else tol)
    vals = child_values(model, node_id, f)
    kids, incs = _atoms(model, node_id)
    return all(price + dot(H, a) >= vals[k] - slack for k, a in zip(kids, incs))
