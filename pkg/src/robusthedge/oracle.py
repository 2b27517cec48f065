"""Brute-force references and seeded instance generators.

The oracles avoid the dual LPs used by the engine: super-hedging prices are
bracketed by grids over positions in float arithmetic, per-rule American
values come from primal hedging LPs, and the semi-static minimax is searched
directly over the static position.
"""
import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import builders
from .exceptions import PreconditionViolated
from .lp import EQ, GE, LE, MAX, MIN, LinearProgram, Status, solve
from .model import dumps, loads, reachable_leaves, reachable_nodes, supported_children
from .multi_period import leaf_values, superhedge_european

# -- grid brackets ------------------------------------------------------------------


@dataclass
class OracleReport:
    method: str
    value: object
    resolution: dict
    deltas: dict = field(default_factory=dict)

    def contains(self, x, slack=1e-9):
        lo, hi = self.value
        return lo - slack <= float(x) <= hi + slack


def _position_grid(cs, steps, ray_cap):
    """Grid points of a position set and their covering radius.

    Boxes use a product grid, other polytopes a barycentric grid over the
    vertices; rays (and cone generators) are scaled over ``[0, ray_cap]``.
    """
    verts = np.array([[float(x) for x in v] for v in cs.vertices])
    rays = [np.array([float(x) for x in r]) for r in cs.rays if any(r)]
    d = verts.shape[1]
    if cs.kind == "box" and len(verts) == 2 ** d and not rays:
        lo, hi = verts.min(axis=0), verts.max(axis=0)
        axes = [np.linspace(a, b, steps + 1) for a, b in zip(lo, hi)]
        pts = np.array(list(product(*axes))).reshape(-1, d)
        radius = float(np.linalg.norm(hi - lo)) / steps
    else:
        k = len(verts)
        combos = [c for c in product(range(steps + 1), repeat=k - 1) if sum(c) <= steps]
        lam = np.array([list(c) + [steps - sum(c)] for c in combos], dtype=float) / steps
        pts = lam @ verts
        diam = max((np.linalg.norm(a - b) for a in verts for b in verts), default=0.0)
        radius = k * diam / steps
    if rays:
        mults = np.linspace(0.0, ray_cap, steps + 1)
        extra = np.array(list(product(mults, repeat=len(rays))))
        shifts = extra @ np.array(rays)
        pts = (pts[:, None, :] + shifts[None, :, :]).reshape(-1, d)
        radius += ray_cap * sum(np.linalg.norm(r) for r in rays) / steps
    return pts, radius


def _node_bracket(model, nid, lo_vals, hi_vals, steps, ray_cap):
    kids = supported_children(model, nid)
    node = model.nodes[nid]
    incs = dict(zip(node.children, model.increments(nid)))
    dS = np.array([[float(x) for x in incs[c]] for c in kids])
    pts, radius = _position_grid(node.constraint, steps, ray_cap)
    gains = pts @ dS.T
    hi = float(np.min(np.max(np.array([hi_vals[c] for c in kids]) - gains, axis=1)))
    lo_grid = float(np.min(np.max(np.array([lo_vals[c] for c in kids]) - gains, axis=1)))
    lip = float(np.max(np.linalg.norm(dS, axis=1)))
    return float(lo_grid - lip * radius), hi, radius


def grid_superhedge(model, f, steps=1000, ray_cap=10.0, node_id=None):
    """Bracket the super-hedging price of ``f`` by exhaustive position grids.

    With ``node_id`` the payoff is per child of that node; otherwise it is
    per leaf and nested grids run backwards through the tree.  For cones
    the bracket assumes an optimal position within ``ray_cap`` per
    generator.
    """
    if node_id is not None:
        f = {str(k): float(v) for k, v in f.items()}
        lo, hi, radius = _node_bracket(model, node_id, f, f, steps, ray_cap)
        return OracleReport("node position grid", (lo, hi), {"steps": steps, "radius": radius})
    f = {k: float(v) for k, v in leaf_values(model, f).items()}
    lo_vals, hi_vals = dict(f), dict(f)
    worst = 0.0
    for nid in reversed(reachable_nodes(model)):
        if model.nodes[nid].is_leaf:
            continue
        lo, hi, radius = _node_bracket(model, nid, lo_vals, hi_vals, steps, ray_cap)
        lo_vals[nid], hi_vals[nid] = lo, hi
        worst = max(worst, radius)
    root = model.root
    return OracleReport("nested position grids", (lo_vals[root], hi_vals[root]),
                        {"steps": steps, "radius": worst})


# -- primal hedging LPs (American per-rule values) -------------------------------------

def primal_hedge_price(model, payoff, active=None, sense=MIN):
    """Hedging LP over positions in vertex/ray form.

    ``sense=MIN``: smallest ``x`` with ``x + gains >= payoff``;
    ``sense=MAX``: largest ``x`` with ``payoff + gains >= x``.  Only nodes in
    ``active`` trade (default all reachable non-leaf nodes).
    """
    exact = model.exact
    reach = reachable_nodes(model)
    internal = [n for n in reach if not model.nodes[n].is_leaf]
    if active is None:
        active = set(internal)
    cols = {}
    ncol = 1
    for nid in internal:
        if nid not in active:
            continue
        cs = model.nodes[nid].constraint
        nv, nr = len(cs.vertices), len(cs.rays)
        cols[nid] = (ncol, nv, nr)
        ncol += nv + nr
    A, b, rel = [], [], []
    for nid, (start, nv, _) in cols.items():
        row = [0] * ncol
        for j in range(nv):
            row[start + j] = 1
        A.append(row)
        b.append(1)
        rel.append(EQ)
    sgn = 1 if sense == MIN else -1
    for leaf in reach:
        if not model.nodes[leaf].is_leaf:
            continue
        row = [0] * ncol
        row[0] = sgn
        path = model.path(leaf)
        for parent, child in zip(path, path[1:]):
            if parent not in cols:
                continue
            node = model.nodes[parent]
            inc = model.increments(parent)[node.children.index(child)]
            start, nv, nr = cols[parent]
            cs = node.constraint
            for j, v in enumerate(list(cs.vertices) + list(cs.rays)):
                row[start + j] = sum(a * x for a, x in zip(v, inc))
        A.append(row)
        b.append(payoff[leaf] * sgn)
        rel.append(GE)
    c = [1] + [0] * (ncol - 1)
    bounds = [(None, None)] + [(0, None)] * (ncol - 1)
    res = solve(LinearProgram(c, A, b, rel, bounds, sense), "exact" if exact else "float")
    if res.status is not Status.OPTIMAL:
        raise RuntimeError(f"primal hedge LP is {res.status.value}")
    return res.objective


def enumerate_stopping_values(model, f, cap=10**5):
    """Per-rule table of ``(rule, sup_stopped, sup_terminal, inf_terminal)``
    from primal hedging LPs (trading before the exercise time, or up to the
    horizon)."""
    from .american import enumerate_stopping_rules, node_payoff, stopped_payoff

    f = node_payoff(model, f)
    rows = []
    for rule in enumerate_stopping_rules(model, cap):
        pay = stopped_payoff(model, f, rule)
        rows.append((rule,
                     primal_hedge_price(model, pay, rule.continuation_nodes(model), MIN),
                     primal_hedge_price(model, pay, None, MIN),
                     primal_hedge_price(model, pay, None, MAX)))
    return rows


# -- semi-static minimax -----------------------------------------------------------

def minimax_semistatic(model, f, options, bound=50.0, xatol=1e-11):
    """``inf_h`` of the dynamic super-hedging price of ``f - h.g`` over the
    box ``[-bound, bound]^e`` by nested bounded scalar minimisation (the map
    is convex in ``h``)."""
    fm = loads(dumps(model), "float") if model.exact else model
    leaves = reachable_leaves(fm)
    f = {k: float(v) for k, v in leaf_values(model, f).items()}
    gs = [{k: float(v) for k, v in leaf_values(model, getattr(g, "payoffs", g)).items()}
          for g in options]

    def price(h):
        pay = {a: f[a] - sum(hi * g[a] for hi, g in zip(h, gs)) for a in leaves}
        return float(superhedge_european(fm, pay, check=False).price)

    def search(prefix):
        if len(prefix) == len(gs):
            return price(prefix), prefix
        best = {}

        def inner(x):
            val, arg = search(prefix + [x])
            best[x] = arg
            return val

        res = minimize_scalar(inner, bounds=(-bound, bound), method="bounded",
                              options={"xatol": xatol, "maxiter": 500})
        return float(res.fun), best.get(res.x, prefix + [res.x])

    value, h = search([])
    return OracleReport("nested bounded search over h", value,
                        {"bound": bound, "xatol": xatol}, {"h": h})


# -- random instances ------------------------------------------------------------------

def _prob(rng, n, allow_zero=True):
    while True:
        w = rng.integers(0 if allow_zero else 1, 5, size=n)
        if w.sum() > 0:
            s = int(w.sum())
            return [str(Fraction(int(x), s)) for x in w]


def _random_constraint(rng, d, kind):
    if kind == "box":
        lower = [int(-rng.integers(0, 3)) for _ in range(d)]
        upper = [int(rng.integers(0, 3)) for _ in range(d)]
        if all(lo == hi for lo, hi in zip(lower, upper)):
            upper[0] += 1
        return builders.box(lower, upper)
    if kind == "polytope":
        k = int(rng.integers(1, 4))
        pts = [[0] * d] + [[int(x) for x in rng.integers(-2, 3, size=d)] for _ in range(k)]
        return builders.vertices(pts)
    if kind == "cone":
        k = int(rng.integers(1, 4))
        gens = []
        while len(gens) < k:
            g = [int(x) for x in rng.integers(-2, 3, size=d)]
            if any(g):
                gens.append(g)
        return builders.cone(gens)
    if kind == "full":
        return builders.cone([[1 if i == j else 0 for i in range(d)] for j in range(d)]
                             + [[-1 if i == j else 0 for i in range(d)] for j in range(d)])
    raise ValueError(kind)


def _node_data(rng, d, n_atoms, n_ext, kind):
    incs = [[int(x) for x in rng.integers(-3, 4, size=d)] for _ in range(n_atoms)]
    ext = [_prob(rng, n_atoms) for _ in range(n_ext)]
    return incs, _random_constraint(rng, d, kind), ext


def _node_ok(incs, cons, ext):
    from .one_period import check_na_node
    m = builders.one_period(incs, cons, ext)
    return check_na_node(m, m.root).holds


def random_node(rng, max_d=3, max_atoms=6, max_ext=4, kinds=("box", "polytope", "cone"),
                mode="exact", na=True):
    """One-period model with NA holding (by rejection) when ``na``."""
    while True:
        d = int(rng.integers(1, max_d + 1))
        n = int(rng.integers(2, max_atoms + 1))
        k = int(rng.integers(1, max_ext + 1))
        kind = kinds[int(rng.integers(len(kinds)))]
        incs, cons, ext = _node_data(rng, d, n, k, kind)
        if not na or _node_ok(incs, cons, ext):
            return builders.one_period(incs, cons, ext, mode=mode)


def arbitrage_node(rng, max_d=3, max_atoms=6, max_ext=4, kinds=("box", "polytope", "cone"),
                   mode="exact"):
    """One-period model with a built-in arbitrage on the supported atoms."""
    while True:
        d = int(rng.integers(1, max_d + 1))
        n = int(rng.integers(2, max_atoms + 1))
        k = int(rng.integers(1, max_ext + 1))
        kind = kinds[int(rng.integers(len(kinds)))]
        incs, cons, ext = _node_data(rng, d, n, k, kind)
        m = builders.one_period(incs, cons, ext)
        cs = m.nodes[m.root].constraint
        cands = [v for v in list(cs.vertices) + list(cs.rays) if any(v)]
        if not cands:
            continue
        H = cands[int(rng.integers(len(cands)))]
        flipped = []
        for inc in incs:
            g = sum(a * b for a, b in zip(H, inc))
            flipped.append([-x for x in inc] if g < 0 else inc)
        if _node_ok(flipped, cons, ext):
            continue
        return builders.one_period(flipped, cons, ext, mode=mode)


def random_tree(rng, max_T=4, max_branch=3, max_d=2, max_ext=3,
                kinds=("box", "polytope", "cone"), mode="exact", T=None, d=None):
    """Tree with NA at every node (each node redrawn until it holds)."""
    T = int(rng.integers(1, max_T + 1)) if T is None else T
    d = int(rng.integers(1, max_d + 1)) if d is None else d
    cache = {}

    def data(path):
        if path not in cache:
            while True:
                n = int(rng.integers(2, max_branch + 1))
                k = int(rng.integers(1, max_ext + 1))
                kind = kinds[int(rng.integers(len(kinds)))]
                incs, cons, ext = _node_data(rng, d, n, k, kind)
                if _node_ok(incs, cons, ext):
                    break
            cache[path] = ([(chr(ord("a") + i), inc) for i, inc in enumerate(incs)], cons, ext)
        return cache[path]

    return builders.build_tree(T, [0] * d, lambda p: data(p)[0], lambda p: data(p)[1],
                               lambda p: data(p)[2], mode)


def random_payoff(rng, model, low=0, high=4):
    return {leaf: int(rng.integers(low, high + 1)) for leaf in model.leaves}


def random_american_payoff(rng, model, low=0, high=4):
    return {nid: int(rng.integers(low, high + 1)) for nid in model.nodes}


def random_cone_instance(rng, max_T=2, max_d=2, max_opts=2, symmetric=True, mode="exact"):
    """``(model, options)`` with cone constraints, NA with options holding
    and no option replicable by dynamic trading alone."""
    from .semistatic import check_na_with_options

    kinds = ("full",) if symmetric else ("cone", "full")
    while True:
        model = random_tree(rng, max_T=max_T, max_branch=4, max_d=max_d, kinds=kinds, mode=mode)
        e = int(rng.integers(0, max_opts + 1))
        opts = [random_payoff(rng, model, -2, 2) for _ in range(e)]
        try:
            if check_na_with_options(model, opts).holds:
                return model, opts
        except PreconditionViolated:
            continue


# -- corpus manifest ---------------------------------------------------------------------

def write_corpus(directory, seeds, steps=200):
    """Write seeded tree models, payoffs and grid brackets plus a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        model = random_tree(rng, max_T=2, max_branch=3, max_d=1, kinds=("box", "polytope"))
        f = random_payoff(rng, model)
        rep = grid_superhedge(model, f, steps=steps)
        name = f"tree_{seed}"
        (directory / f"{name}.json").write_text(dumps(model))
        entries.append({"name": name, "model": f"{name}.json", "seed": seed,
                        "payoff": {k: f[k] for k in sorted(f)},
                        "bracket": [float(rep.value[0]), float(rep.value[1])], "steps": steps})
    manifest = {"version": 1, "entries": entries}
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def load_manifest(directory):
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    for entry in manifest["entries"]:
        entry["path"] = directory / entry["model"]
    return manifest


# -- random linear programs ----------------------------------------------------------------

def random_lp(rng, kind="feasible", max_m=5, max_n=6):
    """Integer LP with entries in [-10, 10].

    ``feasible`` builds the right-hand side around a random point inside the
    bounds (so the LP is feasible, possibly unbounded); ``infeasible`` adds a
    contradictory pair of rows on top.
    """
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, max_m + 1))
    A = [[int(x) for x in rng.integers(-10, 11, size=n)] for _ in range(m)]
    rels = [(LE, GE, EQ)[int(rng.integers(3))] for _ in range(m)]
    bounds = []
    for _ in range(n):
        shape = int(rng.integers(4))
        lo = int(rng.integers(-10, 1))
        hi = int(rng.integers(0, 11))
        bounds.append(((0, None), (None, None), (lo, hi), (None, hi))[shape])
    x0 = []
    for lo, hi in bounds:
        a = -10 if lo is None else lo
        b = 10 if hi is None else hi
        x0.append(int(rng.integers(a, b + 1)))
    b = []
    for row, rel in zip(A, rels):
        v = sum(a * x for a, x in zip(row, x0))
        s = int(rng.integers(0, 6))
        b.append(v + s if rel == LE else v - s if rel == GE else v)
    if kind == "infeasible":
        row = [int(x) for x in rng.integers(-10, 11, size=n)]
        t = int(rng.integers(-10, 11))
        A += [row, row]
        b += [t, t + 1 + int(rng.integers(0, 5))]
        rels += [LE, GE]
    c = [int(x) for x in rng.integers(-10, 11, size=n)]
    sense = (MIN, MAX)[int(rng.integers(2))]
    return LinearProgram(c, A, b, rels, bounds, sense)
