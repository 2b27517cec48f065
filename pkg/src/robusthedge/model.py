"""Market model on a finite scenario tree: types, JSON format, validation.

A model is a rooted tree of depth ``T``.  Every node carries a price vector
``S`` in R^d; every non-leaf node also carries the set of possible one-step
laws (convex hull of finitely many ``extremes`` over its children) and the
admissible position set for the coming period.

Children of a node are always listed in canonical order, and probability
vectors are indexed accordingly.  Canonical order sorts ids numerically when
they are all digits, lexicographically otherwise.
"""
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

from . import linalg
from .exceptions import ParseError, ValidationError
from .lp import LE, EQ, LinearProgram, Status, solve
from .numeric import convert, convert_vector, format_number, is_neg, is_zero, parse_number

BOX, POLYTOPE_H, POLYTOPE_V, BALL = "box", "polytope_h", "polytope_v", "ball"
KINDS = (BOX, POLYTOPE_H, POLYTOPE_V, BALL)


def id_key(node_id):
    s = str(node_id)
    return (0, int(s), s) if s.isdigit() else (1, 0, s)


@dataclass(frozen=True)
class ConstraintSet:
    """Admissible positions ``conv(vertices) + cone(rays)``, or a Euclidean ball.

    ``params`` keeps the user-facing representation for serialisation; the
    vertex/ray form is what the solvers consume.
    """

    kind: str
    params: dict = field(compare=False, hash=False)
    vertices: tuple = ()
    rays: tuple = ()
    center: tuple = None
    radius: object = None
    cone: bool = False

    @property
    def is_ball(self):
        return self.kind == BALL

    @property
    def is_cone(self):
        """True when the set is a convex cone (all vertices at the origin)."""
        if self.is_ball:
            return self.radius == 0
        return all(all(x == 0 for x in v) for v in self.vertices)

    @property
    def generators(self):
        """Vertices and rays: the set generates the cone spanned by these."""
        return tuple(self.vertices) + tuple(self.rays)

    @property
    def dim(self):
        if self.is_ball:
            return len(self.center)
        return len((self.vertices + self.rays)[0])

    def support(self, m, exact):
        """``sup_{h in set} h.m``; ``float('inf')`` when unbounded above."""
        from .numeric import dot, norm
        if self.is_ball:
            return dot(self.center, m) + self.radius * norm(m, exact)
        for r in self.rays:
            if (dot(r, m) > 0) if exact else dot(r, m) > 1e-9:
                return float("inf")
        return max(dot(v, m) for v in self.vertices)

    def contains(self, h, exact):
        """Membership test (LP for polyhedra, norm comparison for balls)."""
        if self.is_ball:
            diff = [a - b for a, b in zip(h, self.center)]
            sq = sum(x * x for x in diff)
            rr = self.radius * self.radius
            return sq <= rr if exact else sq <= rr + 1e-9
        return _in_hull(h, self.vertices, self.rays, exact)


def _in_hull(point, vertices, rays, exact):
    nv, nr = len(vertices), len(rays)
    d = len(point)
    A = [[v[i] for v in vertices] + [r[i] for r in rays] for i in range(d)]
    A.append([1] * nv + [0] * nr)
    b = list(point) + [1]
    lp = LinearProgram([0] * (nv + nr), A, b, [EQ] * (d + 1))
    return solve(lp, "exact" if exact else "float").status is Status.OPTIMAL


def make_constraint(raw, d, exact, where="constraint"):
    """Build a :class:`ConstraintSet` from its JSON dictionary."""
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ValidationError(f"{where}: constraint must be an object with a 'kind'")
    kind = raw["kind"]
    if kind not in KINDS:
        raise ValidationError(f"{where}: unknown constraint kind {kind!r}")
    num = lambda v: convert(v, exact)  # noqa: E731

    def vec(v, label):
        if not isinstance(v, (list, tuple)) or len(v) != d:
            raise ValidationError(f"{where}: {label} must have length d={d}")
        try:
            return tuple(num(x) for x in v)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"{where}: bad number in {label}: {exc}") from None

    try:
        if kind == BOX:
            lower = [None if x is None else num(x) for x in raw["lower"]]
            upper = [None if x is None else num(x) for x in raw["upper"]]
            if len(lower) != d or len(upper) != d:
                raise ValidationError(f"{where}: box bounds must have length d={d}")
            for lo, hi in zip(lower, upper):
                if lo is not None and hi is not None and lo > hi:
                    raise ValidationError(f"{where}: empty box (lower > upper)")
            params = {"kind": BOX, "lower": lower, "upper": upper}
            verts, rays = _box_vertices(lower, upper, exact)
            return ConstraintSet(BOX, params, verts, rays, cone=not any(any(v) for v in verts))
        if kind == POLYTOPE_V:
            is_cone = bool(raw.get("cone", False))
            key = "generators" if is_cone else "vertices"
            pts = raw.get(key, raw.get("vertices", raw.get("generators")))
            if not pts:
                raise ValidationError(f"{where}: {key} list must be non-empty")
            pts = tuple(vec(p, key) for p in pts)
            params = {"kind": POLYTOPE_V, "cone": is_cone, key: [list(p) for p in pts]}
            if is_cone:
                zero = tuple(num(0) for _ in range(d))
                rays = tuple(p for p in pts if any(p))
                return ConstraintSet(POLYTOPE_V, params, (zero,), rays, cone=True)
            return ConstraintSet(POLYTOPE_V, params, _dedupe(pts), ())
        if kind == POLYTOPE_H:
            A = [vec(row, "A row") for row in raw["A"]]
            b = [num(x) for x in raw["b"]]
            if len(A) != len(b):
                raise ValidationError(f"{where}: A and b lengths differ")
            params = {"kind": POLYTOPE_H, "A": [list(r) for r in A], "b": b}
            verts = _enumerate_vertices(A, b, d, exact, where)
            return ConstraintSet(POLYTOPE_H, params, verts, ())
        center = vec(raw["center"], "center")
        radius = num(raw["radius"])
        if radius < 0:
            raise ValidationError(f"{where}: negative radius")
        params = {"kind": BALL, "center": list(center), "radius": radius}
        return ConstraintSet(BALL, params, center=center, radius=radius)
    except KeyError as exc:
        raise ValidationError(f"{where}: missing field {exc}") from None


def _dedupe(points):
    seen, out = set(), []
    for p in points:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return tuple(out)


def _box_vertices(lower, upper, exact):
    zero = convert(0, exact)
    one = convert(1, exact)
    d = len(lower)
    choices, rays = [], []
    for i, (lo, hi) in enumerate(zip(lower, upper)):
        e = tuple(one if k == i else zero for k in range(d))
        if lo is not None and hi is not None:
            choices.append(_dedupe((lo, hi)))
        elif lo is not None:
            choices.append((lo,))
            rays.append(e)
        elif hi is not None:
            choices.append((hi,))
            rays.append(tuple(-x for x in e))
        else:
            choices.append((zero,))
            rays.append(e)
            rays.append(tuple(-x for x in e))
    verts = tuple(tuple(p) for p in itertools.product(*choices))
    return verts, tuple(rays)


def _enumerate_vertices(A, b, d, exact, where):
    mode = "exact" if exact else "float"
    # boundedness: every coordinate must be bounded both ways
    for i in range(d):
        for sense in ("min", "max"):
            c = [1 if k == i else 0 for k in range(d)]
            res = solve(LinearProgram(c, A, b, [LE] * len(A), [(None, None)] * d, sense), mode)
            if res.status is Status.INFEASIBLE:
                raise ValidationError(f"{where}: empty polytope")
            if res.status is Status.UNBOUNDED:
                raise ValidationError(
                    f"{where}: unbounded halfspace polytope (use a cone generator list)")
    verts = []
    for rows in itertools.combinations(range(len(A)), d):
        sol = linalg.solve_square([A[r] for r in rows], [b[r] for r in rows], exact)
        if sol is None:
            continue
        ok = all(
            (sum(a * x for a, x in zip(A[k], sol)) <= b[k]) if exact
            else sum(a * x for a, x in zip(A[k], sol)) <= b[k] + 1e-9
            for k in range(len(A)))
        if ok:
            if not exact:
                sol = tuple(round(x, 12) + 0.0 for x in sol)
            verts.append(sol)
    verts = _dedupe(verts)
    if not verts:
        raise ValidationError(f"{where}: could not enumerate polytope vertices")
    return verts


def constraint_contains_origin(cs, exact):
    if cs.is_ball:
        sq = sum(x * x for x in cs.center)
        return sq <= cs.radius * cs.radius if exact else sq <= cs.radius ** 2 + 1e-12
    if cs.kind == POLYTOPE_H:
        return all(not is_neg(x, exact) for x in cs.params["b"])
    if cs.kind == BOX:
        return all((lo is None or lo <= 0) and (hi is None or hi >= 0)
                   for lo, hi in zip(cs.params["lower"], cs.params["upper"]))
    zero = tuple(convert(0, exact) for _ in range(cs.dim))
    return _in_hull(zero, cs.vertices, cs.rays, exact)


@dataclass(frozen=True)
class StaticOption:
    """Statically traded option with time-0 price normalised to zero."""

    payoffs: dict
    name: str = None


@dataclass
class Node:
    id: str
    parent: str
    depth: int
    S: tuple
    children: tuple = ()
    extremes: tuple = ()
    constraint: ConstraintSet = None

    @property
    def is_leaf(self):
        return not self.children


@dataclass
class MarketModel:
    T: int
    d: int
    nodes: dict
    root: str
    options: tuple = ()
    exact: bool = True

    @property
    def mode(self):
        return "exact" if self.exact else "float"

    def node(self, node_id):
        return self.nodes[node_id]

    def __iter__(self):
        return iter(self.nodes.values())

    def __len__(self):
        return len(self.nodes)

    @property
    def leaves(self):
        return [n.id for n in self.nodes.values() if n.is_leaf]

    @property
    def internal_nodes(self):
        return [n.id for n in self.nodes.values() if not n.is_leaf]

    def at_depth(self, t):
        return [n.id for n in self.nodes.values() if n.depth == t]

    def increments(self, node_id):
        """Price increments ``S_child - S_node``, one per child."""
        node = self.nodes[node_id]
        return [tuple(a - b for a, b in zip(self.nodes[c].S, node.S)) for c in node.children]

    def path(self, node_id):
        """Node ids from the root down to ``node_id`` inclusive."""
        out = []
        cur = node_id
        while cur is not None:
            out.append(cur)
            cur = self.nodes[cur].parent
        return out[::-1]

    def leaves_under(self, node_id):
        node = self.nodes[node_id]
        if node.is_leaf:
            return [node_id]
        out = []
        for c in node.children:
            out.extend(self.leaves_under(c))
        return out

    def zero(self):
        return convert(0, self.exact)

    def zero_vector(self):
        return tuple(self.zero() for _ in range(self.d))


# -- quasi-sure support and reachability --------------------------------------

def quasi_sure_support(node):
    """Indices of children charged by some measure of the node's family.

    The family is the convex hull of the extremes, so its strictly mixed
    members charge exactly the union of the extremes' supports.
    """
    if node.is_leaf:
        raise ValueError(f"node {node.id!r} is a leaf")
    out = set()
    for q in node.extremes:
        out.update(i for i, p in enumerate(q) if p > 0)
    return frozenset(out)


def supported_children(model, node_id):
    node = model.nodes[node_id]
    supp = quasi_sure_support(node)
    return [c for i, c in enumerate(node.children) if i in supp]


def reachable_nodes(model):
    """Nodes whose whole root path runs through quasi-sure supports."""
    out = [model.root]
    stack = [model.root]
    while stack:
        nid = stack.pop()
        node = model.nodes[nid]
        if node.is_leaf:
            continue
        for c in supported_children(model, nid):
            out.append(c)
            stack.append(c)
    order = {nid: k for k, nid in enumerate(model.nodes)}
    return sorted(out, key=order.__getitem__)


def reachable_leaves(model):
    return [n for n in reachable_nodes(model) if model.nodes[n].is_leaf]


# -- parsing and validation -----------------------------------------------------

def loads(text, mode="exact"):
    """Parse and validate a model from a JSON string."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from None
    return from_dict(raw, mode)


def load_model(path, mode="exact"):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return loads(text, mode)


def from_dict(raw, mode="exact"):
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    exact = mode == "exact"
    if not isinstance(raw, dict):
        raise ParseError("model file must hold a JSON object")
    for key in ("T", "d", "nodes"):
        if key not in raw:
            raise ParseError(f"missing top-level field {key!r}")
    T, d = raw["T"], raw["d"]
    if not isinstance(T, int) or isinstance(T, bool) or T < 0:
        raise ValidationError("T must be an integer >= 0")
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ValidationError("d must be an integer >= 1")
    if not isinstance(raw["nodes"], list) or not raw["nodes"]:
        raise ParseError("'nodes' must be a non-empty list")

    entries = {}
    for entry in raw["nodes"]:
        if not isinstance(entry, dict) or "id" not in entry:
            raise ParseError("every node needs an 'id'")
        nid = str(entry["id"])
        if nid in entries:
            raise ValidationError(f"duplicate node id {nid!r}")
        entries[nid] = entry

    roots = [nid for nid, e in entries.items() if e.get("parent") is None]
    if len(roots) != 1:
        raise ValidationError(f"expected exactly one root, found {len(roots)}")
    root = roots[0]
    kids = {nid: [] for nid in entries}
    for nid, e in entries.items():
        p = e.get("parent")
        if p is None:
            continue
        p = str(p)
        if p not in entries:
            raise ValidationError(f"node {nid!r} has unknown parent {p!r}")
        kids[p].append(nid)

    depth = {root: 0}
    order = [root]
    for nid in order:
        for c in sorted(kids[nid], key=id_key):
            depth[c] = depth[nid] + 1
            order.append(c)
    if len(depth) != len(entries):
        raise ValidationError("parent links contain a cycle or a detached subtree")

    nodes = {}
    for nid in sorted(entries, key=lambda n: (depth[n], id_key(n))):
        e = entries[nid]
        children = tuple(sorted(kids[nid], key=id_key))
        t = depth[nid]
        if children and t >= T:
            raise ValidationError(f"node {nid!r} at depth {t} has children but T={T}")
        if not children and t != T:
            raise ValidationError(f"leaf {nid!r} at depth {t}, leaves must sit at depth T={T}")
        S = e.get("S")
        if not isinstance(S, list) or len(S) != d:
            raise ValidationError(f"node {nid!r}: S must be a list of length d={d}")
        try:
            S = convert_vector(S, exact)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"node {nid!r}: bad price {exc}") from None
        extremes, constraint = (), None
        if children:
            extremes = _parse_extremes(e.get("extremes"), children, nid, exact)
            if "constraint" not in e:
                raise ValidationError(f"node {nid!r}: non-leaf node needs a constraint")
            constraint = make_constraint(e["constraint"], d, exact, where=f"node {nid!r}")
            if not constraint_contains_origin(constraint, exact):
                raise ValidationError(
                    f"origin not in constraint set at node {nid!r}: "
                    "the zero position must always be admissible")
        nodes[nid] = Node(nid, None if e.get("parent") is None else str(e["parent"]),
                          t, S, children, extremes, constraint)

    model = MarketModel(T, d, nodes, root, (), exact)
    options = []
    leaves = set(model.leaves)
    for k, opt in enumerate(raw.get("options", []) or []):
        options.append(parse_option(opt, leaves, exact, f"option {k}"))
    model.options = tuple(options)
    return model


def _parse_extremes(raw, children, nid, exact):
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"node {nid!r}: at least one extreme measure is required")
    out = []
    for q in raw:
        if isinstance(q, dict):
            unknown = set(map(str, q)) - set(children)
            if unknown:
                raise ValidationError(f"node {nid!r}: extreme charges non-children {sorted(unknown)}")
            q = [q.get(c, 0) for c in children]
            q = [v for v in q]
        if not isinstance(q, list) or len(q) != len(children):
            raise ValidationError(
                f"node {nid!r}: extreme must have one entry per child ({len(children)})")
        try:
            vec = convert_vector(q, exact)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"node {nid!r}: bad probability {exc}") from None
        if any(is_neg(p, exact) for p in vec):
            raise ValidationError(f"node {nid!r}: measure has a negative entry")
        if not is_zero(sum(vec) - 1, exact):
            raise ValidationError(f"node {nid!r}: measure does not sum to 1")
        out.append(vec)
    return tuple(out)


def parse_option(raw, leaves, exact, where="option"):
    if isinstance(raw, dict) and "payoffs" in raw:
        pay, name = raw["payoffs"], raw.get("name")
    else:
        pay, name = raw, None
    if not isinstance(pay, dict):
        raise ValidationError(f"{where}: payoffs must map leaf ids to values")
    pay = {str(k): v for k, v in pay.items()}
    missing = leaves - set(pay)
    if missing:
        raise ValidationError(f"{where}: payoff missing at leaves {sorted(missing, key=id_key)}")
    extra = set(pay) - leaves
    if extra:
        raise ValidationError(f"{where}: payoff given at non-leaf ids {sorted(extra, key=id_key)}")
    try:
        values = {k: parse_number(pay[k], exact) for k in sorted(pay, key=id_key)}
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"{where}: bad payoff value {exc}") from None
    return StaticOption(values, name)


# -- serialisation ----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (list, tuple)):
        return [_fmt(x) for x in v]
    if v is None:
        return None
    return format_number(v)


def to_dict(model):
    nodes = []
    for node in model.nodes.values():
        entry = {"id": node.id, "parent": node.parent, "S": _fmt(node.S)}
        if node.children:
            entry["extremes"] = [_fmt(q) for q in node.extremes]
            entry["constraint"] = {k: _fmt(v) if k != "kind" and k != "cone" else v
                                   for k, v in node.constraint.params.items()}
        nodes.append(entry)
    out = {"T": model.T, "d": model.d, "nodes": nodes}
    if model.options:
        opts = []
        for opt in model.options:
            o = {"payoffs": {k: _fmt(v) for k, v in opt.payoffs.items()}}
            if opt.name is not None:
                o["name"] = opt.name
            opts.append(o)
        out["options"] = opts
    return out


def dumps(model):
    """Canonical JSON text; stable byte-for-byte for a given model."""
    return json.dumps(to_dict(model), indent=2) + "\n"


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def model_equal(a, b):
    return dumps(a) == dumps(b) and a.exact == b.exact


def as_fraction(x):
    return x if isinstance(x, Fraction) else Fraction(x)
