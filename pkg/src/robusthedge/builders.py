"""Programmatic construction of market models.

Builders emit the same dictionary a JSON file would hold and run it through
:func:`robusthedge.model.from_dict`, so every invariant is validated.
"""
from fractions import Fraction

from .model import from_dict


def box(lower, upper):
    return {"kind": "box", "lower": list(lower), "upper": list(upper)}


def cone(generators):
    return {"kind": "polytope_v", "cone": True, "generators": [list(g) for g in generators]}


def vertices(points):
    return {"kind": "polytope_v", "vertices": [list(p) for p in points]}


def halfspaces(A, b):
    return {"kind": "polytope_h", "A": [list(r) for r in A], "b": list(b)}


def ball(center, radius):
    return {"kind": "ball", "center": list(center), "radius": radius}


def _num(x):
    return Fraction(x) if isinstance(x, (int, str)) else x


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def tree_dict(T, S0, branches, constraint, extremes, root_id="root"):
    """Dictionary form of a tree model.

    ``branches(path)`` returns ``[(label, increment), ...]`` for the node
    reached by the label tuple ``path``; ``constraint(path)`` and
    ``extremes(path)`` return the node's constraint dict and a list of
    extreme measures, each either a list in branch order or a dict keyed by
    branch label.  Node ids are the concatenated labels.
    """
    S0 = list(S0)
    d = len(S0)
    nodes = []

    def name(path):
        return "".join(path) if path else root_id

    def visit(path, S):
        entry = {"id": name(path), "parent": name(path[:-1]) if path else None, "S": list(S)}
        nodes.append(entry)
        if len(path) == T:
            return
        kids = branches(path)
        labels = [lab for lab, _ in kids]
        ext = []
        for q in extremes(path):
            if isinstance(q, dict):
                ext.append({name(path + (lab,)): p for lab, p in q.items()})
            else:
                ext.append({name(path + (lab,)): p for lab, p in zip(labels, q)})
        entry["extremes"] = ext
        entry["constraint"] = constraint(path)
        for lab, inc in kids:
            inc = [_num(x) for x in (inc if isinstance(inc, (list, tuple)) else [inc])]
            visit(path + (lab,), [a + b for a, b in zip(S, inc)])

    visit((), [_num(x) for x in S0])
    return _jsonable({"T": T, "d": d, "nodes": nodes})


def build_tree(T, S0, branches, constraint, extremes, mode="exact", options=()):
    raw = tree_dict(T, S0, branches, constraint, extremes)
    if options:
        raw["options"] = [{"payoffs": _jsonable(dict(o))} for o in options]
    return from_dict(raw, mode)


def binomial(T, constraint=None, extremes=None, up=1, down=-1, S0=0, mode="exact"):
    """Binomial tree with labels ``u``/``d`` and constant increments.

    Defaults: position set [0, 1] and the two extremes (3/10, 7/10) and
    (7/10, 3/10) at every node.
    """
    if constraint is None:
        constraint = box([0], [1])
    if extremes is None:
        extremes = [["3/10", "7/10"], ["7/10", "3/10"]]
    cons = constraint if callable(constraint) else (lambda path: constraint)
    ext = extremes if callable(extremes) else (lambda path: extremes)
    return build_tree(T, [S0], lambda path: [("u", up), ("d", down)], cons, ext, mode)


def one_period(increments, constraint, extremes, S0=None, mode="exact", options=()):
    """Single-node model; children labelled ``a0, a1, ...``."""
    incs = [list(v) if isinstance(v, (list, tuple)) else [v] for v in increments]
    d = len(incs[0])
    if S0 is None:
        S0 = [0] * d
    labels = [f"a{i}" for i in range(len(incs))]
    return build_tree(
        1, S0,
        lambda path: list(zip(labels, incs)),
        lambda path: constraint,
        lambda path: extremes,
        mode,
        options=[{("a" + str(i)): v for i, v in enumerate(o)} if isinstance(o, (list, tuple)) else o
                 for o in options],
    )
