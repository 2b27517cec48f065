"""Null spaces, projected position sets, generated cones and their closedness.

Subspaces are stored through orthogonal but unnormalised bases, so exact mode
never takes square roots: projections and membership only need span data.
"""
from dataclasses import dataclass

from . import linalg
from .lp import EQ, LinearProgram, Status, solve
from .model import BALL, POLYTOPE_V, ConstraintSet, supported_children
from .numeric import dot


@dataclass(frozen=True)
class NullSpaceDecomposition:
    """``R^d = null (+) perp`` for the supported increments of one node.

    ``perp_basis`` spans the supported increments, ``null_basis`` its
    orthogonal complement: the positions whose gain vanishes quasi-surely.
    """

    null_basis: tuple
    perp_basis: tuple
    d: int
    exact: bool

    @property
    def full_rank(self):
        return len(self.perp_basis) == self.d

    def project(self, x):
        """Orthogonal projection onto the span of the supported increments."""
        if self.full_rank:
            return tuple(x)
        if not self.perp_basis:
            return tuple(v * 0 for v in x)
        return linalg.project(x, self.perp_basis)


@dataclass(frozen=True)
class GeneratedCone:
    """A convex cone in one of three representations.

    * ``polyhedral``: nonnegative combinations of ``generators``;
    * ``halfspaces``: ``{y : a.y >= 0 for a in normals}``;
    * ``ball_cone``: nonnegative scalings of the ball ``B(center, radius)``
      inside the subspace spanned by ``subspace``.
    """

    kind: str
    generators: tuple = ()
    normals: tuple = ()
    center: tuple = None
    radius: object = None
    subspace: tuple = ()
    exact: bool = True

    def contains(self, y):
        exact = self.exact
        eps = 0 if exact else 1e-9
        if self.kind == "halfspaces":
            return all(dot(a, y) >= -eps for a in self.normals)
        if self.kind == "polyhedral":
            gens = self.generators
            if not gens:
                return all(v == 0 if exact else abs(v) <= eps for v in y)
            d = len(y)
            A = [[g[i] for g in gens] for i in range(d)]
            res = solve(LinearProgram([0] * len(gens), A, list(y), [EQ] * d),
                        "exact" if exact else "float")
            return res.status is Status.OPTIMAL
        return _in_ball_cone(self, y)


def _in_ball_cone(cone, y):
    exact = cone.exact
    eps = 0 if exact else 1e-9
    yy = dot(y, y)
    if (yy == 0) if exact else yy <= eps:
        return True
    # must lie in the subspace
    proj = linalg.project(y, cone.subspace) if cone.subspace else tuple(0 * v for v in y)
    resid = [a - b for a, b in zip(y, proj)]
    if (dot(resid, resid) > 0) if exact else dot(resid, resid) > eps:
        return False
    c, r = cone.center, cone.radius
    cc, rr = dot(c, c), r * r
    yc = dot(y, c)
    if cc < rr:
        return True
    if cc == rr:
        return rr > 0 and yc > eps
    # origin outside: angle to the center at most asin(r/|c|)
    return yc > eps and yc * yc >= yy * (cc - rr) - eps


def supported_increments(model, node_id):
    node = model.nodes[node_id]
    incs = dict(zip(node.children, model.increments(node_id)))
    return [incs[c] for c in supported_children(model, node_id)]


def null_space(model, node_id):
    """Split R^d into positions with quasi-surely zero gain and their complement."""
    exact = model.exact
    incs = supported_increments(model, node_id)
    d = model.d
    perp = linalg.gram_schmidt(incs, exact)
    null = linalg.gram_schmidt(linalg.null_space(incs, d, exact), exact) if incs else \
        linalg.gram_schmidt([tuple(1 if i == j else 0 for i in range(d)) for j in range(d)], exact)
    if not exact:
        perp = [tuple(float(x) for x in v) for v in perp]
        null = [tuple(float(x) for x in v) for v in null]
    return NullSpaceDecomposition(tuple(null), tuple(perp), d, exact)


def project_constraint(cs, decomp):
    """Orthogonal projection of a position set onto the supported span."""
    if decomp.full_rank:
        return cs
    exact = decomp.exact
    zero = tuple((0 if exact else 0.0) for _ in range(decomp.d))
    if cs.kind == BALL:
        if not decomp.perp_basis:
            return ConstraintSet(POLYTOPE_V, {"kind": POLYTOPE_V, "vertices": [list(zero)]}, (zero,), ())
        center = decomp.project(cs.center)
        params = {"kind": BALL, "center": list(center), "radius": cs.radius,
                  "subspace": [list(v) for v in decomp.perp_basis]}
        return ConstraintSet(BALL, params, center=center, radius=cs.radius)
    verts = _dedupe(decomp.project(v) for v in cs.vertices)
    rays = _dedupe(r for r in (decomp.project(r) for r in cs.rays) if any(r))
    params = {"kind": POLYTOPE_V, "vertices": [list(v) for v in verts]}
    if rays:
        params["rays"] = [list(r) for r in rays]
    return ConstraintSet(POLYTOPE_V, params, verts, rays, cone=cs.cone)


def _dedupe(points):
    seen, out = set(), []
    for p in points:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return tuple(out)


def generated_cone(cs, exact=True, subspace=None):
    """Cone ``{c h : h in set, c >= 0}`` of a (projected) position set.

    ``subspace`` is the orthogonal basis the set lives in; it only matters
    for balls, whose cone geometry depends on the ambient dimension.
    """
    if cs.kind == BALL:
        if subspace is None:
            sub = cs.params.get("subspace")
            if sub is not None:
                subspace = tuple(tuple(v) for v in sub)
            else:
                d = len(cs.center)
                one = 1 if exact else 1.0
                subspace = tuple(tuple(one if i == j else one * 0 for i in range(d)) for j in range(d))
        return GeneratedCone("ball_cone", center=tuple(cs.center), radius=cs.radius,
                             subspace=tuple(subspace), exact=exact)
    gens = _dedupe(g for g in cs.generators if any(g))
    return GeneratedCone("polyhedral", generators=gens, exact=exact)


def cone_closedness(cone):
    """Decide closedness; returns ``(closed, witness)``.

    Finitely generated and halfspace cones are closed.  The cone over a ball
    ``B(c, r)`` inside a subspace L is closed unless the ball touches the
    origin from outside (``|c| = r > 0``) and L has dimension at least two;
    then it is an open half-space plus the origin, and any direction of L
    orthogonal to ``c`` lies in the closure but not in the cone.
    """
    if cone.kind != "ball_cone":
        return True, None
    c, r = cone.center, cone.radius
    cc, rr = dot(c, c), r * r
    tangent = (cc == rr) if cone.exact else abs(cc - rr) <= 1e-12 * max(1.0, rr)
    if r == 0 or not tangent or len(cone.subspace) < 2:
        return True, None
    for v in cone.subspace:
        w = linalg.gram_schmidt([c, v], cone.exact)
        if len(w) == 2:
            return False, w[1]
    return True, None


def polar_arbitrage_cone(model, node_id):
    """Positions with nonnegative gain on every supported child."""
    return GeneratedCone("halfspaces", normals=tuple(supported_increments(model, node_id)),
                         exact=model.exact)
