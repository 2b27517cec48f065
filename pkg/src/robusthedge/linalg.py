"""Small dense linear algebra over Fractions or floats.

Pivoting follows the arithmetic: first nonzero entry in exact mode, largest
absolute value in float mode.  Bases are kept orthogonal but unnormalised so
that exact mode never needs square roots.
"""
from .numeric import FLOAT_TOL, dot


def _is_zero(x, exact):
    return x == 0 if exact else abs(x) <= FLOAT_TOL


def row_reduce(rows, ncols, exact):
    """Reduced row echelon form.  Returns (rref_rows, pivot_columns)."""
    M = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(ncols):
        if r >= len(M):
            break
        cand = [i for i in range(r, len(M)) if not _is_zero(M[i][col], exact)]
        if not cand:
            continue
        if exact:
            p = cand[0]
        else:
            p = max(cand, key=lambda i: abs(M[i][col]))
        M[r], M[p] = M[p], M[r]
        piv = M[r][col]
        M[r] = [v / piv for v in M[r]]
        for i in range(len(M)):
            if i != r and not _is_zero(M[i][col], exact):
                f = M[i][col]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        pivots.append(col)
        r += 1
    return M[:r], pivots


def rank(rows, ncols, exact):
    return len(row_reduce(rows, ncols, exact)[1])


def null_space(rows, ncols, exact):
    """Basis of ``{h : row . h = 0 for every row}``."""
    R, pivots = row_reduce(rows, ncols, exact)
    one, zero = (1, 0) if exact else (1.0, 0.0)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [zero] * ncols
        v[fcol] = one
        for row, pcol in zip(R, pivots):
            v[pcol] = -row[fcol]
        basis.append(tuple(v))
    return basis


def gram_schmidt(vectors, exact):
    """Mutually orthogonal spanning set, zero vectors dropped."""
    out = []
    for v in vectors:
        w = list(v)
        for u in out:
            uu = dot(u, u)
            coef = dot(w, u) / uu
            w = [a - coef * b for a, b in zip(w, u)]
        if exact:
            nonzero = any(x != 0 for x in w)
        else:
            nonzero = dot(w, w) > FLOAT_TOL * max(1.0, dot(v, v))
        if nonzero:
            out.append(tuple(w))
    return out


def project(x, ortho_basis):
    """Orthogonal projection of ``x`` on the span of an orthogonal basis."""
    zero = x[0] * 0 if x else 0
    out = [zero] * len(x)
    for u in ortho_basis:
        coef = dot(x, u) / dot(u, u)
        out = [a + coef * b for a, b in zip(out, u)]
    return tuple(out)


def solve_square(M, rhs, exact):
    """Solve ``M y = rhs`` for square ``M``; ``None`` when singular."""
    n = len(M)
    aug = [list(row) + [r] for row, r in zip(M, rhs)]
    R, pivots = row_reduce(aug, n, exact)
    if len(pivots) < n:
        return None
    return tuple(R[i][n] for i in range(n))
