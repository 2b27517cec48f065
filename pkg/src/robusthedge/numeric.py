"""Number handling for the two arithmetic modes.

Exact mode works with :class:`fractions.Fraction` at every public surface;
float mode with plain ``float``.  ``FLOAT_TOL`` is the comparison slack used
wherever float mode needs to decide a sign.
"""
import math
from fractions import Fraction

FLOAT_TOL = 1e-9


def parse_number(value, exact):
    """Convert a JSON scalar (int, float or ``"p/q"`` string) to the mode's type."""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if exact:
        if isinstance(value, str):
            return Fraction(value.strip())
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"non-finite value {value!r}")
            # decimal repr, not the binary expansion: 0.1 -> 1/10
            return Fraction(repr(value))
        return Fraction(value)
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    out = float(value)
    if not math.isfinite(out):
        raise ValueError(f"non-finite value {value!r}")
    return out


def convert(value, exact):
    if exact:
        if isinstance(value, Fraction):
            return value
        return parse_number(value, True)
    if isinstance(value, str):
        return parse_number(value, False)
    return float(value)


def convert_vector(values, exact):
    return tuple(convert(v, exact) for v in values)


def tol(exact):
    return 0 if exact else FLOAT_TOL


def is_zero(x, exact):
    return x == 0 if exact else abs(x) <= FLOAT_TOL


def is_pos(x, exact):
    return x > 0 if exact else x > FLOAT_TOL


def is_neg(x, exact):
    return x < 0 if exact else x < -FLOAT_TOL


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), 0)


def format_number(x):
    """JSON-ready representation: ``"p/q"`` strings for rationals."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def sqrt_bracket(x, width=Fraction(1, 10**12)):
    """Certified rational bounds ``lo <= sqrt(x) <= hi`` with ``hi - lo <= width``.

    Returns ``(r, r)`` when ``x`` is the square of a rational.
    """
    x = Fraction(x)
    if x < 0:
        raise ValueError("sqrt of a negative number")
    p, q = x.numerator, x.denominator
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp == p and rq * rq == q:
        r = Fraction(rp, rq)
        return r, r
    # sqrt(p/q) = sqrt(p*q)/q; scale so that the integer root resolves width
    scale = 1
    while Fraction(1, scale * q) > width:
        scale *= 10
    n = p * q * scale * scale
    root = math.isqrt(n)
    lo = Fraction(root, scale * q)
    hi = Fraction(root + 1, scale * q)
    return lo, hi


def norm(v, exact):
    """Euclidean norm; exact when the squared norm is a rational square."""
    sq = sum((a * a for a in v), 0)
    if not exact:
        return math.sqrt(sq)
    lo, hi = sqrt_bracket(sq)
    if lo == hi:
        return lo
    return float((lo + hi) / 2)
