"""Bracketed scalar root finding: bisection with secant refinement.

All nonlinear solves in the package go through ``bracketed_root`` so the
termination policy is uniform: keep a sign-changing bracket at all times,
prefer secant steps while they stay inside the bracket, fall back to
bisection otherwise, and stop on a small residual or an exhausted bracket.
"""

import math

from .errors import RootBracketError

MAX_ITER = 200


def bracketed_root(f, lo, hi, residual_tol=1e-10, max_iter=MAX_ITER):
    """Find x in [lo, hi] with f(x) = 0, given f(lo) and f(hi) of opposite sign.

    Returns the root to |f(x)| <= residual_tol, or to bracket exhaustion
    (width at floating-point resolution), whichever comes first.

    Raises RootBracketError if the initial bracket does not change sign.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise RootBracketError(
            f"no sign change on [{lo!r}, {hi!r}]: f(lo)={flo!r}, f(hi)={fhi!r}"
        )

    a, fa = lo, flo
    b, fb = hi, fhi
    x, fx = (a, fa) if abs(fa) < abs(fb) else (b, fb)
    x_prev, fx_prev = (b, fb) if x == a else (a, fa)

    for _ in range(max_iter):
        if abs(fx) <= residual_tol:
            return x
        width = b - a
        if width <= abs(a) * 4e-16 + 5e-324:
            return x

        # Secant proposal from the two most recent iterates.
        step_ok = False
        denom = fx - fx_prev
        if denom != 0.0:
            x_sec = x - fx * (x - x_prev) / denom
            if a < x_sec < b:
                x_new = x_sec
                step_ok = True
        if not step_ok:
            x_new = a + 0.5 * width

        f_new = f(x_new)
        x_prev, fx_prev = x, fx
        x, fx = x_new, f_new
        if fa * f_new <= 0.0:
            b, fb = x_new, f_new
        else:
            a, fa = x_new, f_new

    return x


def expand_bracket(f, x0, step, grow=1.6, limit=None, max_iter=MAX_ITER):
    """Walk from x0 in the direction of ``step`` until f changes sign.

    Returns a (lo, hi) bracket ordered ascending. ``limit`` clips the walk at
    a domain edge; hitting it without a sign change raises RootBracketError.
    """
    f0 = f(x0)
    if f0 == 0.0:
        return x0, x0
    x_prev = x0
    x = x0 + step
    for _ in range(max_iter):
        if limit is not None:
            if (step > 0 and x > limit) or (step < 0 and x < limit):
                x = limit
        fx = f(x)
        if f0 * fx <= 0.0:
            return (x_prev, x) if x_prev < x else (x, x_prev)
        if limit is not None and x == limit:
            raise RootBracketError(
                f"no sign change between {x0!r} and domain edge {limit!r}"
            )
        x_prev = x
        step *= grow
        x = x0 + step if abs(step) > abs(x - x0) else x + step
    raise RootBracketError(f"bracket expansion from {x0!r} exhausted")


def is_finite(x):
    return isinstance(x, float) and math.isfinite(x)
