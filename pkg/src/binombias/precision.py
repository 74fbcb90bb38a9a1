"""Precision plumbing shared by all numeric modules.

Two computation modes are used throughout:

* exact mode: ``fractions.Fraction`` values, no rounding anywhere;
* float mode: ``gmpy2.mpfr`` with a caller-chosen mantissa size
  (default 256 bits, overridable via the BIAS_PRECISION_BITS env var).
"""

import os
from contextlib import contextmanager
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

DEFAULT_BITS = int(os.environ.get("BIAS_PRECISION_BITS", "256"))


def default_bits():
    return DEFAULT_BITS


@contextmanager
def bits(nbits):
    """Run a block with gmpy2 arithmetic at the given mantissa size."""
    ctx = gmpy2.get_context().copy()
    ctx.precision = int(nbits)
    saved = gmpy2.get_context()
    gmpy2.set_context(ctx)
    try:
        yield
    finally:
        gmpy2.set_context(saved)


def to_mpfr(x):
    """Convert ints, floats, Fractions and mpfr to mpfr at current precision."""
    if isinstance(x, Fraction):
        return mpfr(x.numerator) / mpfr(x.denominator)
    return mpfr(x)


def golden_max(fun, lo, hi, iters=40):
    """Golden-section search for the maximum of a unimodal function.

    Returns (argmax, max, bracket_width). Works for Fraction endpoints
    converted to the active float type; evaluation is via ``fun``.
    """
    lo = to_mpfr(lo)
    hi = to_mpfr(hi)
    invphi = (gmpy2.sqrt(mpfr(5)) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    if fc > fd:
        return c, fc, b - a
    return d, fd, b - a
