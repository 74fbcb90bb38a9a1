"""Catalog of target functions on [0,1].

Every catalog entry is a :class:`Function1D`: a uniform evaluation
interface over exact rationals, doubles, numpy arrays, and gmpy2 mpfr
scalars, with optional analytic derivatives.  Piecewise-linear entries
(including the sawtooth and the variance gadget) evaluate exactly over
rationals; transcendental entries fall back to float.
"""

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpfr


class UnknownFunctionError(ValueError):
    pass


class FunctionDomainError(ValueError):
    pass


class SingularDerivativeError(ValueError):
    """Derivative requested at a singular point (e.g. entropy at 0)."""


def _ln(x):
    if isinstance(x, mpfr):
        return gmpy2.log(x)
    if isinstance(x, np.ndarray):
        return np.log(x)
    return math.log(x)


def _pow(x, a):
    if isinstance(x, mpfr):
        return x ** mpfr(a)
    if isinstance(x, np.ndarray):
        return np.power(x, a)
    return float(x) ** a


def _as_float(p):
    if isinstance(p, Fraction):
        return p.numerator / p.denominator
    return p


@dataclass(frozen=True)
class Function1D:
    """An evaluable target function f on [0,1].

    ``eval_fn(p)`` must accept Fractions (exact when ``rational``),
    floats, numpy arrays, and mpfr scalars.  ``deriv_fn(order, p)`` is
    optional; ``max_deriv_order`` caps the supported order (None means
    unbounded).
    """

    name: str
    eval_fn: object
    deriv_fn: object = None
    max_deriv_order: object = 0
    smoothness_class: object = None  # (s, L) for condition-D_s members
    rational: bool = False
    sup_bound: object = None
    notes: str = ""

    def __call__(self, p):
        return self.eval_fn(p)

    def deriv(self, order, p):
        if order < 1:
            raise ValueError("derivative order must be >= 1")
        if self.deriv_fn is None:
            raise ValueError(f"{self.name} carries no derivatives")
        if self.max_deriv_order is not None and order > self.max_deriv_order:
            raise ValueError(
                f"{self.name} supports derivatives up to order {self.max_deriv_order}"
            )
        return self.deriv_fn(order, p)

    @property
    def has_deriv(self):
        return self.deriv_fn is not None


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear function with rational nodes.

    Evaluation outside the node span clamps to the nearest node value.
    """

    nodes: tuple  # ((x, y), ...) with strictly increasing Fraction x
    _xs_float: tuple = field(init=False, default=())

    def __post_init__(self):
        xs = [x for x, _ in self.nodes]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise FunctionDomainError("pwl nodes must have strictly increasing x")
        object.__setattr__(self, "_xs_float", tuple(float(x) for x in xs))

    @property
    def sup_abs(self):
        return max(abs(y) for _, y in self.nodes)

    def __call__(self, p):
        if isinstance(p, np.ndarray):
            xs = np.asarray(self._xs_float)
            ys = np.asarray([float(y) for _, y in self.nodes])
            return np.interp(p, xs, ys)
        return self._eval_scalar(p)

    def _eval_scalar(self, p):
        nodes = self.nodes
        key = _as_float(p)
        if key <= self._xs_float[0]:
            x0, y0 = nodes[0]
            if p <= x0:
                return _match_type(y0, p)
        if key >= self._xs_float[-1]:
            xn, yn = nodes[-1]
            if p >= xn:
                return _match_type(yn, p)
        i = bisect_right(self._xs_float, key) - 1
        i = max(0, min(i, len(nodes) - 2))
        # float keys can land one segment off for rational p; fix up exactly
        while i > 0 and p < nodes[i][0]:
            i -= 1
        while i < len(nodes) - 2 and p > nodes[i + 1][0]:
            i += 1
        (x0, y0), (x1, y1) = nodes[i], nodes[i + 1]
        if isinstance(p, Fraction):
            return y0 + (y1 - y0) * (p - x0) / (x1 - x0)
        if isinstance(p, mpfr):
            conv = _frac_to_mpfr
        else:
            conv = lambda q: q.numerator / q.denominator
        return conv(y0) + conv(Fraction(y1 - y0, 1) / (x1 - x0)) * (p - conv(x0))


def _frac_to_mpfr(q):
    return mpfr(q.numerator) / mpfr(q.denominator)


def _match_type(y, p):
    if isinstance(p, Fraction):
        return y
    if isinstance(p, mpfr):
        return _frac_to_mpfr(y)
    return y.numerator / y.denominator


def from_pwl(name, pwl, **kw):
    return Function1D(
        name=name,
        eval_fn=pwl,
        rational=True,
        sup_bound=pwl.sup_abs,
        **kw,
    )


# ---------------------------------------------------------------------------
# catalog entries


def make_entropy():
    def ev(p):
        if isinstance(p, np.ndarray):
            out = np.zeros_like(p, dtype=float)
            mask = p > 0
            out[mask] = -p[mask] * np.log(p[mask])
            return out
        if p == 0 or p == 1:
            return _zero_like(p)
        p = _as_float(p) if isinstance(p, Fraction) else p
        return -p * _ln(p)

    def dv(order, p):
        if p <= 0 or p >= 1:
            raise SingularDerivativeError("entropy derivative is singular at the endpoints")
        p = _as_float(p) if isinstance(p, Fraction) else p
        if order == 1:
            return -_ln(p) - 1
        # f^{(l)} = -(-1)^l (l-2)! / p^{l-1} for l >= 2
        sign = -1 if order % 2 == 0 else 1
        return sign * math.factorial(order - 2) / _pow(p, order - 1)

    return Function1D("entropy", ev, dv, max_deriv_order=None,
                      notes="-p ln p with 0 ln 0 = 0")


def _zero_like(p):
    if isinstance(p, Fraction):
        return 0.0
    if isinstance(p, mpfr):
        return mpfr(0)
    return 0.0


def make_power(alpha):
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise FunctionDomainError("power exponent must lie in (0,1)")

    def ev(p):
        if isinstance(p, np.ndarray):
            return np.power(p, alpha)
        if p == 0:
            return _zero_like(p)
        p = _as_float(p) if isinstance(p, Fraction) else p
        return _pow(p, alpha)

    def dv(order, p):
        if p <= 0:
            raise SingularDerivativeError("power derivative is singular at 0")
        p = _as_float(p) if isinstance(p, Fraction) else p
        coef = 1.0
        for i in range(order):
            coef *= alpha - i
        return coef * _pow(p, alpha - order)

    return Function1D(f"power[{alpha}]", ev, dv, max_deriv_order=None)


def make_absdev():
    half = Fraction(1, 2)

    def ev(p):
        if isinstance(p, np.ndarray):
            return np.abs(p - 0.5)
        if isinstance(p, Fraction):
            return abs(p - half)
        if isinstance(p, mpfr):
            return abs(p - mpfr(1) / 2)
        return abs(p - 0.5)

    return Function1D("absdev", ev, rational=True, sup_bound=Fraction(1, 2),
                      notes="|p - 1/2|")


def make_xlog(delta, gamma):
    delta = float(delta)
    gamma = float(gamma)
    if delta <= 0 or gamma < 0:
        raise FunctionDomainError("xlog requires delta > 0 and gamma >= 0")

    def ev(p):
        if isinstance(p, np.ndarray):
            out = np.zeros_like(p, dtype=float)
            mask = p > 0
            out[mask] = np.power(p[mask], delta) * np.abs(np.log(p[mask] / 2.0)) ** gamma
            return out
        if p == 0:
            return _zero_like(p)
        p = _as_float(p) if isinstance(p, Fraction) else p
        return _pow(p, delta) * _pow(abs(_ln(p / 2)), gamma)

    return Function1D(f"xlog[{delta},{gamma}]", ev,
                      notes="p^delta |ln(p/2)|^gamma")


def make_poly(coeffs):
    """Polynomial sum c_i p^i with exact rational coefficients."""
    coeffs = tuple(Fraction(c) for c in coeffs)
    if not coeffs:
        raise FunctionDomainError("poly needs at least one coefficient")
    fl = np.asarray([float(c) for c in coeffs])
    deg = len(coeffs) - 1

    def ev(p):
        if isinstance(p, np.ndarray):
            return np.polyval(fl[::-1], p)
        if isinstance(p, Fraction):
            acc = Fraction(0)
            for c in reversed(coeffs):
                acc = acc * p + c
            return acc
        if isinstance(p, mpfr):
            acc = mpfr(0)
            for c in reversed(coeffs):
                acc = acc * p + _frac_to_mpfr(c)
            return acc
        acc = 0.0
        for c in reversed(fl[::-1][::-1]):
            pass
        return float(np.polyval(fl[::-1], p))

    def dv(order, p):
        dc = list(coeffs)
        for _ in range(order):
            dc = [i * c for i, c in enumerate(dc)][1:]
            if not dc:
                dc = [Fraction(0)]
        if isinstance(p, Fraction):
            acc = Fraction(0)
            for c in reversed(dc):
                acc = acc * p + c
            return acc
        if isinstance(p, mpfr):
            acc = mpfr(0)
            for c in reversed(dc):
                acc = acc * p + _frac_to_mpfr(c)
            return acc
        return float(np.polyval([float(c) for c in dc][::-1], p))

    L = float(sum(abs(c) for c in coeffs)) * max(1.0, float(math.factorial(deg)))
    return Function1D(
        f"poly[deg={deg}]", ev, dv, max_deriv_order=None,
        smoothness_class=(deg, L), rational=True,
        notes="coefficients " + ",".join(str(c) for c in coeffs),
    )


def make_affine(a, b):
    """f(p) = a p + b."""
    f = make_poly([Fraction(b), Fraction(a)])
    return Function1D("affine", f.eval_fn, f.deriv_fn, max_deriv_order=None,
                      smoothness_class=f.smoothness_class, rational=True)


def make_sawtooth(n=None):
    """Piecewise-linear interpolant of (1/m, (1+(-1)^m)/2) down to 1/M.

    Stores nodes for m = 1..M with M = max(4n, 1000) and closes linearly
    to (0, 0); f(1/m) is 1 for even m, 0 for odd m.
    """
    M = max(4 * int(n), 1000) if n else 1000
    nodes = [(Fraction(0), Fraction(0))]
    for m in range(M, 0, -1):
        y = Fraction(1 + (-1) ** m, 2)
        nodes.append((Fraction(1, m), y))
    pwl = PiecewiseLinear(tuple(nodes))
    return from_pwl("sawtooth", pwl, notes=f"reciprocal nodes down to 1/{M}")


def make_variance_gadget(n):
    n = int(n)
    if n < 4:
        raise FunctionDomainError("variance gadget requires n >= 4")
    nodes = sorted(
        [
            (Fraction(0), Fraction(0)),
            (Fraction(1, n), Fraction(1)),
            (Fraction(1, n - 1), Fraction(-1)),
            (Fraction(2, n), Fraction(-1)),
            (Fraction(2, n - 1), Fraction(1)),
            (Fraction(1), Fraction(0)),
        ]
    )
    pwl = PiecewiseLinear(tuple(nodes))
    return from_pwl(f"variance_gadget[{n}]", pwl)


def make_pwl(nodes):
    nodes = tuple((Fraction(x), Fraction(y)) for x, y in nodes)
    return from_pwl("pwl", PiecewiseLinear(nodes))


def make_exp_poly(degree=12):
    """Taylor polynomial of e^p: a smooth catalog entry with exact derivatives."""
    return make_poly([Fraction(1, math.factorial(i)) for i in range(degree + 1)])


def load_pwl_csv(path):
    """Read pwl nodes from CSV with header x,y; decimal or a/b literals."""
    nodes = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["x", "y"]:
            raise FunctionDomainError("pwl CSV must have header x,y")
        for row in reader:
            nodes.append((Fraction(row["x"].strip()), Fraction(row["y"].strip())))
    return make_pwl(nodes)


_CATALOG = {
    "entropy": lambda params: make_entropy(),
    "power": lambda params: make_power(params["alpha"]),
    "absdev": lambda params: make_absdev(),
    "xlog": lambda params: make_xlog(params["delta"], params["gamma"]),
    "sawtooth": lambda params: make_sawtooth(params.get("n")),
    "variance_gadget": lambda params: make_variance_gadget(params["n"]),
    "poly": lambda params: make_poly(params["coeffs"]),
    "pwl": lambda params: make_pwl(params["nodes"]),
    "affine": lambda params: make_affine(params["a"], params["b"]),
}


def catalog_get(name, params=None):
    if name not in _CATALOG:
        raise UnknownFunctionError(f"unknown catalog function {name!r}")
    return _CATALOG[name](params or {})
