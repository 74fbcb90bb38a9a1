"""Taylor-series bias correction and sample splitting.

The correctors t_i are kept symbolic as linear differential forms
(order -> polynomial coefficient in p, exact rationals), so applying the
T_j operators only requires formal differentiation; f-derivatives enter
at evaluation time.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import binom as _sp_binom

from .binom import h_coeffs, pmf_row
from .jackknife import BiasCurve, _golden_refine


def _poly_add(a, b):
    out = [Fraction(0)] * max(len(a), len(b))
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] += c
    return out


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return out


def _poly_diff(a):
    return [i * c for i, c in enumerate(a)][1:] or [Fraction(0)]


def _poly_eval(a, p):
    acc = 0
    for c in reversed(a):
        acc = acc * p + (c if isinstance(p, Fraction) else float(c))
    return acc


def _trim(a):
    while a and a[-1] == 0:
        a = a[:-1]
    return a


@dataclass(frozen=True)
class LinearDifferentialForm:
    """sum_l q_l(p) f^{(l)}(p); terms maps order l to q_l coefficient list."""

    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for l, q in self.terms.items():
            q = _trim([Fraction(c) for c in q])
            if q:
                clean[int(l)] = tuple(q)
        object.__setattr__(self, "terms", clean)

    @property
    def max_order(self):
        return max(self.terms, default=0)

    def __add__(self, other):
        out = {l: list(q) for l, q in self.terms.items()}
        for l, q in other.terms.items():
            out[l] = _poly_add(out.get(l, []), list(q))
        return LinearDifferentialForm(out)

    def scale(self, c):
        return LinearDifferentialForm(
            {l: [x * Fraction(c) for x in q] for l, q in self.terms.items()}
        )

    def mul_poly(self, poly):
        poly = [Fraction(c) for c in poly]
        return LinearDifferentialForm(
            {l: _poly_mul(list(q), poly) for l, q in self.terms.items()}
        )

    def diff(self):
        """Formal d/dp by the product rule: q f^{(l)} -> q' f^{(l)} + q f^{(l+1)}."""
        out = {}
        for l, q in self.terms.items():
            out[l] = _poly_add(out.get(l, []), _poly_diff(list(q)))
            out[l + 1] = _poly_add(out.get(l + 1, []), list(q))
        return LinearDifferentialForm(out)

    def eval(self, f, p):
        acc = 0
        for l, q in sorted(self.terms.items()):
            fd = f(p) if l == 0 else f.deriv(l, p)
            acc = acc + _poly_eval(list(q), p) * fd
        return acc

    def is_zero(self):
        return not self.terms

    def to_json(self):
        return [
            {"order": l, "poly": [[c.numerator, c.denominator] for c in q]}
            for l, q in sorted(self.terms.items())
        ]


def identity_form():
    return LinearDifferentialForm({0: [Fraction(1)]})


def T_operator(j):
    """T_j[g](p) = sum_{i=j+1}^{2j} g^{(i)}(p)/i! h_{i-j,i}(p) on forms."""
    if j < 1:
        raise ValueError("j must be >= 1")

    def apply(form):
        out = LinearDifferentialForm()
        d = form
        order = 0
        for i in range(j + 1, 2 * j + 1):
            while order < i:
                d = d.diff()
                order += 1
            h = h_coeffs(i)[i - j]
            out = out + d.mul_poly(h).scale(Fraction(1, math.factorial(i)))
        return out

    return apply


def construction_sequence(f, k):
    """t_0 = f, t_i = -sum_{j=1}^i T_j[t_{i-j}], i < k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    need = 2 * (k - 1)
    if f.max_deriv_order is not None and f.max_deriv_order < need:
        raise ValueError(f"{f.name} lacks derivatives to order {need}")
    ts = [identity_form()]
    for i in range(1, k):
        acc = LinearDifferentialForm()
        for j in range(1, i + 1):
            acc = acc + T_operator(j)(ts[i - j])
        ts.append(acc.scale(-1))
    return ts


def telescoping_check(k):
    """Coefficient of n^{-w} in sum_i n^{-i} t_i + sum_{i,j} n^{-(i+j)} T_j[t_i]
    vanishes for 1 <= w <= k-1 (and is the identity at w = 0)."""
    ts = construction_sequence(_poly_stub(2 * k), k)
    ok = ts[0].terms == identity_form().terms
    for w in range(1, k):
        acc = ts[w]
        for j in range(1, w + 1):
            acc = acc + T_operator(j)(ts[w - j])
        ok = ok and acc.is_zero()
    return ok


def _poly_stub(order):
    """Cheap stand-in offering unlimited derivative support for form algebra."""
    from .funcs import make_poly

    return make_poly([0] * order + [1])


def taylor_estimate(f, k, n, phat):
    """f_hat_k = sum_{i<k} n^{-i} t_i(phat)."""
    ts = construction_sequence(f, k)
    acc = 0
    for i, t in enumerate(ts):
        acc = acc + t.eval(f, phat) * Fraction(1, n**i)
    return acc


def taylor_bias_curve(f, k, n, grid_size=201, refine=True):
    """Exact-expectation bias of the order-k Taylor corrector over a p grid."""
    ts = construction_sequence(f, k)

    def estimate(phat):
        acc = 0
        for i, t in enumerate(ts):
            acc = acc + t.eval(f, phat) * Fraction(1, n**i)
        return acc

    atoms = [estimate(Fraction(X, n)) for X in range(n + 1)]
    av = np.asarray([float(a) for a in atoms])
    ps = np.linspace(0.0, 1.0, grid_size)
    pm = _sp_binom.pmf(np.arange(n + 1)[None, :], n, ps[:, None])
    vals = pm @ av - np.asarray(f(ps), dtype=float)
    i = int(np.argmax(np.abs(vals)))
    sup, arg, tol = abs(float(vals[i])), float(ps[i]), float(ps[1] - ps[0])
    if refine:
        ks = np.arange(n + 1)

        def at(p):
            return abs(float(np.dot(_sp_binom.pmf(ks, n, p), av)) - float(f(float(p))))

        lo, hi = ps[max(i - 1, 0)], ps[min(i + 1, grid_size - 1)]
        x, v, w = _golden_refine(at, lo, hi)
        if v > sup:
            sup, arg = float(v), float(x)
        tol = float(w)
    return BiasCurve(ps, vals, sup, arg, tol)


def falling_factorial_unbiased(X, n, j):
    """S_j = prod_{l<j} (X-l)/(n-l); unbiased for p^j under B(n,p)."""
    if j > n:
        raise ValueError("j must be <= n")
    acc = Fraction(1)
    for l in range(j):
        acc *= Fraction(X - l, n - l)
    return acc


def sample_split_estimate(X1, n1, X2, n2, f, k):
    """Two-sample corrector: Taylor expansion around phat1 with the powers of
    p estimated unbiasedly from the second half."""
    if not (0 <= X1 <= n1 and 0 <= X2 <= n2):
        raise ValueError("counts out of range")
    p1 = Fraction(X1, n1)
    acc = 0
    for i in range(2 * k):
        fd = f(p1) if i == 0 else f.deriv(i, p1)
        inner = Fraction(0)
        for j in range(i + 1):
            inner += (
                math.comb(i, j)
                * falling_factorial_unbiased(X2, n2, j)
                * (-p1) ** (i - j)
            )
        acc = acc + fd * inner * Fraction(1, math.factorial(i))
    return acc


def sample_split_bias(f, k, n1, n2, p):
    """Exact double-pmf bias of the sample-splitting corrector at p."""
    p = Fraction(p) if not isinstance(p, (float, np.floating)) else p
    row1 = pmf_row(n1, p) if isinstance(p, Fraction) else list(pmf_row(n1, float(p)))
    row2 = pmf_row(n2, p) if isinstance(p, Fraction) else list(pmf_row(n2, float(p)))
    acc = 0
    for X1, w1 in enumerate(row1):
        for X2, w2 in enumerate(row2):
            acc = acc + w1 * w2 * sample_split_estimate(X1, n1, X2, n2, f, k)
    return acc - f(p)


def sample_split_bias_curve(f, k, n1, n2, grid_size=201):
    """Float64 bias sweep of the sample-splitting corrector."""
    est = np.empty((n1 + 1, n2 + 1))
    for X1 in range(n1 + 1):
        for X2 in range(n2 + 1):
            est[X1, X2] = float(sample_split_estimate(X1, n1, X2, n2, f, k))
    ps = np.linspace(0.0, 1.0, grid_size)
    pm1 = _sp_binom.pmf(np.arange(n1 + 1)[None, :], n1, ps[:, None])
    pm2 = _sp_binom.pmf(np.arange(n2 + 1)[None, :], n2, ps[:, None])
    vals = np.einsum("pi,ij,pj->p", pm1, est, pm2) - np.asarray(f(ps), dtype=float)
    i = int(np.argmax(np.abs(vals)))
    return BiasCurve(ps, vals, abs(float(vals[i])), float(ps[i]),
                     float(ps[1] - ps[0]))
