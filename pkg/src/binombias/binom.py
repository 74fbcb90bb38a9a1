"""Binomial machinery: the expectation operator, its node-space matrix and
eigenvalues, central-moment polynomials, truncated moments, backward
differences, a tail-probability envelope check, and Chernoff bounds.

Exact mode works over Fractions throughout; float mode uses gmpy2 mpfr at
the active precision. Grid sweeps additionally get a vectorized float64
path backed by scipy.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpfr
from scipy.stats import binom as _sp_binom

from .precision import to_mpfr


def pmf_exact(n, p, k):
    """Binomial pmf C(n,k)p^k(1-p)^{n-k}, exact for Fraction p."""
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


def pmf_row(n, p):
    """All pmf values k=0..n in the arithmetic of p."""
    if isinstance(p, mpfr):
        one = mpfr(1)
    elif isinstance(p, Fraction):
        one = Fraction(1)
    else:
        return _sp_binom.pmf(np.arange(n + 1), n, p)
    q = one - p
    return [math.comb(n, k) * p**k * q ** (n - k) for k in range(n + 1)]


def bernstein_apply(f, n, p):
    """B_n[f](p) = sum_k f(k/n) C(n,k) p^k (1-p)^{n-k}.

    Exact when p is a Fraction and f is rational-evaluable.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0,1]")
    if isinstance(p, Fraction):
        return sum(
            f(Fraction(k, n)) * pmf_exact(n, Fraction(p), k) for k in range(n + 1)
        )
    if isinstance(p, mpfr):
        q = mpfr(1) - p
        acc = mpfr(0)
        for k in range(n + 1):
            acc += to_mpfr(f(Fraction(k, n))) * math.comb(n, k) * p**k * q ** (n - k)
        return acc
    ks = np.arange(n + 1)
    vals = np.asarray([float(f(Fraction(k, n))) for k in range(n + 1)])
    return float(np.dot(vals, _sp_binom.pmf(ks, n, p)))


def bernstein_grid(f, n, ps, chunk=2048):
    """Vectorized float64 B_n[f] over an array of p values."""
    ps = np.asarray(ps, dtype=float)
    vals = np.asarray([float(f(Fraction(k, n))) for k in range(n + 1)])
    ks = np.arange(n + 1)
    out = np.empty_like(ps)
    for lo in range(0, len(ps), chunk):
        block = ps[lo : lo + chunk]
        # rows: p values, cols: k; binom.pmf broadcasts over both
        pm = _sp_binom.pmf(ks[None, :], n, block[:, None])
        out[lo : lo + chunk] = pm @ vals
    return out


@dataclass(frozen=True)
class TransitionMatrix:
    """Node-space form of the expectation operator: A[i][k] = pmf(k; n, i/n)."""

    n: int
    rows: tuple
    mode: str  # "exact" or "mpfr"

    def apply(self, vec):
        return [sum(a * v for a, v in zip(row, vec)) for row in self.rows]


def transition_matrix(n, mode="exact"):
    if n < 1:
        raise ValueError("n must be >= 1")
    rows = []
    for i in range(n + 1):
        if mode == "exact":
            rows.append(tuple(pmf_row(n, Fraction(i, n))))
        elif mode == "mpfr":
            rows.append(tuple(pmf_row(n, mpfr(i) / n)))
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return TransitionMatrix(n, tuple(rows), mode)


def eigenvalues(n):
    """lambda_k = prod_{j<k} (1 - j/n), exact Fractions; lambda_0 = lambda_1 = 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = [Fraction(1)]
    acc = Fraction(1)
    for k in range(1, n + 1):
        acc *= Fraction(n - (k - 1), n)
        out.append(acc)
    return out


class BivariatePoly:
    """Polynomial in (p, n) with exact rational coefficients.

    Stored as {(p_degree, n_degree): Fraction}; zero coefficients pruned.
    """

    def __init__(self, coeffs=None):
        self.coeffs = {k: Fraction(v) for k, v in (coeffs or {}).items() if v != 0}

    def __eq__(self, other):
        return self.coeffs == other.coeffs

    def __add__(self, other):
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + v
        return BivariatePoly(out)

    def scale(self, c):
        return BivariatePoly({k: v * c for k, v in self.coeffs.items()})

    def mul_p_poly(self, pcoeffs):
        """Multiply by a polynomial in p given by coefficient list."""
        out = {}
        for (dp, dn), v in self.coeffs.items():
            for i, c in enumerate(pcoeffs):
                if c:
                    key = (dp + i, dn)
                    out[key] = out.get(key, Fraction(0)) + v * Fraction(c)
        return BivariatePoly(out)

    def mul_n(self):
        return BivariatePoly({(dp, dn + 1): v for (dp, dn), v in self.coeffs.items()})

    def diff_p(self):
        return BivariatePoly(
            {(dp - 1, dn): v * dp for (dp, dn), v in self.coeffs.items() if dp > 0}
        )

    def eval(self, p, n):
        acc = 0
        for (dp, dn), v in self.coeffs.items():
            acc += v * p**dp * n**dn
        return acc

    def n_coefficient(self, j):
        """Coefficient of n^j as a list of Fraction coefficients in p."""
        deg = max((dp for (dp, dn) in self.coeffs if dn == j), default=-1)
        out = [Fraction(0)] * (deg + 1)
        for (dp, dn), v in self.coeffs.items():
            if dn == j:
                out[dp] = v
        return out

    @property
    def p_degree(self):
        return max((dp for dp, _ in self.coeffs), default=0)

    @property
    def n_degree(self):
        return max((dn for _, dn in self.coeffs), default=0)

    def to_json(self):
        return [
            {
                "p_degree": dp,
                "n_degree": dn,
                "numerator": v.numerator,
                "denominator": v.denominator,
            }
            for (dp, dn), v in sorted(self.coeffs.items())
        ]


def central_moment_poly(s):
    """T_{n,s}(p) = n^s E_p(phat - p)^s via the recurrence
    T_{n,s+1} = p(1-p)(T' + n s T_{n,s-1}), from T_{n,0}=1, T_{n,1}=0.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    prev = BivariatePoly({(0, 0): 1})  # T_0
    if s == 0:
        return prev
    cur = BivariatePoly()  # T_1
    for k in range(1, s):
        # x(1-x) = p - p^2
        nxt = (cur.diff_p() + prev.mul_n().scale(k)).mul_p_poly([0, 1, -1])
        prev, cur = cur, nxt
    return cur


def h_coeffs(s):
    """Coefficients h_{j,s}(p) of n^j in T_{n,s}, j = 1..floor(s/2)."""
    if s < 2:
        raise ValueError("s must be >= 2")
    T = central_moment_poly(s)
    return {j: T.n_coefficient(j) for j in range(1, s // 2 + 1)}


def h_bound(s, j):
    """Sup-norm cap (4es)^s / j! for h_{j,s}."""
    return (4 * math.e * s) ** s / math.factorial(j)


def truncated_moment(n, p, t, u, side="plus"):
    """A_{n,u}(t) = E_p(phat - t)_+^u (plus) or E_p(phat - t)_-^u (minus).

    Exact pmf summation; u = 0 uses 0^0 = 1, making the plus side the
    tail probability P(phat >= t) and the minus side P(phat <= t).
    """
    if n < 1 or u < 0:
        raise ValueError("need n >= 1 and u >= 0")
    if not (0 <= p <= 1 and 0 <= t <= 1):
        raise ValueError("p and t must lie in [0,1]")
    exact = isinstance(p, Fraction)
    total = Fraction(0) if exact else 0.0
    row = pmf_row(n, p) if exact or isinstance(p, mpfr) else list(pmf_row(n, p))
    for k in range(n + 1):
        phat = Fraction(k, n) if exact else k / n
        if side == "plus":
            d = phat - t
        elif side == "minus":
            d = t - phat
        else:
            raise ValueError(f"unknown side {side!r}")
        if u == 0:
            if d >= 0:
                total += row[k]
        elif d > 0:
            total += row[k] * d**u
    return total


def backward_diff(seq, n, s):
    """Delta^s G_n = sum_k (-1)^k C(s,k) G_{n-k}; seq maps integers to values."""
    try:
        return sum((-1) ** k * math.comb(s, k) * seq[n - k] for k in range(s + 1))
    except KeyError as exc:
        raise ValueError(f"seq missing value at {exc.args[0]}") from exc


def _envelope(n, p, t, u, s, c1, c2):
    """Case-matched envelope for |Delta^s A_{n,u}(t)|, t >= p."""
    n, p, t = float(n), float(p), float(t)
    if t > 1 - 1 / n:
        return c1 * (1 - t) ** u * (1 - p) ** s * p ** (n - s)
    ucap = min(u, 1)
    if p <= 1 / n:
        body = n ** -(u + s - 1) * p + n**-u * p**ucap * min(
            1 / math.sqrt(n * t) if t > 0 else math.inf, 1
        )
        return c1 * body * math.exp(-c2 * n * t)
    if p <= 1 / 2:
        body = n ** -(u / 2 + s) * p ** (u / 2) + n**-u * p**ucap * min(
            1 / math.sqrt(n * t), 1
        )
        return c1 * body * math.exp(-c2 * n * (t - p) ** 2 / t)
    body = n ** -(u / 2 + s) * (1 - p) ** (u / 2) + n**-u * (1 - p) ** ucap * min(
        1 / math.sqrt(n * (1 - t)) if t < 1 else math.inf, 1
    )
    return c1 * body * math.exp(-c2 * n * (t - p) ** 2 / (1 - p))


def envelope_check(n, p, t, u, s, c1, c2=0.25):
    """Compare |Delta^s A_{n,u}(t)| against the calibrated envelope.

    Returns {"value", "bound", "ratio"}; caller supplies (c1, c2).
    """
    if t < p:
        raise ValueError("envelope requires t >= p")
    if n < 2 * s:
        raise ValueError("envelope requires n >= 2s")
    pf = Fraction(p) if not isinstance(p, Fraction) else p
    tf = Fraction(t) if not isinstance(t, Fraction) else t
    seq = {m: truncated_moment(m, pf, tf, u, "plus") for m in range(n - s, n + 1)}
    value = abs(float(backward_diff(seq, n, s)))
    bound = _envelope(n, p, t, u, s, c1, c2)
    ratio = value / bound if bound > 0 else math.inf if value > 0 else 0.0
    return {"value": value, "bound": bound, "ratio": ratio}


def calibrate_envelope_c1(u, s, n_ref=20, c2=0.25):
    """Fit c1 at a reference n so the envelope dominates there, c2 fixed."""
    worst = 0.0
    for ip in range(1, 10):
        p = Fraction(ip, 20)
        for it in range(ip, 21):
            t = Fraction(it, 20)
            r = envelope_check(n_ref, p, t, u, s, c1=1.0, c2=c2)
            if r["bound"] > 0:
                worst = max(worst, r["value"] / r["bound"])
    return worst if worst > 0 else 1.0


def chernoff_bound(n, p, beta, side="lower"):
    """Binomial tail bounds with mu = np.

    lower: P(X <= (1-beta)mu) <= exp(-beta^2 mu/2), 0 < beta <= 1.
    upper: P(X >= (1+beta)mu) <= exp(-beta^2 mu/3) for beta <= 1,
           exp(-beta mu/3) for beta > 1.
    """
    mu = n * p
    if side == "lower":
        if not 0 < beta <= 1:
            raise ValueError("lower tail needs 0 < beta <= 1")
        return math.exp(-(beta**2) * mu / 2)
    if side == "upper":
        if beta <= 0:
            raise ValueError("beta must be positive")
        if beta <= 1:
            return math.exp(-(beta**2) * mu / 3)
        return math.exp(-beta * mu / 3)
    raise ValueError(f"unknown side {side!r}")


def binomial_tail(n, p, k, side="le"):
    """Exact P(X <= k) or P(X >= k) for X ~ B(n, p), Fraction p."""
    p = Fraction(p)
    row = pmf_row(n, p)
    if side == "le":
        return sum(row[: int(math.floor(k)) + 1])
    return sum(row[int(math.ceil(k)) :])
