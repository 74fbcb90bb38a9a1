"""General r-jackknife schemes and their exact bias/variance analysis.

A scheme is a strictly increasing size list n_1 < ... < n_r with the
Vandermonde-determined coefficients C_i; its estimator's expectation is
sum_i C_i B_{n_i}[f](p), so the bias is a pure operator quantity and no
U-statistic is ever simulated.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .binom import bernstein_apply, bernstein_grid, pmf_row, truncated_moment


@dataclass(frozen=True)
class JackknifeScheme:
    sizes: tuple
    coeffs: tuple  # exact Fractions
    r: int
    K: Fraction  # n_r / n_1
    sum_abs: Fraction


@dataclass(frozen=True)
class BiasCurve:
    grid: np.ndarray
    values: np.ndarray
    sup_abs: float
    argmax_p: float
    refine_tol: float


def scheme_general(sizes):
    """Scheme with C_i = prod_{j != i} n_i/(n_i - n_j), verified exactly."""
    sizes = tuple(int(n) for n in sizes)
    r = len(sizes)
    if r < 1:
        raise ValueError("need at least one size")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    if sizes[0] < r:
        raise ValueError("smallest size must be >= r")
    coeffs = []
    for i, ni in enumerate(sizes):
        c = Fraction(1)
        for j, nj in enumerate(sizes):
            if j != i:
                c *= Fraction(ni, ni - nj)
        coeffs.append(c)
    if sum(coeffs) != 1:
        raise AssertionError("coefficient sum != 1")
    for rho in range(1, r):
        if sum(c / Fraction(n) ** rho for c, n in zip(coeffs, sizes)) != 0:
            raise AssertionError(f"1/n^{rho} term not cancelled")
    return JackknifeScheme(
        sizes=sizes,
        coeffs=tuple(coeffs),
        r=r,
        K=Fraction(sizes[-1], sizes[0]),
        sum_abs=sum(abs(c) for c in coeffs),
    )


def scheme_delete_d(n, r, d):
    """Delete-d r-jackknife: sizes n - (r-i)d for i = 1..r."""
    if n - (r - 1) * d < 1:
        raise ValueError("need n - (r-1)d >= 1")
    return scheme_general([n - (r - i) * d for i in range(1, r + 1)])


def bounded_coeff_check(scheme, C_threshold):
    return {
        "sum_abs": scheme.sum_abs,
        "satisfied": scheme.sum_abs <= C_threshold,
    }


def higher_power_bound(scheme, rho):
    """Cap on |sum C_i/n_i^rho| for rho >= r: (rho-1)^{r-1}/((r-1)! n_1^rho)."""
    r = scheme.r
    return Fraction((rho - 1) ** (r - 1), math.factorial(r - 1) * scheme.sizes[0] ** rho)


def bias_at(f, scheme, p):
    """Bias sum_i C_i B_{n_i}[f](p) - f(p); exact for Fraction p."""
    acc = sum(c * bernstein_apply(f, n, p) for c, n in zip(scheme.coeffs, scheme.sizes))
    return acc - f(p)


def _golden_refine(fun, lo, hi, iters=40):
    invphi = (math.sqrt(5) - 1) / 2
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
    x, v = (c, fc) if fc > fd else (d, fd)
    return x, v, b - a


def bias_curve(f, scheme, grid_size=20001, refine=True):
    ps = np.linspace(0.0, 1.0, grid_size)
    vals = np.zeros_like(ps)
    for c, n in zip(scheme.coeffs, scheme.sizes):
        vals += float(c) * bernstein_grid(f, n, ps)
    vals -= np.asarray(f(ps), dtype=float)
    i = int(np.argmax(np.abs(vals)))
    sup, arg, tol = abs(vals[i]), ps[i], ps[1] - ps[0]
    if refine:
        lo = ps[max(i - 1, 0)]
        hi = ps[min(i + 1, grid_size - 1)]
        x, v, w = _golden_refine(lambda p: abs(float(bias_at(f, scheme, float(p)))), lo, hi)
        if v > sup:
            sup, arg = v, x
        tol = float(w)
    return BiasCurve(ps, vals, float(sup), float(arg), float(tol))


def divided_difference(points, values):
    """f[x_1..x_n] = sum f(x_i)/prod_{j!=i}(x_i - x_j)."""
    if len(set(points)) != len(points):
        raise ValueError("points must be distinct")
    acc = 0
    for i, (x, v) in enumerate(zip(points, values)):
        denom = 1
        for j, y in enumerate(points):
            if j != i:
                denom *= x - y
        if isinstance(v, (int, Fraction)) and isinstance(denom, int):
            acc += v * Fraction(1, denom)
        else:
            acc += v / denom
    return acc


def divided_diff_bias(f, scheme, p):
    """Jackknife bias as the divided difference of G_m = m^{r-1}(B_m f - f)(p)."""
    r = scheme.r
    Gs = []
    for m in scheme.sizes:
        g = bernstein_apply(f, m, p) - f(p)
        Gs.append(m ** (r - 1) * g)
    return divided_difference(scheme.sizes, Gs)


def meanvalue_check(values, points):
    """|f[x_0..x_r]| <= max_{x in [x_0+r, x_r]} |Delta^r f(x)| / r! for integer
    sequences; values maps each integer in [x_0, x_r] to f."""
    points = tuple(points)
    r = len(points) - 1
    dd = divided_difference(points, [values[x] for x in points])
    lo, hi = points[0], points[-1]
    if any(x not in values for x in range(lo, hi + 1)):
        raise ValueError("values must cover the full integer range")
    max_bd = 0
    for x in range(lo + r, hi + 1):
        bd = abs(sum((-1) ** k * math.comb(r, k) * values[x - k] for k in range(r + 1)))
        max_bd = max(max_bd, bd)
    holds = abs(dd) * math.factorial(r) <= max_bd or math.isclose(
        float(abs(dd) * math.factorial(r)), float(max_bd), rel_tol=1e-12
    )
    return {"dd": dd, "max_backward": max_bd, "holds": holds}


def delete1_r2_point_estimate(X, n, f):
    """Closed form of the delete-1 2-jackknife estimate at count X.

    f_hat = n f(X/n) - ((n-1)/n)((n-X) f(X/(n-1)) + X f((X-1)/(n-1))).
    """
    if not 0 <= X <= n:
        raise ValueError("X out of range")
    if n < 2:
        raise ValueError("n must be >= 2")
    full = n * f(Fraction(X, n))
    drop0 = (n - X) * f(Fraction(X, n - 1))
    drop1 = X * f(Fraction(X - 1, n - 1)) if X >= 1 else 0
    return full - Fraction(n - 1, n) * (drop0 + drop1)


def delete1_r2_variance(n, p, f):
    """Exact Var over X ~ B(n,p) of the delete-1 2-jackknife estimate."""
    p = Fraction(p)
    row = pmf_row(n, p)
    est = [delete1_r2_point_estimate(X, n, f) for X in range(n + 1)]
    mean = sum(w * e for w, e in zip(row, est))
    return sum(w * (e - mean) ** 2 for w, e in zip(row, est))


def adversarial_smooth(n, scheme, s, p0, mollify_width=None, grid_size=4001):
    """Worst-case member of the smoothness class D_s for a given scheme.

    Builds g(t) = sign(sum_i C_i A_{n_i,s-1}(t)) 1(t >= p0) on a t-grid,
    mollifies it to h with a narrow triangular kernel, and returns the
    s-fold antiderivative of h (zero at 0, all derivative sup-norms <= 1).
    """
    if not 1 <= s <= 2 * scheme.r - 3:
        raise ValueError("need 1 <= s <= 2r-3")
    ts = np.linspace(0.0, 1.0, grid_size)
    # A_{n_i,s-1}(t) at p = p0 for each grid t
    lead = np.zeros_like(ts)
    for c, m in zip(scheme.coeffs, scheme.sizes):
        lead += np.asarray(
            [float(c) * truncated_moment(m, float(p0), float(t), s - 1) for t in ts]
        )
    sig = np.sign(lead) * (ts >= float(p0))
    width = (1 / n) ** (2 * scheme.r) / 4
    if mollify_width is not None:
        width = min(float(mollify_width), width)
    half = max(1, int(round(width / (ts[1] - ts[0]))))
    kern = np.concatenate([np.arange(1, half + 1), np.arange(half - 1, 0, -1)]).astype(float)
    kern /= kern.sum()
    h = np.convolve(sig, kern, mode="same")
    vals = h
    for _ in range(s):
        vals = np.concatenate([[0.0], np.cumsum((vals[1:] + vals[:-1]) / 2)]) * (ts[1] - ts[0])
    scale = max(1.0, float(np.max(np.abs(h))))

    from .funcs import Function1D

    vals = vals / scale

    def ev(p):
        if isinstance(p, np.ndarray):
            return np.interp(p, ts, vals)
        return float(np.interp(float(p), ts, vals))

    return Function1D(name=f"adversarial[s={s}]", eval_fn=ev,
                      notes="s-fold antiderivative of mollified sign profile")
