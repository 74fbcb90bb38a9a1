"""Iterated bootstrap bias correction in node space.

The bias after m-1 correction rounds is e_m = (I - B_n)^m f, which only
depends on f through its values at the grid {i/n}. We track the node
coefficient vector u_m = sum_{j<m} (I-A)^j v (v = node values of f), so
e_m(p) = f(p) - sum_k u_k C(n,k) p^k (1-p)^{n-k}. Long horizons use
binary doubling of the geometric sum; traces advance sequentially.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .binom import bernstein_apply, eigenvalues, pmf_row, transition_matrix
from .jackknife import BiasCurve, _golden_refine
from .precision import bits as _bits_ctx, default_bits, to_mpfr


@dataclass(frozen=True)
class NodeVector:
    n: int
    values: tuple
    mode: str  # "exact" or "mpfr"

    def __post_init__(self):
        if len(self.values) != self.n + 1:
            raise ValueError("need n+1 node values")


@dataclass(frozen=True)
class BootstrapState:
    f: object
    n: int
    m: int
    u: NodeVector


def _node_values(f, n, mode):
    if mode == "exact":
        return [f(Fraction(i, n)) for i in range(n + 1)]
    return [to_mpfr(f(Fraction(i, n))) for i in range(n + 1)]


def _i_minus_a(n, mode):
    A = transition_matrix(n, mode)
    rows = []
    for i, row in enumerate(A.rows):
        rows.append([(1 if i == k else 0) - row[k] for k in range(n + 1)])
    return rows


def _matvec(M, v):
    return [sum(a * b for a, b in zip(row, v)) for row in M]


def _matmul(M, N):
    Nt = list(zip(*N))
    return [[sum(a * b for a, b in zip(row, col)) for col in Nt] for row in M]


def _geom_sum_apply(M, v, m):
    """s = sum_{j=0}^{m-1} M^j v by binary doubling on (M^m, s)."""
    size = len(v)
    zero = v[0] * 0
    s = [zero] * size
    P = None  # accumulated M^(bits so far), None means identity
    # process bits of m from most significant down, building s_m
    for bit in bin(m)[2:]:
        if P is not None:
            # double: s_{2t} = s_t + P s_t, P_{2t} = P^2
            Ps = _matvec(P, s)
            s = [a + b for a, b in zip(s, Ps)]
            P = _matmul(P, P)
        else:
            P = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
            P = [[x * 1 for x in row] for row in P]
        if bit == "1":
            # increment: s_{t+1} = v + M s_t, P_{t+1} = M P_t
            s = [a + b for a, b in zip(v, _matvec(M, s))]
            P = _matmul(M, P)
    return s


def iterate_bias(f, n, m, nbits=None, mode="mpfr"):
    """Advance the node recurrence to u_m = sum_{j<m} (I-A)^j v."""
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")
    if mode == "exact":
        v = _node_values(f, n, "exact")
        M = _i_minus_a(n, "exact")
        u = list(v)
        for _ in range(m - 1):
            u = [a + b for a, b in zip(v, _matvec(M, u))]
        return BootstrapState(f, n, m, NodeVector(n, tuple(u), "exact"))
    with _bits_ctx(nbits or default_bits()):
        v = _node_values(f, n, "mpfr")
        M = _i_minus_a(n, "mpfr")
        u = _geom_sum_apply(M, v, m)
    return BootstrapState(f, n, m, NodeVector(n, tuple(u), "mpfr"))


def _bernstein_form(n, u, p):
    q = 1 - p
    return sum(
        u[k] * math.comb(n, k) * p**k * q ** (n - k) for k in range(n + 1)
    )


def e_m_eval(state, p):
    """e_m(p) = f(p) - Bernstein form with node coefficients u."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0,1]")
    n, u = state.n, state.u.values
    if state.u.mode == "exact":
        p = Fraction(p)
    else:
        p = to_mpfr(p)
    return state.f(p) - _bernstein_form(n, u, p)


def direct_e_m_eval(f, n, m, p):
    """e_m(p) by the functional recurrence e_j = e_{j-1} - B_n e_{j-1}.

    Independent of the node-space route; exponential in m, for small
    cross-validation cases only.
    """
    if m == 0:
        return f(p)
    g = lambda q: direct_e_m_eval(f, n, m - 1, q)
    return g(p) - bernstein_apply(g, n, p)


def sup_e_m(state, grid_size=4001, refine=True):
    n, u = state.n, state.u.values
    ps = np.linspace(0.0, 1.0, grid_size)
    uf = [float(x) for x in u]
    # float64 scan to locate the sup; value re-computed in mpfr below
    from scipy.stats import binom as _sp

    pm = _sp.pmf(np.arange(n + 1)[None, :], n, ps[:, None])
    vals = np.asarray(state.f(ps), dtype=float) - pm @ np.asarray(uf)
    i = int(np.argmax(np.abs(vals)))
    sup = abs(float(e_m_eval(state, float(ps[i]))))
    arg, tol = float(ps[i]), float(ps[1] - ps[0])
    if refine:
        lo, hi = ps[max(i - 1, 0)], ps[min(i + 1, grid_size - 1)]
        x, v, w = _golden_refine(lambda p: abs(float(e_m_eval(state, float(p)))), lo, hi)
        if v > sup:
            sup, arg = v, float(x)
        tol = float(w)
    return BiasCurve(ps, vals, float(sup), arg, tol)


def trace_sup(f, n, m_max, stride=1, nbits=None, grid_size=4001,
              refine_every=100):
    """Emit (m, sup_abs, argmax_p) at m = 1, 1+stride, ...

    Sequential node recurrence; the sup is scanned on a fixed grid with
    golden refinement on every refine_every-th emitted row.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    from scipy.stats import binom as _sp

    out = []
    with _bits_ctx(nbits or default_bits()):
        v = _node_values(f, n, "mpfr")
        M = _i_minus_a(n, "mpfr")
        ps = np.linspace(0.0, 1.0, grid_size)
        pm = _sp.pmf(np.arange(n + 1)[None, :], n, ps[:, None])
        fgrid = np.asarray(f(ps), dtype=float)
        u = list(v)
        m = 1
        emitted = 0
        while m <= m_max:
            if (m - 1) % stride == 0:
                # float64 scan locates the sup; mpfr recomputes its value
                vals = fgrid - pm @ np.asarray([float(x) for x in u])
                bi = int(np.argmax(np.abs(vals)))
                state = BootstrapState(f, n, m, NodeVector(n, tuple(u), "mpfr"))
                sup = abs(float(e_m_eval(state, float(ps[bi]))))
                arg = float(ps[bi])
                if emitted % refine_every == 0:
                    lo = ps[max(bi - 1, 0)]
                    hi = ps[min(bi + 1, grid_size - 1)]
                    x, vv, _ = _golden_refine(
                        lambda p: abs(float(e_m_eval(state, float(p)))), lo, hi
                    )
                    if vv > sup:
                        sup, arg = vv, float(x)
                out.append((m, sup, arg))
                emitted += 1
            u = [a + b for a, b in zip(v, _matvec(M, u))]
            m += 1
    return out


def lagrange_interpolant(f, n):
    """Barycentric second form of L_n f at nodes i/n, weights (-1)^i C(n,i)."""
    nodes = [Fraction(i, n) for i in range(n + 1)]
    w = [(-1) ** i * math.comb(n, i) for i in range(n + 1)]
    fv = [f(x) for x in nodes]

    def ev(p):
        if isinstance(p, Fraction):
            for x, y in zip(nodes, fv):
                if p == x:
                    return y
            num = sum(Fraction(wi) / (p - x) * y for wi, x, y in zip(w, nodes, fv))
            den = sum(Fraction(wi) / (p - x) for wi, x in zip(w, nodes))
            return num / den
        p = to_mpfr(p)
        num = mpfr(0)
        den = mpfr(0)
        for wi, x, y in zip(w, nodes, fv):
            d = p - to_mpfr(x)
            if d == 0:
                return to_mpfr(y)
            t = wi / d
            num += t * to_mpfr(y)
            den += t
        return num / den

    return ev


def lagrange_sup_gap(f, n, grid_size=100001, nbits=None):
    """sup |f - L_n f| over a uniform grid plus golden refinement.

    The grid is scanned in vectorized float64 to locate the argmax (the
    gap values of interest are O(1) or larger, far above double-rounding
    noise); the sup itself is then refined and reported at full mpfr
    precision.
    """
    nodes = np.arange(n + 1) / n
    w = np.asarray([(-1) ** i * math.comb(n, i) for i in range(n + 1)], dtype=float)
    fv = np.asarray([float(f(Fraction(i, n))) for i in range(n + 1)])
    ps = np.linspace(0.0, 1.0, grid_size)
    num = np.zeros_like(ps)
    den = np.zeros_like(ps)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(n + 1):
            t = w[i] / (ps - nodes[i])
            num += t * fv[i]
            den += t
        gaps = np.abs(np.asarray(f(ps), dtype=float) - num / den)
    gaps = np.nan_to_num(gaps)  # node hits interpolate exactly
    i = int(np.argmax(gaps))
    step = ps[1] - ps[0]
    with _bits_ctx(nbits or default_bits()):
        L = lagrange_interpolant(f, n)
        best = abs(to_mpfr(f(to_mpfr(float(ps[i])))) - L(to_mpfr(float(ps[i]))))
        lo = to_mpfr(max(float(ps[i]) - step, 0.0))
        hi = to_mpfr(min(float(ps[i]) + step, 1.0))
        x, v, _ = _golden_refine(lambda q: abs(to_mpfr(f(q)) - L(q)), lo, hi)
        if v > best:
            best = v
        return float(best)


def limit_gap(f, n, m, grid_size=2001, nbits=None):
    """sup over the grid of |e_m(p) - (f - L_n f)(p)|."""
    with _bits_ctx(nbits or default_bits()):
        state = iterate_bias(f, n, m, nbits=nbits or default_bits())
        L = lagrange_interpolant(f, n)
        worst = mpfr(0)
        for j in range(grid_size):
            p = mpfr(j) / (grid_size - 1)
            d = abs(e_m_eval(state, p) - (to_mpfr(f(p)) - L(p)))
            worst = max(worst, d)
        return float(worst)


def eig_mode_decay(n, k, m):
    """(1 - lambda_k^{(n)})^m at the active precision."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    lam = eigenvalues(n)[k]
    if lam == 1:
        return mpfr(0) if m >= 1 else mpfr(1)
    return to_mpfr(1 - lam) ** m


def node_fixed_point(f, n):
    """Exact solution u* of A u = v; its Bernstein form is L_n f at the nodes."""
    A = transition_matrix(n, "exact")
    v = _node_values(f, n, "exact")
    # Gaussian elimination over Fractions
    M = [list(row) + [val] for row, val in zip(A.rows, v)]
    M = [[Fraction(x) for x in row] for row in M]
    size = n + 1
    for col in range(size):
        piv = next(r for r in range(col, size) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for r in range(size):
            if r != col and M[r][col] != 0:
                factor = M[r][col]
                M[r] = [a - factor * b for a, b in zip(M[r], M[col])]
    return [row[-1] for row in M]
