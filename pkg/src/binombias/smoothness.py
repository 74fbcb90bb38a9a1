"""Moduli of smoothness, rate fitting, Jensen-gap bounds, and the
entropy-functional / divergence inequality suites.

Moduli are lattice suprema over a geometric h-grid and uniform x-grid;
they are lower bounds of the true sup and are used consistently on both
sides of every band check.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class ModulusResult:
    r: int
    t: float
    value: float
    h_grid: int
    x_grid: int


@dataclass(frozen=True)
class DiscreteRV:
    atoms: tuple  # ((value, probability), ...)

    def __post_init__(self):
        probs = [p for _, p in self.atoms]
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be nonnegative")
        total = sum(probs)
        if isinstance(total, Fraction):
            if total != 1:
                raise ValueError("probabilities must sum to 1")
        elif abs(float(total) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    def expect(self, fn=lambda x: x):
        return sum(p * fn(x) for x, p in self.atoms)

    @property
    def mean(self):
        return self.expect()

    @property
    def var(self):
        mu = self.mean
        return self.expect(lambda x: (x - mu) ** 2)


def symmetric_diff(f, r, h, x):
    """Delta^r_h f(x) = sum_k (-1)^k C(r,k) f(x + r h/2 - k h); zero whenever
    either endpoint x +- r h/2 leaves [0,1]."""
    if r < 1 or h <= 0:
        raise ValueError("need r >= 1 and h > 0")
    if x + r * h / 2 > 1 or x - r * h / 2 < 0:
        return 0.0
    acc = 0.0
    for k in range(r + 1):
        acc += (-1) ** k * math.comb(r, k) * float(f(x + r * h / 2 - k * h))
    return acc


def _phi_dt(x):
    return np.sqrt(x * (1.0 - x))


def _phi_one(x):
    return np.ones_like(x)


def _lattice_sup(f, r, hs, xs, phi):
    """max over sampled (h, x) of |Delta^r_{h phi(x)} f(x)|, vectorized."""
    px = phi(xs)
    best = 0.0
    signs = np.asarray([(-1) ** k * math.comb(r, k) for k in range(r + 1)])
    for h in hs:
        step = h * px
        lo = xs - r * step / 2
        hi = xs + r * step / 2
        mask = (lo >= 0.0) & (hi <= 1.0) & (step > 0)
        if not mask.any():
            continue
        pts = hi[mask]
        st = step[mask]
        acc = np.zeros_like(pts)
        for k in range(r + 1):
            acc += signs[k] * np.asarray(f(np.clip(pts - k * st, 0.0, 1.0)),
                                         dtype=float)
        m = float(np.max(np.abs(acc)))
        if m > best:
            best = m
    return best


def dt_modulus(f, r, t, h_samples=64, x_samples=4001):
    """Ditzian-Totik modulus: sup over h <= t of ||Delta^r_{h phi} f||,
    phi(x) = sqrt(x(1-x)), sampled on a geometric h-grid."""
    if t <= 0:
        raise ValueError("t must be positive")
    hs = np.geomspace(t / 64, t, h_samples)
    xs = np.linspace(0.0, 1.0, x_samples)
    return ModulusResult(r, float(t), _lattice_sup(f, r, hs, xs, _phi_dt),
                         h_samples, x_samples)


def classical_modulus(f, r, t, h_samples=64, x_samples=4001):
    """omega^r(f,t) with unit weight phi = 1."""
    if t <= 0:
        raise ValueError("t must be positive")
    hs = np.geomspace(t / 64, t, h_samples)
    xs = np.linspace(0.0, 1.0, x_samples)
    return ModulusResult(r, float(t), _lattice_sup(f, r, hs, xs, _phi_one),
                         h_samples, x_samples)


def modulus_ladder(f, r, ts, weighted=True, h_samples_per_t=64, x_samples=4001):
    """Moduli at an increasing t-ladder sharing one global h-lattice, so the
    results are nondecreasing in t by construction."""
    ts = sorted(float(t) for t in ts)
    if ts[0] <= 0:
        raise ValueError("t must be positive")
    hs = np.geomspace(ts[0] / 64, ts[-1], h_samples_per_t * len(ts))
    xs = np.linspace(0.0, 1.0, x_samples)
    phi = _phi_dt if weighted else _phi_one
    out = []
    running = 0.0
    prev = 0.0
    for t in ts:
        band = hs[(hs > prev) & (hs <= t)]
        if len(band):
            running = max(running, _lattice_sup(f, r, band, xs, phi))
        out.append(ModulusResult(r, t, running, len(band), x_samples))
        prev = t
    return out


def rate_fit(pairs):
    """OLS fit of log(value) against log(n); returns slope/intercept/residual."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError("need at least 3 pairs")
    if any(v <= 0 for _, v in pairs):
        raise ValueError("values must be positive")
    xs = np.log([float(n) for n, _ in pairs])
    ys = np.log([float(v) for _, v in pairs])
    A = np.vstack([xs, np.ones_like(xs)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, ys, rcond=None)
    residual = float(res[0]) if len(res) else 0.0
    return {"slope": float(slope), "intercept": float(intercept),
            "residual": residual}


def jensen_gap_check(f, X):
    """|E f(X) - f(EX)| <= 15 omega^2(f, sqrt(Var X)/2) (interval version)."""
    gap = abs(float(X.expect(lambda x: float(f(x))) - f(float(X.mean))))
    sd = math.sqrt(float(X.var))
    if sd == 0:
        return {"gap": gap, "bound": 0.0, "holds": gap <= 1e-12}
    bound = 15.0 * classical_modulus(f, 2, sd / 2).value
    return {"gap": gap, "bound": bound, "holds": gap <= bound + 1e-12}


def ent_bounds(X):
    """The entropy-functional chain for nonnegative X:

    Ent <= EX ln(1 + Var/EX^2) <= sqrt(Var),
    Ent >= 2(EX - sqrt(EX) E sqrt(X)) >= Var(sqrt X),
    Ent >= (EX/2)(E|X/EX - 1|)^2.
    """
    if any(x < 0 for x, _ in X.atoms):
        raise ValueError("atoms must be nonnegative")
    mean = float(X.mean)
    if mean <= 0:
        raise ValueError("E[X] must be positive")
    var = float(X.var)
    ent = float(X.expect(lambda x: x * math.log(x) if x > 0 else 0.0))
    ent -= mean * math.log(mean)
    upper_log = mean * math.log(1 + var / mean**2)
    upper_sqrtvar = math.sqrt(var)
    esqrt = float(X.expect(lambda x: math.sqrt(x)))
    lower_hell = 2 * (mean - math.sqrt(mean) * esqrt)
    lower_varsqrt = float(X.expect(lambda x: x)) - esqrt**2  # Var(sqrt X)
    mad = float(X.expect(lambda x: abs(x / mean - 1)))
    lower_tv = 0.5 * mean * mad**2
    tol = 1e-11 * (1 + abs(ent))
    all_hold = (
        ent <= upper_log + tol
        and upper_log <= upper_sqrtvar + tol
        and ent + tol >= lower_hell
        and lower_hell + tol >= lower_varsqrt
        and ent + tol >= lower_tv
    )
    return {
        "ent": ent,
        "upper_log": upper_log,
        "upper_sqrtvar": upper_sqrtvar,
        "lower_hell": lower_hell,
        "lower_varsqrt": lower_varsqrt,
        "lower_tv": lower_tv,
        "all_hold": all_hold,
    }


def divergences(P, Q):
    """TV, squared Hellinger, KL, and chi^2 between discrete distributions on
    a shared support, with the KL sandwich asserted."""
    support = {}
    for x, p in P.atoms:
        support.setdefault(x, [0.0, 0.0])[0] += float(p)
    for x, q in Q.atoms:
        support.setdefault(x, [0.0, 0.0])[1] += float(q)
    tv = hell = kl = chi = 0.0
    for x, (p, q) in support.items():
        if q == 0:
            if p > 0:
                raise ValueError("P is not absolutely continuous w.r.t. Q")
            continue
        tv += abs(p - q) / 2
        hell += (math.sqrt(p) - math.sqrt(q)) ** 2
        if p > 0:
            kl += p * math.log(p / q)
        chi += (p - q) ** 2 / q
    tol = 1e-11
    assert kl <= math.log(1 + chi) + tol
    assert kl + tol >= 2 * tv**2
    assert kl + tol >= hell
    return {"tv": tv, "hellinger_sq": hell, "kl": kl, "chi_sq": chi}
