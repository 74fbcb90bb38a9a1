import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from binombias.binom import pmf_row
from binombias.funcs import catalog_get, make_poly
from binombias.smoothness import (
    DiscreteRV,
    classical_modulus,
    divergences,
    dt_modulus,
    ent_bounds,
    jensen_gap_check,
    modulus_ladder,
    rate_fit,
    symmetric_diff,
)


def test_symmetric_diff_examples():
    p2 = make_poly([0, 0, 1])
    assert symmetric_diff(p2, 2, 0.1, 0.5) == pytest.approx(0.02)
    assert symmetric_diff(p2, 2, 0.3, 0.9) == 0.0  # out of range
    absdev = catalog_get("absdev")
    assert symmetric_diff(absdev, 2, 0.2, 0.5) == pytest.approx(0.4)


def test_dt_modulus_p2_closed_form():
    p2 = make_poly([0, 0, 1])
    for t in (0.1, 0.25, 0.5):
        assert dt_modulus(p2, 2, t).value == pytest.approx(t * t / 2, rel=1e-6)


def test_modulus_annihilates_low_degree():
    aff = make_poly([2, -3])
    assert dt_modulus(aff, 2, 0.3).value < 1e-12
    assert classical_modulus(aff, 2, 0.3).value < 1e-12
    cube = make_poly([0, 1, -1, F(1, 3)])
    assert dt_modulus(cube, 4, 0.2).value < 1e-10


def test_modulus_ladder_monotone():
    ent = catalog_get("entropy")
    ts = [2.0**-e for e in range(9, 2, -1)]
    for weighted in (True, False):
        results = modulus_ladder(ent, 2, ts, weighted=weighted)
        vals = [r.value for r in results]
        assert all(a <= b + 1e-15 for a, b in zip(vals, vals[1:]))


def test_entropy_dt_modulus_band():
    # omega_phi^2(entropy, t)/t^2 stays in a fixed band over dyadic t
    ent = catalog_get("entropy")
    ratios = []
    for e in range(3, 10):
        t = 2.0**-e
        ratios.append(dt_modulus(ent, 2, t).value / t**2)
    assert max(ratios) / min(ratios) < 3


def test_rate_fit_exact_slopes():
    pairs = [(n, 5.0 / n) for n in (10, 20, 40, 80)]
    assert rate_fit(pairs)["slope"] == pytest.approx(-1.0)
    pairs = [(n, 2.0 / math.sqrt(n)) for n in (10, 20, 40, 80)]
    assert rate_fit(pairs)["slope"] == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        rate_fit([(10, 1.0), (20, -1.0), (40, 1.0)])
    with pytest.raises(ValueError):
        rate_fit([(10, 1.0)])


def test_discrete_rv_validation():
    with pytest.raises(ValueError):
        DiscreteRV(((0.0, 0.7), (1.0, 0.7)))
    with pytest.raises(ValueError):
        DiscreteRV(((0.0, -0.1), (1.0, 1.1)))
    X = DiscreteRV(((F(0), F(1, 2)), (F(2), F(1, 2))))
    assert X.mean == 1 and X.var == 1


def test_jensen_gap_examples():
    p2 = make_poly([0, 0, 1])
    deg = DiscreteRV(((0.4, 1.0),))
    rec = jensen_gap_check(p2, deg)
    assert rec["gap"] == 0 and rec["holds"]
    bern = DiscreteRV(((0.0, 0.5), (1.0, 0.5)))
    rec = jensen_gap_check(p2, bern)
    assert rec["gap"] == pytest.approx(0.25)
    assert rec["bound"] == pytest.approx(1.875, rel=1e-6)
    assert rec["holds"]


def test_jensen_gap_entropy_binomial_nodes():
    ent = catalog_get("entropy")
    n, p = 10, F(3, 10)
    X = DiscreteRV(tuple((k / n, float(w)) for k, w in enumerate(pmf_row(n, p))))
    assert jensen_gap_check(ent, X)["holds"]


def test_jensen_gap_random_sweep():
    rng = random.Random(13)
    fs = [make_poly([0, 0, 1]), catalog_get("absdev"), catalog_get("entropy")]
    for _ in range(60):
        f = rng.choice(fs)
        vals = sorted(rng.uniform(0, 1) for _ in range(3))
        ws = [rng.uniform(0.05, 1) for _ in range(3)]
        tot = sum(ws)
        X = DiscreteRV(tuple((v, w / tot) for v, w in zip(vals, ws)))
        assert jensen_gap_check(f, X)["holds"]


def test_ent_bounds_examples():
    const = DiscreteRV(((2.0, 1.0),))
    rec = ent_bounds(const)
    assert rec["ent"] == pytest.approx(0.0, abs=1e-12) and rec["all_hold"]
    U = DiscreteRV(((0.0, 0.5), (2.0, 0.5)))
    rec = ent_bounds(U)
    assert rec["ent"] == pytest.approx(math.log(2))
    assert rec["upper_sqrtvar"] == pytest.approx(1.0)
    assert rec["lower_varsqrt"] == pytest.approx(0.5)
    assert rec["all_hold"]
    with pytest.raises(ValueError):
        ent_bounds(DiscreteRV(((0.0, 1.0),)))


def test_ent_bounds_random_sweep():
    rng = random.Random(17)
    for _ in range(1000):
        vals = [rng.uniform(0.0, 5.0) for _ in range(4)]
        ws = [rng.uniform(0.01, 1.0) for _ in range(4)]
        tot = sum(ws)
        X = DiscreteRV(tuple((v, w / tot) for v, w in zip(vals, ws)))
        assert ent_bounds(X)["all_hold"]


def test_divergences_examples():
    P = DiscreteRV(((1, 0.5), (0, 0.5)))
    rec = divergences(P, P)
    assert rec == {"tv": 0.0, "hellinger_sq": 0.0, "kl": 0.0, "chi_sq": 0.0}
    P = DiscreteRV(((1, 0.6), (0, 0.4)))
    Q = DiscreteRV(((1, 0.5), (0, 0.5)))
    rec = divergences(P, Q)
    assert rec["kl"] == pytest.approx(0.6 * math.log(1.2) + 0.4 * math.log(0.8))
    assert rec["kl"] >= 2 * rec["tv"] ** 2 - 1e-12
    with pytest.raises(ValueError):
        divergences(DiscreteRV(((0, 0.5), (1, 0.5))), DiscreteRV(((0, 1.0),)))


def test_divergences_random_sweep():
    rng = random.Random(19)
    for _ in range(1000):
        support = list(range(4))
        pw = [rng.uniform(0.001, 1) for _ in support]
        qw = [rng.uniform(0.001, 1) for _ in support]
        P = DiscreteRV(tuple((x, w / sum(pw)) for x, w in zip(support, pw)))
        Q = DiscreteRV(tuple((x, w / sum(qw)) for x, w in zip(support, qw)))
        divergences(P, Q)  # chain asserted internally
