import math
from fractions import Fraction as F

import pytest

from binombias.binom import pmf_row
from binombias.funcs import catalog_get, make_exp_poly, make_poly
from binombias.taylor import (
    LinearDifferentialForm,
    T_operator,
    construction_sequence,
    falling_factorial_unbiased,
    identity_form,
    sample_split_bias,
    sample_split_estimate,
    taylor_bias_curve,
    taylor_estimate,
    telescoping_check,
)


def test_T1_closed_form():
    # T_1[f] = f'' p(1-p)/2
    form = T_operator(1)(identity_form())
    assert form.terms == {2: (F(0), F(1, 2), F(-1, 2))}


def test_T_operator_linearity():
    g = LinearDifferentialForm({0: [F(1)], 1: [0, F(2)]})
    h = LinearDifferentialForm({0: [0, F(3)]})
    T = T_operator(2)
    left = T(g.scale(3) + h.scale(-2))
    right = T(g).scale(3) + T(h).scale(-2)
    assert left.terms == right.terms


@pytest.mark.parametrize("j", [1, 2, 3])
def test_T_operator_structure(j):
    # orders in [j+1, 2j], polynomial coefficients of degree <= 2j
    form = T_operator(j)(identity_form())
    assert min(form.terms) >= j + 1
    assert max(form.terms) <= 2 * j
    assert all(len(q) - 1 <= 2 * j for q in form.terms.values())


def test_T2_on_p4_matches_pmf_expansion():
    # for f = p^4 the moment expansion terminates: the bias is exactly
    # T_1[f]/n + T_2[f]/n^2 + T_3[f]/n^3 (derivatives above order 4 vanish)
    f = make_poly([0, 0, 0, 0, 1])
    t1 = T_operator(1)(identity_form())
    t2 = T_operator(2)(identity_form())
    t3 = T_operator(3)(identity_form())
    for n in (10, 25, 40):
        p = F(1, 3)
        exact = sum(w * f(F(k, n)) for k, w in enumerate(pmf_row(n, p))) - f(p)
        expansion = (
            t1.eval(f, p) * F(1, n)
            + t2.eval(f, p) * F(1, n**2)
            + t3.eval(f, p) * F(1, n**3)
        )
        assert exact == expansion


def test_construction_sequence_k2():
    f = make_poly([0, 0, 1])
    ts = construction_sequence(f, 2)
    assert ts[0].terms == identity_form().terms
    # t_1 = -f'' p(1-p)/2
    assert ts[1].terms == {2: (F(0), F(-1, 2), F(1, 2))}


def test_construction_rejects_shallow_derivatives():
    pwl = catalog_get("absdev")
    with pytest.raises(ValueError):
        construction_sequence(pwl, 2)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_telescoping(k):
    assert telescoping_check(k)


def test_taylor_estimate_examples():
    aff = catalog_get("affine", {"a": 5, "b": 1})
    assert taylor_estimate(aff, 3, 10, F(3, 10)) == aff(F(3, 10))
    f = make_poly([0, 0, 1])
    phat = F(3, 10)
    n = 10
    want = phat**2 - phat * (1 - phat) * F(1, n)
    assert taylor_estimate(f, 2, n, phat) == want


def test_taylor_bias_curve_affine_zero():
    aff = catalog_get("affine", {"a": 2, "b": 0})
    curve = taylor_bias_curve(aff, 2, 12, grid_size=101, refine=False)
    assert curve.sup_abs < 1e-12


def test_taylor_k2_kills_order_one_bias():
    # p^2 with k = 2: corrected estimator is the unbiased X(X-1)/(n(n-1))-style
    # combination up to O(n^-2); check the 1/n term is gone via scaling
    f = make_poly([0, 0, 1])
    sups = []
    for n in (10, 20, 40):
        sups.append((n, taylor_bias_curve(f, 2, n, grid_size=101).sup_abs))
    assert sups[0][1] * (10 / 40) ** 2 == pytest.approx(sups[2][1], rel=0.3)


def test_falling_factorial_unbiased():
    assert falling_factorial_unbiased(3, 5, 0) == 1
    assert falling_factorial_unbiased(3, 5, 1) == F(3, 5)
    # unbiasedness: E S_j = p^j exactly
    for n, j, p in ((3, 2, F(1, 3)), (6, 3, F(2, 5))):
        exp = sum(
            w * falling_factorial_unbiased(X, n, j)
            for X, w in enumerate(pmf_row(n, p))
        )
        assert exp == p**j
    with pytest.raises(ValueError):
        falling_factorial_unbiased(2, 3, 4)


def test_sample_split_affine_unbiased():
    aff = catalog_get("affine", {"a": 2, "b": 1})
    for p in (F(1, 4), F(2, 3)):
        assert sample_split_bias(aff, 2, 4, 4, p) == 0


def test_sample_split_exact_zero_low_degree():
    # degree <= 2k-1 polynomials are estimated without bias
    f = make_poly([0, 0, 0, 1])
    for p in (F(1, 6), F(1, 2), F(4, 5)):
        assert sample_split_bias(f, 2, 6, 6, p) == 0


def test_sample_split_estimate_range_checks():
    f = make_poly([0, 0, 1])
    with pytest.raises(ValueError):
        sample_split_estimate(5, 4, 0, 4, f, 1)


def test_exp_poly_taylor_bias_small():
    f = make_exp_poly()
    curve = taylor_bias_curve(f, 2, 40, grid_size=101)
    assert curve.sup_abs < 5e-4
