import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from zerobound.contour import count_zeros_disk
from zerobound.models import PolySystem
from zerobound.oscbound import (
    BoundConstants,
    TowerBound,
    circle_lower_bound,
    exact_value,
    fuchsian_bound,
    hypergeometric_bound,
    main_theorem_bound,
    meander_bound,
    ratio_bound,
    vallee_poussin_disconjugate,
    zero_bound_unit_disk,
)
from zerobound.poly import ExactMPoly, UniPolyC
from zerobound.reduce import PrincipalEquation, principal_equation, xi_chain


def test_vallee_poussin_examples():
    v = vallee_poussin_disconjugate([1], 0.5)
    assert v.total == 0.5 and v.disconjugate
    v = vallee_poussin_disconjugate([1, 1], 1.0)
    assert v.total == 1.5 and not v.disconjugate
    assert vallee_poussin_disconjugate([0, 0, 0], 50.0).disconjugate
    assert vallee_poussin_disconjugate([0, 100], 0.1).total == pytest.approx(0.5)


def test_vallee_poussin_rejects_bad_input():
    with pytest.raises(ValueError):
        vallee_poussin_disconjugate([1], 0)
    with pytest.raises(ValueError):
        vallee_poussin_disconjugate([-1], 1)


@given(st.lists(st.floats(0, 50), min_size=1, max_size=5), st.floats(1e-3, 2),
       st.floats(1e-3, 2))
def test_vallee_poussin_monotone_in_length(b, l1, l2):
    lo, hi = sorted((l1, l2))
    assert vallee_poussin_disconjugate(b, lo).total <= vallee_poussin_disconjugate(b, hi).total


def test_circle_constant():
    c = circle_lower_bound(UniPolyC([1]))
    assert 0.99 <= c.m_hat <= 1.0


def test_circle_monomial_prefers_outer_radius():
    c = circle_lower_bound(UniPolyC([0, 0, 0, 1]))
    assert c.radius > 1.99
    assert 1 < c.m_hat <= c.radius ** 3


def test_circle_needs_unit_norm():
    with pytest.raises(ValueError):
        circle_lower_bound(UniPolyC([0.5]))


def test_circle_shifted_linear():
    c = circle_lower_bound(UniPolyC([-1.5 / 2.5, 1 / 2.5]))
    # |r - 1.5| / 2.5 is symmetric about 1.5: both grid ends give ~0.2
    assert c.m_hat == pytest.approx(0.2, abs=0.01)
    assert c.radius < 1.01 or c.radius > 1.99


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6))
def test_circle_bound_below_sampled_minimum(coeffs):
    p = UniPolyC(coeffs)
    assume(not p.is_zero())
    p = UniPolyC(p.coeffs / p.l1_norm())
    c = circle_lower_bound(p)
    th = np.linspace(0, 2 * math.pi, 4001)
    true_min = np.abs(p(c.radius * np.exp(1j * th))).min()
    assert c.m_hat <= true_min + 1e-9


def test_disk_bound_formula_examples():
    one = UniPolyC([1])
    eq = PrincipalEquation(1, [one, one], "specialized")
    assert zero_bound_unit_disk(eq, K=1).formula == 1
    t3 = UniPolyC([0, 0, 0, 1])
    eq = PrincipalEquation(2, [one, one, t3], "specialized")
    assert zero_bound_unit_disk(eq, K=10).formula == 160


def test_disk_bound_dominates_airy_count():
    sysa = PolySystem([[[0, 1], [0, 0]], [[0, 0], [1, 0]]])
    eq = principal_equation(xi_chain(sysa.matrix()))
    db = zero_bound_unit_disk(eq, K=1)
    assert db.formula == 4
    k = count_zeros_disk(sysa, x0=[1, 0]).zero_count
    assert k <= db.formula and k <= db.constructive


def test_main_bound_examples():
    tb = main_theorem_bound(1, 1, 1)
    assert tb.base == 2 and tb.exponent_log2 == 1 and exact_value(tb) == 4
    tb = main_theorem_bound(2, 3, 5)
    assert tb.base == 5 and tb.exponent_log2 == 12
    assert tb.log2_log2_value == pytest.approx(12 + math.log2(math.log2(5)))


def test_meander_examples():
    tb = meander_bound(1, 2, 3)
    assert tb.exponent_log2 == pytest.approx(4 * math.log(2))
    assert tb.value() == math.inf
    with pytest.raises(ValueError):
        meander_bound(1, 2, 2)
    with pytest.raises(ValueError):
        meander_bound(1, 1, 3)


@given(st.integers(1, 8), st.integers(2, 8), st.floats(2.01, 1e6))
def test_meander_exceeds_main(n, m, M):
    assert meander_bound(n, m, M) > main_theorem_bound(n, m, M)


def test_hypergeometric_better_example():
    assert hypergeometric_bound(2, 1).exponent_log2 == 4
    assert fuchsian_bound(2, 3, 1).exponent_log2 == 12
    assert hypergeometric_bound(2, 1) < fuchsian_bound(2, 3, 1)


def test_minimal_towers():
    assert exact_value(hypergeometric_bound(1, 1)) == 4
    assert exact_value(ratio_bound(1, 1, 1)) == 4


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4),
       st.sampled_from([2, 3, 5, 10]), st.sampled_from([2, 3, 5, 10]))
def test_tower_order_matches_values(n1, m1, n2, m2, M1, M2):
    a, b = main_theorem_bound(n1, m1, M1), main_theorem_bound(n2, m2, M2)
    # compare the exact logarithms log2 log2 V = e + log2 log2 base
    la = a.exponent_log2 + math.log2(math.log2(a.base))
    lb = b.exponent_log2 + math.log2(math.log2(b.base))
    if abs(la - lb) > 1e-9:
        assert (a < b) == (la < lb)


@given(st.integers(1, 6), st.integers(1, 6), st.floats(1, 1e9))
def test_main_monotone(n, m, M):
    tb = main_theorem_bound(n, m, M)
    assert main_theorem_bound(n + 1, m, M) > tb
    assert main_theorem_bound(n, m + 1, M) > tb
    assert main_theorem_bound(n, m, M * 2 + 2) >= tb


def test_small_tower_values_exact():
    tb = main_theorem_bound(1, 2, 3)
    assert exact_value(tb) == 81
    assert tb.value() == pytest.approx(81)
    assert tb.admits(81) and not tb.admits(82)


def test_huge_tower_compares():
    big = main_theorem_bound(6, 6, 1e6)
    assert big.value() == math.inf
    assert math.isfinite(big.log10_log10_value)
    assert big.admits(10 ** 300)
    assert meander_bound(6, 6, 1e6) > big


def test_constants_validation_and_json():
    c = BoundConstants(c_main=2, c_tower=-1)
    assert BoundConstants.from_json(c.to_json()) == c
    with pytest.raises(ValueError):
        BoundConstants(c_main=0)


def test_tower_json_fields():
    js = main_theorem_bound(2, 2, 3).to_json()
    assert js["bound_kind"] == "double-exp" and js["exponent_log2"] == 8
    assert js["constants"]["c_main"] == 1


def test_constants_scale_exponent():
    c = BoundConstants(c_main=3)
    assert main_theorem_bound(2, 2, 3, c).exponent_log2 == 24


def test_exact_equation_accepted():
    a = [ExactMPoly.from_coeffs([1]), ExactMPoly.from_coeffs([0]),
         ExactMPoly.from_coeffs([Fraction(1, 2)])]
    db = zero_bound_unit_disk(PrincipalEquation(2, a, "specialized"))
    assert db.formula >= 2 and db.constructive >= 2


def test_double_exp_level_index():
    tb = TowerBound("double-exp", 2.0, 3.0)
    assert tb.value() == pytest.approx(256)
