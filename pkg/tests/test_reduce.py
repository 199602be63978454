import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zerobound.models import PolySystem, random_integer_family, universal_matrix
from zerobound.poly import ExactMPoly, UniPolyC
from zerobound.reduce import (
    DegenerateChain,
    PrincipalEquation,
    XiChain,
    detect_degeneracy,
    equation_from_rows,
    norm_profile,
    principal_equation,
    verify_iter_certificates,
    wedge,
    xi_chain,
)

from oracles import charpoly, poly_divides, proportional


def tpoly(*c):
    return ExactMPoly.from_coeffs(list(c))


def const_matrix(A):
    return PolySystem([A]).matrix()


def consts(a):
    out = []
    for p in a:
        assert p.degree() <= 0
        out.append(p.terms.get((0,), Fraction(0)))
    return out


AIRY = [[tpoly(0), tpoly(1)], [tpoly(0, 1), tpoly(0)]]


def test_nilpotent_chain():
    ch = xi_chain(const_matrix([[0, 1], [0, 0]]))
    assert [[p.to_unipoly().coeffs.tolist() for p in row] for row in ch.xi] == [
        [[1], []], [[], [1]], [[], []]]


def test_airy_chain_and_equation():
    ch = xi_chain(AIRY)
    assert ch.xi[1] == [tpoly(0), tpoly(1)]
    assert ch.xi[2] == [tpoly(0, 1), tpoly(0)]
    eq = principal_equation(ch)
    s = 1 if eq.a[0] == tpoly(1) else -1
    assert [p.scale(s) for p in eq.a] == [tpoly(1), tpoly(0), tpoly(0, -1)]


def test_airy_certificates_pass():
    rep = verify_iter_certificates(xi_chain(AIRY))
    assert rep["integrality"] and rep["xi_degree"] and rep["wedge_degree"] and rep["wedge_norm"]


def test_corrupted_chain_fails_integrality():
    ch = xi_chain(AIRY)
    bad = XiChain(ch.n, ch.m, [ch.xi[0], [p.scale(Fraction(1, 2)) for p in ch.xi[1]], ch.xi[2]],
                  ch.mode)
    assert not verify_iter_certificates(bad)["integrality"]


def test_random_n3_m2_certificates():
    rng = random.Random(3)
    A = random_integer_family(rng, 3, 2)
    rep = verify_iter_certificates(xi_chain(A))
    assert rep["integrality"] and rep["xi_degree"] and rep["wedge_norm"]
    assert rep["leading_wedge_degree_ok"] and rep["rowsum_degree_ok"]


def test_lower_wedges_can_exceed_stated_degree():
    # n = 1, A = (t): a_1 = -t has degree 1 > n(n-1)m/2 = 0
    rep = verify_iter_certificates(xi_chain([[tpoly(0, 1)]]))
    assert rep["wedge_degrees"] == [0, 1]
    assert not rep["wedge_degree"]
    assert rep["rowsum_degree_ok"]


def test_constant_chain_is_powers():
    A = [[1, 2, 0], [0, -1, 3], [2, 0, 1]]
    ch = xi_chain(const_matrix(A))
    row = [Fraction(1), Fraction(0), Fraction(0)]
    for k in range(4):
        assert consts(ch.xi[k]) == row
        row = [sum(row[i] * A[i][j] for i in range(3)) for j in range(3)]


def test_nilpotent_equation_is_y2():
    eq = principal_equation(xi_chain(const_matrix([[0, 1], [0, 0]])))
    assert consts(eq.a)[1:] == [0, 0] and consts(eq.a)[0] != 0


def test_zero_matrix_degenerate_order_one():
    rep = detect_degeneracy(const_matrix([[0, 0], [0, 0]]))
    assert rep.status == "degenerate" and rep.order == 1
    a = consts(rep.equation.a)
    assert a[1] == 0 and a[0] != 0


def test_identity_degenerate_first_order():
    rep = detect_degeneracy(const_matrix([[1, 0], [0, 1]]))
    assert rep.order == 1
    assert proportional(consts(rep.equation.a), [1, -1])


def test_nilpotent_is_generic():
    rep = detect_degeneracy(const_matrix([[0, 1], [0, 0]]))
    assert rep.status == "generic" and rep.order == 2


def test_principal_raises_on_degenerate():
    with pytest.raises(DegenerateChain):
        principal_equation(xi_chain(const_matrix([[0, 0], [0, 0]])))


def test_float_degeneracy_matches_exact():
    A = [[1, 0], [0, 1]]
    rep = detect_degeneracy(PolySystem([A], exact=False).matrix())
    assert rep.order == 1


def test_norm_profile_examples():
    eq = PrincipalEquation(2, [tpoly(1), tpoly(0), tpoly(0, -1)], "specialized")
    prof = norm_profile(eq)
    assert prof.b == [1, 0, 1] and prof.c == [1, 0, 1] and not prof.in_sigma
    p = norm_profile(PrincipalEquation(0, [tpoly(1, -4, 3)], "specialized"))
    assert p.b == [8] and p.c == [26]
    z = PrincipalEquation(1, [tpoly(0), tpoly(0)], "specialized")
    assert norm_profile(z).in_sigma


def test_equation_json_roundtrip():
    eq = principal_equation(xi_chain(AIRY))
    back = PrincipalEquation.from_json(eq.to_json())
    assert back.a == eq.a and back.n == eq.n


def test_universal_specializes_to_concrete():
    lam = [2, -1, 3, 1]
    ueq = principal_equation(xi_chain(universal_matrix(2, 1)), normalize=False)
    direct = equation_from_rows(xi_chain(const_matrix([[2, -1], [3, 1]])).xi)
    sp = ueq.specialize(lam)
    for p, q in zip(sp.a, direct):
        assert isinstance(p, UniPolyC)
        assert p.coeffs.tolist()[: len(q.to_unipoly().coeffs)] == q.to_unipoly().coeffs.tolist()


def test_wedge_is_determinant():
    rows = [[tpoly(1, 1), tpoly(2)], [tpoly(0, 1), tpoly(3, 0, 1)]]
    assert wedge(rows) == tpoly(1, 1) * tpoly(3, 0, 1) - tpoly(2) * tpoly(0, 1)


square = st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-5, 5), min_size=n, max_size=n),
                       min_size=n, max_size=n))


@settings(max_examples=80, deadline=None)
@given(square)
def test_constant_reduction_is_charpoly(A):
    p = charpoly(A)
    M = const_matrix(A)
    try:
        eq = principal_equation(xi_chain(M))
    except DegenerateChain:
        rep = detect_degeneracy(M)
        assert poly_divides(consts(rep.equation.a), p)
        return
    assert proportional(consts(eq.a), p)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3), st.integers(1, 3))
def test_annihilation_and_integrality(seed, n, m):
    A = random_integer_family(random.Random(seed), n, m)
    ch = xi_chain(A)
    a = equation_from_rows(ch.xi)
    for col in range(n):
        acc = a[0].zero_like()
        for j in range(n + 1):
            acc = acc + a[j] * ch.xi[n - j][col]
        assert acc.is_zero()
    rep = verify_iter_certificates(ch)
    assert rep["integrality"] and rep["xi_degree"] and rep["wedge_norm"]
    assert rep["leading_wedge_degree_ok"] and rep["rowsum_degree_ok"]
