"""The multiplication series a_LT(T) and the residue character c_a."""

import pytest

from conftest import unit_sample
from okmod.arith import FiniteField, ZqRing
from okmod.lubin_tate import (
    LtPrecisionError,
    c_a,
    fa_lt_inverse,
    lt_series,
)

PAIRS = [(3, 1), (3, 2), (5, 1), (5, 2), (7, 1)]


@pytest.mark.parametrize("p,f", PAIRS)
def test_teichmuller_units_act_linearly(p, f):
    R = ZqRing(p, f, 4)
    F = R.residue_field
    for x in list(F.elements())[1:]:
        t = R.teichmuller(x)
        s = lt_series(t, 4 * R.q)
        assert s.coeffs == {1: x}


def test_multiplication_by_p_is_qth_power():
    # the series of the uniformizer itself reduces to T^q
    for p, f in [(3, 1), (3, 2), (5, 1)]:
        R = ZqRing(p, f, 5)
        s = lt_series(R(p), 2 * R.q)
        assert s.coeffs == {R.q: R.residue_field.one}


@pytest.mark.parametrize("p,f", PAIRS)
def test_inverse_series_congruence(p, f):
    # (f_a^LT)^{-1} = 1 + c_a T^{q-1} - c_a^{p^{f-1}} T^{(q-1)(p^{f-1}+1)}
    # on all degrees < (q-1)(2 p^{f-1} + 1)
    q = p ** f
    D = (q - 1) * (2 * p ** (f - 1) + 1)
    M = 3
    while (p ** f) ** (M - 2) < D:
        M += 1
    for a in unit_sample(p, f, M, extra=4):
        ca = c_a(a)
        inv = fa_lt_inverse(a, D)
        expect = {0: a.ring.residue_field.one}
        if not ca.is_zero():
            expect[q - 1] = ca
        top = -(ca ** (p ** (f - 1)))
        if not top.is_zero():
            expect[(q - 1) * (p ** (f - 1) + 1)] = top
        assert inv == expect


@pytest.mark.parametrize("p,f", [(3, 2), (5, 1), (5, 2)])
def test_c_a_is_a_homomorphism(p, f):
    units = unit_sample(p, f, 3, extra=6)
    pairs = [(units[i], units[(3 * i + 1) % len(units)]) for i in range(12)]
    for a, b in pairs:
        assert c_a(a * b) == c_a(a) + c_a(b)


@pytest.mark.parametrize("p,f", [(3, 1), (3, 2), (5, 2)])
def test_c_a_values(p, f):
    R = ZqRing(p, f, 3)
    F = R.residue_field
    for x in F.elements():
        if not x.is_zero():
            assert c_a(R.teichmuller(x)).is_zero()
        # c_{1 + p[b]} = bbar for every residue b
        a = R.one + R(p) * R.teichmuller(x)
        assert c_a(a) == x


def test_precision_guard():
    R = ZqRing(5, 1, 2)
    with pytest.raises(LtPrecisionError):
        lt_series(R(7), 200)  # needs M >= 2 + ceil(log_5 200) = 6


def test_solve_is_cached():
    R = ZqRing(5, 1, 4)
    a = R(7)
    assert lt_series(a, 30) is lt_series(a, 30)


def test_support_is_the_shifted_lattice():
    R = ZqRing(3, 2, 5)
    s = lt_series(R([4, 7]), 120)
    assert all(k % (R.q - 1) == 1 % (R.q - 1) for k in s.support())
