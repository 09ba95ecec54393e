"""Group algebra of O_K in t- and Y-coordinates; the localized ring A."""

import math
import random
from fractions import Fraction

import pytest

from conftest import unit_sample
from okmod.arith import DigitProfile, FiniteField, ZqRing
from okmod.iwasawa import (
    ARingElement,
    GroupAlgebraElement,
    a_unit_pow_zp,
    build_wy,
    delta,
    f_a_sigma,
    fa_sigma_pow_zp,
    lemma_fa_A_check_Y,
    moment_sum,
    one_minus_fa_action_A,
    phi_A,
    phi_group,
    phi_q_A,
    solve_fixed_point_A,
    teich_basis,
    teich_coordinates,
    twisted_operator_A,
    unit_action_A,
    unit_action_group,
    unit_pow_zp,
    xy_bookkeeping_check,
    xy_exponent_check,
    y_coordinates,
    y_variable,
)
from okmod.lubin_tate import c_a


def _ring_for(p, f, N):
    M = 1
    while p ** M < N:
        M += 1
    return ZqRing(p, f, M)


@pytest.mark.parametrize("p,f", [(3, 2), (5, 2)])
def test_teich_coordinates_roundtrip(p, f):
    R = ZqRing(p, f, 3)
    basis = teich_basis(R)
    rng = random.Random(41)
    for _ in range(10):
        x = R([rng.randrange(R.pM) for _ in range(f)])
        coords = teich_coordinates(x)
        acc = R.zero
        for c, b in zip(coords, basis):
            acc = acc + R(c) * b
        assert acc == x


def test_delta_zero_is_one():
    R = ZqRing(3, 2, 2)
    d = delta(R.zero, 5)
    assert d.coeffs == {(0, 0): d.field.one}


def test_group_like_law():
    p, f, N = 3, 2, 6
    R = _ring_for(p, f, N)
    rng = random.Random(7)
    for _ in range(50):
        x = R([rng.randrange(R.pM) for _ in range(f)])
        y = R([rng.randrange(R.pM) for _ in range(f)])
        assert (delta(x, N) * delta(y, N) - delta(x + y, N)).is_zero()


def test_delta_precision_guard():
    R = ZqRing(3, 1, 1)
    with pytest.raises(ValueError):
        delta(R.one, 10)


def test_y0_expansion_p3():
    # Y_0 = delta_1 - delta_{-1} = (1+t) - (1+t)^{-1} = 2t + 2t^2 + t^3 + ...
    y = y_variable(0, 3, 1, 5)
    F = y.field
    assert y.coeffs == {(1,): F(2), (2,): F(2), (3,): F(1), (4,): F(2)}


@pytest.mark.parametrize("p,f", [(3, 1), (3, 2), (5, 1)])
def test_delta_one_claim(p, f):
    # delta_1 = 1 - Y_0 - ... - Y_{f-1} modulo m^2
    R = _ring_for(p, f, 3)
    d = y_coordinates(delta(R.one, 3)).truncate(2)
    F = d.field
    expect = {(0,) * f: F.one}
    for i in range(f):
        e = [0] * f
        e[i] = 1
        expect[tuple(e)] = -F.one
    assert d.coeffs == expect


def test_y_coordinates_fixes_y():
    p, f, N = 3, 2, 7
    for j in range(f):
        y = y_variable(j, p, f, N)
        out = y_coordinates(y)
        e = [0] * f
        e[j] = 1
        assert out.coeffs == {tuple(e): out.field.one}


def test_moment_example_p3():
    # sum over F_3 of delta_[lam] is t^2 + 2t^3 mod degree 4, = Y_0^2 mod m^3
    m = moment_sum(0, 3, 1, 4)
    F = m.field
    assert m.coeffs == {(2,): F(1), (3,): F(2)}
    y = y_variable(0, 3, 1, 3)
    assert (m.truncate(3) - (y * y)).is_zero()


@pytest.mark.parametrize("p,f", [(3, 1), (3, 2), (5, 1)])
def test_moment_sums_telescope(p, f):
    # sum_{i=0}^{q-2} sum_lam lam^i delta_[lam] = 1 - delta_1 (0^0 = 1)
    q = p ** f
    N = p + 2
    R = _ring_for(p, f, N)
    acc = None
    for i in range(q - 1):
        m = moment_sum(i, p, f, N)
        acc = m if acc is None else acc + m
    one = GroupAlgebraElement.constant(acc.field, f, 1, N)
    assert (acc - (one - delta(R.one, N))).is_zero()


@pytest.mark.parametrize("p,f", [(3, 1), (3, 2), (5, 1)])
def test_moment_identity_mod_mp(p, f):
    q = p ** f
    N = p
    ys = [y_variable(j, p, f, N) for j in range(f)]
    F = ys[0].field
    for i in range(q - 1):
        digs = [(i // p ** j) % p for j in range(f)]
        c = (-1) ** (f - 1)
        for d in digs:
            c *= math.factorial(d)
        rhs = GroupAlgebraElement.constant(F, f, c, N)
        for j in range(f):
            rhs = rhs * ys[j] ** (p - 1 - digs[j])
        assert (moment_sum(i, p, f, N) - rhs).is_zero(), i


@pytest.mark.parametrize("p,f", [(3, 2), (5, 1)])
def test_y_eigenvector_properties(p, f):
    N = 2 * p
    R = _ring_for(p, f, N)
    F = R.residue_field
    ys = [y_variable(j, p, f, N) for j in range(f)]
    for j in range(f):
        assert (phi_group(ys[j]) - ys[(j - 1) % f] ** p).is_zero()
        for x in [F.gen if f > 1 else F(2), -F.one]:
            a = R.teichmuller(x)
            lhs = unit_action_group(a, ys[j])
            assert (lhs - ys[j].scale(x ** (p ** j))).is_zero()


def test_action_is_homomorphism_and_commutes_with_phi():
    p, f, N = 3, 2, 6
    units = unit_sample(p, f, 2, extra=2)
    y = y_variable(0, p, f, N) + y_variable(1, p, f, N) ** 2
    rng = random.Random(12)
    for _ in range(5):
        a, b = rng.choice(units), rng.choice(units)
        lhs = unit_action_group(a, unit_action_group(b, y))
        assert (lhs - unit_action_group(a * b, y)).is_zero()
        assert (phi_group(unit_action_group(a, y))
                - unit_action_group(a, phi_group(y))).is_zero()


@pytest.mark.parametrize("p,f", [(3, 1), (3, 2)])
def test_one_unit_action_congruence(p, f):
    # a = 1+p[mu]: a(Y_j) = Y_j + mu^{p^j}Y_{j-1}^p
    #                        - mu^{p^{j-1}}Y_{j-1}^{p-1}Y_{j-2}^p mod m^{2p}
    N = 2 * p
    R = _ring_for(p, f, N)
    F = R.residue_field
    ys = [y_variable(j, p, f, N) for j in range(f)]
    for mu in F.elements():
        if mu.is_zero():
            continue
        a = R.one + R(p) * R.teichmuller(mu)
        for j in range(f):
            rhs = (ys[j]
                   + (ys[(j - 1) % f] ** p).scale(mu ** (p ** j))
                   - (ys[(j - 1) % f] ** (p - 1)
                      * ys[(j - 2) % f] ** p).scale(
                          mu ** (p ** ((j - 1) % f))))
            assert (unit_action_group(a, ys[j]) - rhs).is_zero(), (mu, j)


def test_unit_pow_zp_group_algebra():
    F = FiniteField(3, 1)
    one = GroupAlgebraElement.constant(F, 1, 1, 8)
    t = GroupAlgebraElement.variable(F, 1, 0, 8)
    u = one + t
    inv = unit_pow_zp(u, -1)
    assert (u * inv - one).is_zero()
    assert (unit_pow_zp(u, Fraction(1, 2)) ** 2 - u).is_zero()
    with pytest.raises(ValueError):
        unit_pow_zp(u, Fraction(1, 3))


def test_a_ring_phi_and_filtration():
    F = FiniteField(3, 2)
    x = ARingElement.monomial(F, 2, (2, -1), None, 10)
    assert phi_A(x).coeffs == {(-3, 6): F.one}
    assert phi_q_A(x).coeffs == {(18, -9): F.one}
    assert x.in_filtration(-1) and not x.in_filtration(-2)
    y = ARingElement(F, 2, {(1, 0): F.one, (0, 1): F.one}, 10)
    with pytest.raises(ArithmeticError):
        y.dominant_monomial()
    z = ARingElement.monomial(F, 2, (1, -1), None, 10) + y
    assert (z * z.inverse()
            - ARingElement.one(F, 2, 10)).truncate(8).is_zero()
    with pytest.raises(ArithmeticError):
        y.inverse()  # tied minimal degree


def test_a_ring_monomial_inverse_is_exact():
    F = FiniteField(5, 1)
    m = ARingElement.monomial(F, 1, (-3,), F(2))
    assert (m * m.inverse()).coeffs == {(0,): F.one}
    assert m.inverse().N is None


def test_f_a_sigma_teichmuller_is_one():
    R = ZqRing(3, 2, 3)
    F = R.residue_field
    a = R.teichmuller(F.gen)
    u = f_a_sigma(a, 0, 7)
    assert u.coeffs == {(0, 0): F.one}


@pytest.mark.parametrize("p,f", [(3, 1), (3, 2), (5, 1)])
def test_one_unit_lemma_for_f_sigma(p, f):
    R = ZqRing(p, f, 3)
    F = R.residue_field
    for mu in F.elements():
        a = R.one + R(p) * R.teichmuller(mu)
        for j in range(f):
            assert lemma_fa_A_check_Y(a, j), (mu, j)
    # a = 1 + p^2 b has c_a = 0 and still satisfies the congruence
    b = R.one + R(p * p) * R(2)
    assert c_a(b).is_zero()
    assert lemma_fa_A_check_Y(b, 0)


def test_fa_sigma_powers_compose():
    R = ZqRing(3, 2, 4)
    a = R([4, 7])
    N = 9
    x = fa_sigma_pow_zp(a, 0, 5, N) * fa_sigma_pow_zp(a, 0, -5, N)
    assert x.truncate(N).coeffs == {(0, 0): a.ring.residue_field.one}
    y = fa_sigma_pow_zp(a, 1, Fraction(1, 2), N)
    assert ((y * y) - fa_sigma_pow_zp(a, 1, 1, N)).truncate(y.N).is_zero()


def test_solver_basics():
    F = FiniteField(3, 2)
    z = ARingElement(F, 2, {}, 10)
    assert solve_fixed_point_A(F.one, 1, z, 10).is_zero()
    bad = ARingElement.monomial(F, 2, (1, 0), None, 10)
    with pytest.raises(ValueError):
        solve_fixed_point_A(F.one, 1, bad, 10)


@pytest.mark.parametrize("p,f", [(3, 1), (3, 2)])
def test_solver_residual_vanishes(p, f):
    q = p ** f
    N = 3 * p
    F = FiniteField(p, f)
    els = [e for e in F.elements() if not e.is_zero()]
    rng = random.Random(90125)
    for _ in range(10):
        h = rng.randrange(q - 1)
        lam = rng.choice(els)
        coeffs = {}
        for _ in range(3):
            e = [rng.randrange(-2, 4) for _ in range(f)]
            while not p - 1 <= sum(e) < N:
                e = [rng.randrange(-2, 4) for _ in range(f)]
            coeffs[tuple(e)] = rng.choice(els)
        y = ARingElement(F, f, coeffs, N)
        x = solve_fixed_point_A(lam, h, y, N)
        resid = (x - twisted_operator_A(lam, h, x) - y).truncate(N)
        assert resid.is_zero()
        assert x.in_filtration(p - 1)


def test_index_class_monomial_form():
    # h_j != 0: D_j = Y_0^{[h]_{j-1}} Y_{f-1}^{-p [h]_{j-1}}
    p, f = 3, 2
    hp = DigitProfile(5, p, f)  # digits (2, 1), both nonzero
    for j in range(f):
        tup = build_wy("index", j, 5, 2, 1, p, f, 7)
        s = int(hp.partial(j - 1))
        assert tup.D.coeffs == {(s, -p * s): tup.field.one}


def test_unramified_class():
    tup = build_wy("unramified", None, 0, 2, 2, 3, 1, 7)
    units = unit_sample(3, 1, 3, extra=1)
    assert tup.D.coeffs == {(0,): tup.field.one}
    for a in units[:3]:
        assert tup.E(a).is_zero()
        assert tup.compat_residual(a).is_zero()
    assert build_wy("unramified", None, 0, 2, 1, 3, 1, 7).D.is_zero()


@pytest.mark.parametrize("p,f", [(3, 1), (3, 2), (5, 1)])
def test_classes_satisfy_both_rules(p, f):
    q = p ** f
    N = 3 * (p - 1) + 1
    M = 1
    while p ** M < 2 * N + 8:
        M += 1
    units = unit_sample(p, f, M, extra=3)
    rng = random.Random(17)
    for trial in range(4):
        h = rng.randrange(q - 1)
        j = rng.randrange(f)
        kind = rng.choice(["index", "index2"])
        tup = build_wy(kind, j, h, 2, 1, p, f, N)
        a, b = rng.choice(units), rng.choice(units)
        assert tup.compat_residual(a).is_zero(), (kind, h, j)
        assert tup.cocycle_residual(a, b).is_zero(), (kind, h, j)


@pytest.mark.parametrize("p,f", [(3, 1), (3, 2)])
def test_trace_class(p, f):
    q = p ** f
    h = (q - 1) // (p - 1)
    N = 3 * (p - 1) + 1
    M = 1
    while p ** M < 2 * N + 8:
        M += 1
    units = unit_sample(p, f, M, extra=2)
    tup = build_wy("trace", None, h, 2, 2, p, f, N)
    assert len(tup.D.coeffs) == f
    for a in units[:3]:
        assert tup.compat_residual(a).is_zero()
    assert tup.cocycle_residual(units[1], units[-1]).is_zero()
    z = build_wy("trace", None, h, 2, 1, p, f, N)
    assert z.D.is_zero()


def test_congruence_corollary_filtration():
    # op(D) lands in F_{1-p}A for every built class
    p, f, N = 3, 2, 7
    q = p ** f
    M = 1
    while p ** M < 2 * N + 8:
        M += 1
    units = unit_sample(p, f, M, extra=1)
    a = units[len(units) // 2]
    for h in range(q - 1):
        for j in range(f):
            for kind in ["index", "index2"]:
                tup = build_wy(kind, j, h, 2, 1, p, f, N)
                y = one_minus_fa_action_A(a, h, tup.D, N)
                assert y.in_filtration(1 - p), (kind, h, j)


def test_zp_power_needs_padic_exponent():
    F = FiniteField(3, 1)
    u = (ARingElement.one(F, 1, 9)
         + ARingElement.monomial(F, 1, (2,), None, 9))
    assert (a_unit_pow_zp(u, 3) - u ** 3).truncate(9).is_zero()
    with pytest.raises(ValueError):
        a_unit_pow_zp(u, Fraction(1, 3))


def test_xy_exponent_checks():
    # [h]_{j-1} + h/(q-1) has valuation >= j whenever h_j != 0
    for p, f in [(5, 1), (5, 2), (7, 2)]:
        q = p ** f
        for h in range(q - 1):
            hp = DigitProfile(h, p, f)
            for j in range(f):
                if hp.digit(j) != 0:
                    assert xy_exponent_check(h, j, p, f)
                    assert xy_bookkeeping_check(h, j, p, f)
                else:
                    assert not xy_bookkeeping_check(h, j, p, f)
