"""Laurent-series actions, the fixed-point solver, extension classes."""

import random

import pytest

from conftest import unit_sample
from okmod.arith import DigitProfile, FiniteField, ZqRing
from okmod.lt_ext import (
    ExtTupleLT,
    LaurentSeries,
    basis_step_instances,
    build_wlt,
    congruence_check_lt,
    default_precision,
    fa_power,
    find_equivalence_witness,
    in_positive_lattice,
    no_solution_detector,
    one_minus_fa_action,
    phi_q,
    solve_fixed_point_lt,
    twisted_operator,
    unit_action,
)
from okmod.lubin_tate import c_a


def test_phi_q_on_monomials():
    F = FiniteField(5, 1)
    x = LaurentSeries.monomial(F, -4)
    assert phi_q(x).support() == [-20]
    y = LaurentSeries(F, {1: F(2), 3: F(1)}, 10)
    z = phi_q(y)
    assert z.support() == [5, 15] and z.prec == 50


def test_mul_precision_rule():
    F = FiniteField(5, 1)
    x = LaurentSeries(F, {-2: F(1)}, 7)
    y = LaurentSeries(F, {3: F(2)}, 11)
    z = x * y
    # min(7 + 3, 11 - 2) = 9
    assert z.prec == 9 and z.support() == [1]


def test_unit_action_on_teichmuller():
    R = ZqRing(5, 2, 4)
    F = R.residue_field
    x = F.gen
    a = R.teichmuller(x)
    s = unit_action(a, LaurentSeries.monomial(F, 7), 40)
    assert s.coeffs == {7: x ** 7}


def test_unit_action_example_p5():
    # a = 6 at p = 5: a(T) = abar T (f_a)^{-1} = T + T^5 - T^9 + ...
    R = ZqRing(5, 1, 4)
    F = R.residue_field
    ax = unit_action(R(6), LaurentSeries.monomial(F, 1), 13)
    assert ax.coeffs == {1: F.one, 5: F.one, 9: -F.one}


def test_unit_action_is_multiplicative():
    R = ZqRing(3, 2, 5)
    F = R.residue_field
    units = unit_sample(3, 2, 5, extra=3)
    x = LaurentSeries(F, {-16: F.gen, 8: F.one}, 60)
    rng = random.Random(5)
    for _ in range(6):
        a, b = rng.choice(units), rng.choice(units)
        lhs = unit_action(a, unit_action(b, x))
        rhs = unit_action(a * b, x)
        assert (lhs - rhs).truncate(min(lhs.prec, rhs.prec)).is_zero()


def test_unit_action_commutes_with_phi_q():
    R = ZqRing(5, 1, 5)
    F = R.residue_field
    x = LaurentSeries(F, {-4: F(2), 4: F.one}, 30)
    for a in unit_sample(5, 1, 5, extra=2)[::3]:
        lhs = phi_q(unit_action(a, x))
        rhs = unit_action(a, phi_q(x), 150)
        assert (lhs - rhs).truncate(min(lhs.prec, rhs.prec)).is_zero()


def test_fa_power_composes():
    R = ZqRing(5, 2, 5)
    units = unit_sample(5, 2, 5, extra=2)
    a = units[-1]
    lhs = fa_power(a, 29, 300)
    rhs = fa_power(a, 17, 300) * fa_power(a, 12, 300)
    assert (lhs - rhs).is_zero()
    assert (fa_power(a, -7, 200) * fa_power(a, 7, 200)).coeffs == {
        0: R.residue_field.one}


def test_solver_example():
    F = FiniteField(5, 1)
    y = LaurentSeries.monomial(F, 4, prec=100)
    x = solve_fixed_point_lt(F.one, 1, y, 100)
    assert x.support() == [4, 16, 76]
    assert solve_fixed_point_lt(F(2), 0, LaurentSeries.zero(F, 50), 50).is_zero()


@pytest.mark.parametrize("p,f", [(5, 1), (3, 2)])
def test_solver_residual_vanishes(p, f):
    q = p ** f
    F = FiniteField(p, f)
    N = default_precision(p, f)
    els = [e for e in F.elements() if not e.is_zero()]
    rng = random.Random(90125)
    for trial in range(20):
        h = rng.randrange(q - 1)
        lam = rng.choice(els)
        coeffs = {(q - 1) * rng.randrange(1, N // (q - 1)): rng.choice(els)
                  for _ in range(4)}
        y = LaurentSeries(F, coeffs, N)
        x = solve_fixed_point_lt(lam, h, y, N)
        resid = (x - twisted_operator(lam, h, x) - y).truncate(N)
        assert resid.is_zero()
        assert in_positive_lattice(x)


def test_solver_rejects_bad_input():
    F = FiniteField(5, 1)
    with pytest.raises(ValueError):
        solve_fixed_point_lt(F.one, 1, LaurentSeries.monomial(F, -4, prec=20), 20)
    with pytest.raises(ValueError):
        solve_fixed_point_lt(F.one, 1, LaurentSeries.monomial(F, 3, prec=20), 20)


def test_no_solution_detector_cases():
    # top-digit elimination: t = [h]_{j0-1}, empty upper blocks
    hp = DigitProfile(7, 5, 2)  # digits (2, 1), j0 = 1, [h]_0 = 2
    assert no_solution_detector(7, 5, 2, -1, -1, int(hp.partial(0)))
    # congruent t never certifies
    assert not no_solution_detector(2, 5, 1, -1, -1, 2 + 5 * 3)
    # malformed decompositions
    with pytest.raises(ValueError):
        no_solution_detector(1, 5, 1, -2, -1, 3)
    with pytest.raises(ValueError):
        no_solution_detector(1, 5, 1, -1, -1, -3)


@pytest.mark.parametrize("f", [1, 2])
def test_detector_confirms_independence_steps(f):
    p = 5
    q = p ** f
    for h in range(q - 1):
        for ratio_is_one in (True, False):
            for label, hu, m, n, t in basis_step_instances(h, p, f,
                                                           ratio_is_one):
                assert no_solution_detector(hu, p, f, m, n, t), (
                    label, h, ratio_is_one)


@pytest.mark.parametrize("p,f", [(5, 1), (3, 2)])
def test_congruence_cases(p, f):
    q = p ** f
    M = 5
    units = unit_sample(p, f, M, extra=3)
    rng = random.Random(2)
    for trial in range(8):
        a = rng.choice(units)
        h = rng.randrange(q - 1)
        hp = DigitProfile(h, p, f)
        i = rng.randrange(f, 2 * f)
        r = congruence_check_lt("i", i, h, a)
        assert in_positive_lattice(r)
        r = congruence_check_lt("ii", i, h, a)
        assert in_positive_lattice(r)
        if hp.digit(i) == 1:
            r = congruence_check_lt("iii", i, h, a)
            assert in_positive_lattice(r)


def test_congruence_teichmuller_is_exactly_zero():
    R = ZqRing(5, 1, 4)
    t = R.teichmuller(R.residue_field(3))
    assert congruence_check_lt("i", 0, 2, t).is_zero()
    assert congruence_check_lt("ii", 1, 2, t).is_zero()


def test_congruence_case_iii_guard():
    R = ZqRing(5, 2, 5)
    a = R(7)
    with pytest.raises(ValueError):
        congruence_check_lt("iii", 0, 2, a)  # h_0 = 2, not 1


def _pairs(units, n, seed=0):
    rng = random.Random(seed)
    return [(rng.choice(units), rng.choice(units)) for _ in range(n)]


@pytest.mark.parametrize("p,f,M", [(5, 1, 5), (5, 2, 6)])
def test_index_classes_satisfy_both_rules(p, f, M):
    q = p ** f
    units = unit_sample(p, f, M, extra=4)
    rng = random.Random(17)
    for trial in range(6):
        h = rng.randrange(q - 1)
        j = rng.randrange(f)
        lam0, lam1 = 2, 1 + rng.randrange(2)
        tup = build_wlt("index", j, h, lam0, lam1, p, f)
        for a in rng.sample(units, 4):
            assert tup.compat_residual(a).is_zero(), (h, j, lam0, lam1)
        for a, b in _pairs(units, 3, seed=trial):
            assert tup.cocycle_residual(a, b).is_zero(), (h, j)
        assert all(k % (q - 1) == 0 for k in tup.D.support())


@pytest.mark.parametrize("p,f,M", [(5, 1, 5), (5, 2, 6)])
def test_trace_class(p, f, M):
    q = p ** f
    h = (q - 1) // (p - 1)
    units = unit_sample(p, f, M, extra=3)
    tup = build_wlt("trace", None, h, 3, 3, p, f)
    assert len(tup.D.support()) == f
    for a in units[::5]:
        assert tup.compat_residual(a).is_zero()
    for a, b in _pairs(units, 3, seed=9):
        assert tup.cocycle_residual(a, b).is_zero()
    # guard violation degenerates to the zero tuple
    z = build_wlt("trace", None, h, 3, 1, p, f)
    assert z.D.is_zero() and z.E(units[0]).is_zero()


def test_unramified_class():
    units = unit_sample(5, 1, 4, extra=2)
    tup = build_wlt("unramified", None, 0, 2, 2, 5, 1)
    assert tup.D.coeffs == {0: tup.field.one}
    for a in units[::4]:
        assert tup.E(a).is_zero()
        assert tup.compat_residual(a).is_zero()
    z = build_wlt("unramified", None, 0, 2, 1, 5, 1)
    assert z.D.is_zero()


@pytest.mark.parametrize("p,f,M", [(5, 1, 5), (3, 2, 5)])
def test_h0_constant_tuples_are_equivalent_to_index_classes(p, f, M):
    # at h = 0, lam0 = lam1 the tuple (0, c_a^{p^j}) matches the negated
    # index class at j+1 (wrapping), with an explicit monomial witness
    F = FiniteField(p, f)
    N = default_precision(p, f)
    units = unit_sample(p, f, M, extra=2)
    lam = F(2)
    for j in range(f):
        jn = (j + 1) % f
        tup = ExtTupleLT(
            F, p, f, 0, lam, lam, LaurentSeries.zero(F),
            lambda a, _j=j: LaurentSeries.monomial(
                F, 0, c_a(a) ** (p ** _j), N), N)
        target = -build_wlt("index", jn, 0, lam, lam, p, f)
        b, ok = find_equivalence_witness(tup, target, units[::6])
        assert ok and b is not None
        q = p ** f
        assert b.support() == [-(q - 1) * p ** (jn + 1)]


def test_witness_search_fails_between_independent_classes():
    # two index classes at h with distinct nonzero digits are inequivalent
    p, f = 5, 2
    units = unit_sample(p, f, 6, extra=2)
    t0 = build_wlt("index", 0, 7, 2, 1, p, f)
    t1 = build_wlt("index", 1, 7, 2, 1, p, f)
    b, ok = find_equivalence_witness(t0, t1, units[:3])
    assert not ok
