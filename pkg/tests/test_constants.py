import random

import pytest

from okmod.arith import FiniteField
from okmod.constants import (FLModule, RatioMatrix, SubsetIndexed,
                             all_subsets, boundary_ratio, chi_character,
                             complement, constants_match, epsilon,
                             epsilon_identity_check,
                             factorial_congruence_check, factorial_unit,
                             fontaine_laffaille, gamma_family,
                             generic_r_window, mu_base_ratio, mu_cross,
                             mu_family, nu_family, parity_identity_check,
                             reconstruct_matrix, s_r_vectors,
                             sample_parameters, shift_down, shift_up,
                             sign_power)
from okmod.dmodule import nu_scalar

PRIMES_TO_97 = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                53, 59, 61, 67, 71, 73, 79, 83, 89, 97]


# ---------------------------------------------------------------------
#  Subsets
# ---------------------------------------------------------------------

def test_subset_helpers():
    f = 3
    assert len(all_subsets(f)) == 8
    J = frozenset({0, 2})
    assert complement(J, f) == frozenset({1})
    assert len(J) + len(complement(J, f)) == f
    assert shift_up(shift_down(J, f), f) == J
    assert shift_down(J, f) == frozenset({2, 1})


def test_subset_indexed():
    f = 2
    si = SubsetIndexed(f, {J: len(J) for J in all_subsets(f)})
    assert si[frozenset({0, 1})] == 2
    with pytest.raises(ValueError):
        SubsetIndexed(2, {frozenset(): 0})


# ---------------------------------------------------------------------
#  Weight vectors and characters
# ---------------------------------------------------------------------

def test_s_r_vectors_clauses():
    p, r = 31, (14, 17)
    # J = {1}: j=0 has j not in J, j+1 in J; j=1 has j in J, j+1 not in J
    s, rr = s_r_vectors({1}, r, p)
    assert s == (p - 2 - r[0], r[1] + 1)
    assert rr == (r[0] + 1, -1)
    # empty set: s = r, twist zero
    s, rr = s_r_vectors(frozenset(), r, p)
    assert s == r and rr == (0, 0)
    # full set: both clauses "in"
    s, rr = s_r_vectors({0, 1}, r, p)
    assert s == (p - 1 - r[0], p - 1 - r[1]) and rr == r


def test_chi_character():
    p, r = 31, (14, 17)
    a_exp, d_exp = chi_character({1}, r, p)
    s, rr = s_r_vectors({1}, r, p)
    assert a_exp == tuple(x + y for x, y in zip(s, rr))
    assert d_exp == rr


def test_parity_identity_exhaustive():
    rng = random.Random(0)
    for f in range(1, 7):
        for p in (5, 7, 11):
            for _ in range(5):
                r = tuple(rng.randrange(0, p - 2) for _ in range(f))
                assert parity_identity_check(r, p)


# ---------------------------------------------------------------------
#  Signs and factorials
# ---------------------------------------------------------------------

def test_epsilon_values():
    # f=3, J={0,1}: J-1 = {2,0}, intersection {0}, odd
    assert epsilon({0, 1}, 3) == -1
    assert epsilon(frozenset(range(3)), 3) == 1
    assert epsilon(frozenset(range(4)), 4) == -1
    assert epsilon(frozenset(), 3) == 1


def test_epsilon_identity_exhaustive():
    for f in range(1, 9):
        assert epsilon_identity_check(f)


def test_epsilon_identity_spot():
    # f=3, J={0,1}: both sides +1
    f, J = 3, frozenset({0, 1})
    lhs = sign_power(FiniteField(5), f - 1) * \
        FiniteField(5)(epsilon(complement(J, f), f))
    assert lhs == FiniteField(5).one


def test_factorial_congruence_all_small_primes():
    for p in PRIMES_TO_97:
        if p == 2:
            continue
        assert factorial_congruence_check(p)


def test_factorial_unit_range():
    field = FiniteField(7)
    assert factorial_unit(field, 6) == field(720)
    with pytest.raises(ValueError):
        factorial_unit(field, 7)


# ---------------------------------------------------------------------
#  mu family
# ---------------------------------------------------------------------

def test_mu_base_ratio_reciprocal():
    rng = random.Random(2)
    for f in (1, 2, 3):
        r, root, d = sample_parameters(37, f, rng)
        one = root.field.one
        for J in all_subsets(f):
            Jc = complement(J, f)
            assert (mu_base_ratio(J, r, root, d)
                    * mu_base_ratio(Jc, r, root, d)) == one


def test_mu_family_structure():
    rng = random.Random(3)
    r, root, d = sample_parameters(31, 2, rng)
    field = root.field
    f, empty, full = 2, frozenset(), frozenset({0, 1})
    mu = mu_family(r, root, d)
    assert mu.ratio_law_ok()
    # corner of the diagonal block
    assert mu[full, full] == (root ** f).inverse()
    # base ratios and cross values are reproduced
    for J in all_subsets(f):
        Jc = complement(J, f)
        assert mu[J, empty] / mu[Jc, empty] == mu_base_ratio(J, r, root, d)
        if J:
            assert mu[J, Jc] == mu_cross(J, r, field)
    # the extension rule for any column away from the full set
    for J in all_subsets(f):
        for Jp in all_subsets(f):
            if Jp == full:
                continue
            Jpc = complement(Jp, f)
            assert mu[J, Jp] == (mu[Jpc, Jp] * mu[J, empty]
                                 / mu[Jpc, empty])


def test_mu_family_rejects_bad_parameters():
    field = FiniteField(29)
    one = field.one
    with pytest.raises(ValueError):
        mu_family((0,), one, (one,))           # all weights zero
    with pytest.raises(ValueError):
        mu_family((30,), one, (one,))          # weight out of range
    with pytest.raises(ValueError):
        mu_family((14,), one, (field.zero,))   # zero unit


# ---------------------------------------------------------------------
#  nu family
# ---------------------------------------------------------------------

def test_nu_family_ratio_law_and_identity():
    rng = random.Random(4)
    for f in (1, 2, 3):
        r, root, d = sample_parameters(37, f, rng)
        nu = nu_family(root, d)
        assert nu.ratio_law_ok()
        q = nu.quantities()
        for J in all_subsets(f):
            assert q[J] == boundary_ratio(J, root, d)


def test_nu_family_against_tensor_scalar():
    # the tensor-module scalar is the same nu on its defined range
    rng = random.Random(5)
    p, f = 31, 3
    r, root, d = sample_parameters(p, f, rng)
    nu = nu_family(root, d)
    for J in all_subsets(f):
        Jm1 = shift_down(J, f)
        for Jp in all_subsets(f):
            if not Jp <= Jm1:
                continue
            assert nu[J, Jp] == nu_scalar(J, Jp, root, d)


def test_boundary_ratio_symmetric_case():
    # all d = 1, xi = 1: the ratio is 1 whenever |J| = |J^c|
    field = FiniteField(29)
    one = field.one
    d = (one, one)
    assert boundary_ratio({0}, one, d) == one
    assert boundary_ratio({1}, one, d) == one


# ---------------------------------------------------------------------
#  The matching identity
# ---------------------------------------------------------------------

def test_constants_match_f1_reduces_to_corner():
    # at f=1 the only content is the corner identity mu_full_full=xi^-1
    rng = random.Random(6)
    r, root, d = sample_parameters(29, 1, rng)
    assert constants_match(r, root, d)
    mu = mu_family(r, root, d)
    full = frozenset({0})
    assert mu[full, full] == (root ** 1).inverse()


@pytest.mark.parametrize("p,f", [(29, 1), (31, 2), (37, 3)])
def test_constants_match_random_draws(p, f):
    rng = random.Random(100 * p + f)
    for _ in range(25):
        r, root, d = sample_parameters(p, f, rng)
        assert constants_match(r, root, d)


def test_gamma_family_signs():
    rng = random.Random(7)
    r, root, d = sample_parameters(31, 2, rng)
    mu = mu_family(r, root, d)
    g = gamma_family(mu)
    field = root.field
    empty, full = frozenset(), frozenset({0, 1})
    # eps_empty = +1, f-1 = 1: gamma = -mu on the empty column
    assert g[full, empty] == -mu[full, empty]
    # eps_full = (-1)^{f-1} = -1 at f=2: the signs cancel
    assert g[empty, full] == mu[empty, full]


# ---------------------------------------------------------------------
#  Ratio-law matrices and reconstruction
# ---------------------------------------------------------------------

def test_reconstruct_roundtrip():
    rng = random.Random(8)
    for f in (1, 2, 3):
        r, root, d = sample_parameters(37, f, rng)
        mu = mu_family(r, root, d)
        q = mu.quantities()
        B = reconstruct_matrix(q, f)
        assert B.ratio_law_ok()
        assert B.quantities() == q
        assert B.canonical() == B        # already canonical
        assert mu.is_diagonal_conjugate(B)
        assert reconstruct_matrix(B.quantities(), f) == B


def test_reconstruct_f1_all_ones():
    field = FiniteField(5)
    q = SubsetIndexed(1, {J: field.one for J in all_subsets(1)})
    B = reconstruct_matrix(q, 1)
    for J in all_subsets(1):
        for Jp in all_subsets(1):
            assert B[J, Jp] == field.one


def test_diagonal_conjugation_invariance():
    rng = random.Random(9)
    r, root, d = sample_parameters(31, 2, rng)
    nu = nu_family(root, d)
    field = root.field
    units = [x for x in field.elements() if not x.is_zero()]
    t = {J: units[rng.randrange(len(units))] for J in all_subsets(2)}
    conj = nu.conjugated(t)
    assert conj.quantities() == nu.quantities()
    assert conj.is_diagonal_conjugate(nu)


def test_equal_quantities_imply_conjugate_brute_force():
    # rank-one matrices over GF(25) with row/column data drawn
    # exhaustively from a fixed three-element pool: any two with equal
    # invariants must be diagonal-conjugate
    field = FiniteField(5, 2)
    f = 2
    subsets = all_subsets(f)
    g = field.gen
    pool = [g, g * g, g + field.one]
    import itertools
    seen = {}
    for avec in itertools.product(pool, repeat=4):
        for bvec in itertools.product(pool, repeat=4):
            a = dict(zip(subsets, avec))
            b = dict(zip(subsets, bvec))
            B = RatioMatrix(f, {(J, Jp): a[J] * b[Jp]
                                for J in subsets for Jp in subsets})
            key = tuple(sorted((tuple(sorted(J)), repr(v))
                               for J, v in B.quantities().items()))
            canon = B.canonical().entries
            if key in seen:
                assert seen[key] == canon
            else:
                seen[key] = canon


def test_ratio_matrix_guards():
    field = FiniteField(5)
    one = field.one
    with pytest.raises(ValueError):
        RatioMatrix(1, {(frozenset(), frozenset()): one})
    subsets = all_subsets(1)
    with pytest.raises(ValueError):
        RatioMatrix(1, {(J, Jp): field.zero
                        for J in subsets for Jp in subsets})
    q = SubsetIndexed(1, {J: field.zero for J in subsets})
    with pytest.raises(ValueError):
        reconstruct_matrix(q, 1)


# ---------------------------------------------------------------------
#  Fontaine-Laffaille data
# ---------------------------------------------------------------------

def test_fl_module_basic():
    rng = random.Random(10)
    r, root, d = sample_parameters(31, 2, rng)
    fl = fontaine_laffaille(r, root, d)
    assert isinstance(fl, FLModule)
    assert not fl.split
    assert fl.xi == root ** 2
    for j in range(2):
        assert fl.filtration_jump(j) == r[j] + 1
        m = fl.phi_matrix(j)
        inv = root.inverse()
        assert m[0][0] == inv and m[0][1].is_zero()
        assert m[1][0] == -inv * d[(j + 1) % 2]
        assert m[1][1] == root


def test_fl_module_split_case():
    field = FiniteField(29)
    fl = fontaine_laffaille((14,), field.one, (field.zero,))
    assert fl.split
    m = fl.phi_matrix(0)
    assert m[1][0].is_zero()


def test_fl_module_guards():
    field = FiniteField(29)
    with pytest.raises(ValueError):
        fontaine_laffaille((0,), field.one, (field.one,))
    with pytest.raises(ValueError):
        fontaine_laffaille((27,), field.one, (field.one,))
    with pytest.raises(ValueError):
        fontaine_laffaille((14,), field.zero, (field.one,))


def test_generic_window():
    assert generic_r_window(29, 1) == (12, 14)
    assert generic_r_window(31, 2) == (12, 16)
    with pytest.raises(ValueError):
        generic_r_window(13, 1)


def test_sample_parameters_deterministic():
    a = sample_parameters(31, 2, random.Random(11))
    b = sample_parameters(31, 2, random.Random(11))
    assert a == b
