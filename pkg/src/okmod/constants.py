"""Subset-indexed constants attached to rank-2^f Frobenius matrices.

Everything in this module is finite combinatorics over a coefficient
field: weight vectors and characters indexed by subsets J of
{0, ..., f-1}, the sign eps_J, three families of scalars (mu, nu,
gamma) forming 2^f x 2^f matrices that satisfy a ratio law, and the
matching identity between their diagonal-conjugation invariants.  The
mu family is built from explicit factorial formulas; nothing here
touches series rings.

Subsets are passed around as frozensets of residues mod f.  Index
shifts j -> j+1 are always cyclic.
"""

from okmod.arith import FiniteField


def all_subsets(f):
    """All 2^f subsets of {0, ..., f-1}, in mask order (deterministic)."""
    out = []
    for mask in range(1 << f):
        out.append(frozenset(j for j in range(f) if mask >> j & 1))
    return out


def complement(J, f):
    return frozenset(range(f)) - J


def shift_down(J, f):
    """J - 1, the subset of j with j+1 in J (cyclically)."""
    return frozenset((j - 1) % f for j in J)


def shift_up(J, f):
    return frozenset((j + 1) % f for j in J)


class SubsetIndexed:
    """A total assignment of values to the subsets of {0, ..., f-1}."""

    def __init__(self, f, values):
        self.f = f
        self.values = {frozenset(J): v for J, v in values.items()}
        if len(self.values) != 1 << f:
            raise ValueError("need a value for every subset")

    def __getitem__(self, J):
        return self.values[frozenset(J)]

    def items(self):
        for J in all_subsets(self.f):
            yield J, self.values[J]

    def __eq__(self, other):
        return (isinstance(other, SubsetIndexed) and self.f == other.f
                and self.values == other.values)


# ---------------------------------------------------------------------
#  Weight vectors, characters, signs
# ---------------------------------------------------------------------

def s_r_vectors(J, r, p):
    """The two integer vectors attached to (J, r).

    Componentwise four-clause tables keyed on (j in J, j+1 in J); the
    first vector collects the weights, the second the twist exponents.
    """
    f = len(r)
    J = frozenset(J)
    s, rr = [], []
    for j in range(f):
        a, b = j in J, (j + 1) % f in J
        if not a and not b:
            s.append(r[j])
            rr.append(0)
        elif a and not b:
            s.append(r[j] + 1)
            rr.append(-1)
        elif not a and b:
            s.append(p - 2 - r[j])
            rr.append(r[j] + 1)
        else:
            s.append(p - 1 - r[j])
            rr.append(r[j])
    return tuple(s), tuple(rr)


def chi_character(J, r, p):
    """Exponent pair of the torus character attached to (J, r): the
    diagonal entries act through powers sum(i_j p^j) of these vectors."""
    s, rr = s_r_vectors(J, r, p)
    return tuple(sj + rj for sj, rj in zip(s, rr)), rr


def parity_identity_check(r, p):
    """(-1)^{s^J + r^J} = (-1)^{r^{J^c}} for every J (p odd, so only
    digit-sum parities matter)."""
    f = len(r)
    for J in all_subsets(f):
        s, rr = s_r_vectors(J, r, p)
        _, rc = s_r_vectors(complement(J, f), r, p)
        if (sum(s) + sum(rr)) % 2 != sum(rc) % 2:
            return False
    return True


def epsilon(J, f):
    """The sign (-1)^{|J cap (J-1)|}, except (-1)^{f-1} on the full set."""
    J = frozenset(J)
    if J == frozenset(range(f)):
        return -1 if (f - 1) % 2 else 1
    return -1 if len(J & shift_down(J, f)) % 2 else 1


def epsilon_identity_check(f):
    """(-1)^{f-1} eps_{J^c} = (-1)^{|J cap (J-1)| + 1} for all J != empty."""
    sf = -1 if (f - 1) % 2 else 1
    for J in all_subsets(f):
        if not J:
            continue
        lhs = sf * epsilon(complement(J, f), f)
        rhs = -1 if len(J & shift_down(J, f)) % 2 == 0 else 1
        if lhs != rhs:
            return False
    return True


def factorial_unit(field, n):
    """n! as an element of the field (n < char, so this is a unit)."""
    if not 0 <= n < field.p:
        raise ValueError("factorial argument out of the unit range")
    out = field.one
    for i in range(2, n + 1):
        out = out * field(i)
    return out


def sign_power(field, k):
    """(-1)^k in the field."""
    return field.one if k % 2 == 0 else -field.one


def factorial_congruence_check(p):
    """((p-1-r)!)^{-1} = (-1)^{r+1} r!  for all 0 <= r <= p-1."""
    field = FiniteField(p)
    for r in range(p):
        lhs = factorial_unit(field, p - 1 - r).inverse()
        if lhs != sign_power(field, r + 1) * factorial_unit(field, r):
            return False
    return True


# ---------------------------------------------------------------------
#  Ratio-law matrices
# ---------------------------------------------------------------------

class RatioMatrix:
    """A 2^f x 2^f matrix with nonzero entries indexed by subset pairs,
    intended to satisfy B_{J1,J3}/B_{J1,J4} = B_{J2,J3}/B_{J2,J4}.

    The diagonal-conjugation invariants are the quantities
    B_{J,0} / (B_{J^c,0} B_{J,J^c}); two ratio-law matrices are
    diagonal-conjugate iff these agree, which the canonical form
    (left column scaled to 1) makes directly comparable.
    """

    def __init__(self, f, entries):
        self.f = f
        self.entries = {(frozenset(J), frozenset(Jp)): v
                        for (J, Jp), v in entries.items()}
        if len(self.entries) != 1 << (2 * f):
            raise ValueError("need an entry for every subset pair")
        for v in self.entries.values():
            if v.is_zero():
                raise ValueError("ratio-law matrices have nonzero entries")

    def __getitem__(self, pair):
        J, Jp = pair
        return self.entries[(frozenset(J), frozenset(Jp))]

    def __eq__(self, other):
        return (isinstance(other, RatioMatrix) and self.f == other.f
                and self.entries == other.entries)

    def quantities(self):
        f = self.f
        empty = frozenset()
        vals = {}
        for J in all_subsets(f):
            Jc = complement(J, f)
            vals[J] = self[J, empty] / (self[Jc, empty] * self[J, Jc])
        return SubsetIndexed(f, vals)

    def ratio_law_ok(self):
        # quadratic reformulation of the quadruple law: exhaustive over
        # quadruples is 16^f, this is 4^f against a fixed row/column
        subsets = all_subsets(self.f)
        J0 = subsets[0]
        for J in subsets:
            for Jp in subsets:
                if (self[J, Jp] * self[J0, J0]
                        != self[J, J0] * self[J0, Jp]):
                    return False
        return True

    def conjugated(self, t):
        """Conjugation by the diagonal matrix with entries t_J."""
        out = {}
        for (J, Jp), v in self.entries.items():
            out[(J, Jp)] = t[J] * v * t[Jp].inverse()
        return RatioMatrix(self.f, out)

    def canonical(self):
        """The diagonal-conjugate with left column 1 away from the
        empty row (whose corner entry is already an invariant)."""
        empty = frozenset()
        field = self[empty, empty].field
        t = {J: (field.one if J == empty
                 else self[J, empty].inverse())
             for J in all_subsets(self.f)}
        return self.conjugated(t)

    def is_diagonal_conjugate(self, other):
        return (self.f == other.f
                and self.canonical().entries == other.canonical().entries)


def reconstruct_matrix(quantities, f):
    """The canonical ratio-law matrix with the given invariants.

    Left column is 1 away from the empty row; the corner entry comes
    from the full-set invariant and the rest follow from the ratio law.
    """
    empty, full = frozenset(), frozenset(range(f))
    q = {J: quantities[J] for J in all_subsets(f)}
    for v in q.values():
        if v.is_zero():
            raise ValueError("invariants must be nonzero")
    field = q[full].field
    col0 = {J: (q[full].inverse() if J == empty else field.one)
            for J in all_subsets(f)}
    entries = {}
    for J in all_subsets(f):
        entries[(J, empty)] = col0[J]
        for Jp in all_subsets(f):
            if Jp:
                entries[(J, Jp)] = (col0[J]
                                    / (q[complement(Jp, f)] * col0[Jp]))
    return RatioMatrix(f, entries)


# ---------------------------------------------------------------------
#  The mu, nu, gamma families
# ---------------------------------------------------------------------

def _validate_parameters(r, xi_root, d):
    field = xi_root.field
    p, f = field.p, len(r)
    if len(d) != f:
        raise ValueError("r and d must have the same length")
    if xi_root.is_zero():
        raise ValueError("the root of xi must be a unit")
    if not any(r):
        raise ValueError("some r_j must be nonzero")
    for rj in r:
        if not 0 <= rj <= p - 3:
            raise ValueError("r_j out of range [0, p-3]")
    return field, p, f


def mu_base_ratio(J, r, xi_root, d):
    """mu_{J,0} / mu_{J^c,0}: the factorial product formula, with one
    unit d_j for every boundary index of J."""
    field, p, f = _validate_parameters(r, xi_root, d)
    J = frozenset(J)
    num, den = field.one, field.one
    for j in range(f):
        a, b = j in J, (j + 1) % f in J
        if a and b:
            num = num * sign_power(field, r[j] + 1) * factorial_unit(field, r[j])
        elif not a and b:
            num = num * (sign_power(field, r[j])
                         * factorial_unit(field, r[j] + 1) * d[j])
        elif not a and not b:
            den = den * sign_power(field, r[j] + 1) * factorial_unit(field, r[j])
        else:
            den = den * (sign_power(field, r[j])
                         * factorial_unit(field, r[j] + 1) * d[j])
    Jc = complement(J, f)
    return -(xi_root ** (len(Jc) - len(J))) * num / den


def mu_cross(J, r, field):
    """mu_{J,J^c} for J != empty: a signed inverse product of weight
    factorials."""
    p, f = field.p, len(r)
    J = frozenset(J)
    if not J:
        raise ValueError("the cross value needs a nonempty subset")
    s, _ = s_r_vectors(J, r, p)
    _, rc = s_r_vectors(complement(J, f), r, p)
    den = field.one
    for sj in s:
        den = den * factorial_unit(field, sj)
    return sign_power(field, sum(rc) + f) / den


def mu_family(r, xi_root, d):
    """The full mu matrix, assembled rank-one from its determined data:
    the base ratios pin the rows pairwise, the cross values and the
    diagonal corner value xi^{-1} pin the columns."""
    field, p, f = _validate_parameters(r, xi_root, d)
    for dj in d:
        if dj.is_zero():
            raise ValueError("d_j must be units")
    full = frozenset(range(f))
    subsets = all_subsets(f)
    row = {}
    for J in subsets:
        if J in row:
            continue
        Jc = complement(J, f)
        row[J] = mu_base_ratio(J, r, xi_root, d)
        row[Jc] = field.one
    col = {}
    for Jp in subsets:
        if Jp == full:
            col[Jp] = (xi_root ** f).inverse() / row[full]
        else:
            Jpc = complement(Jp, f)
            col[Jp] = mu_cross(Jpc, r, field) / row[Jpc]
    return RatioMatrix(f, {(J, Jp): row[J] * col[Jp]
                           for J in subsets for Jp in subsets})


def nu_family(xi_root, d):
    """nu_{J,J'} = root^{|J^c|-|J|} prod_{j not in J'} d_j
    / prod_{j+1 not in J} d_j, as a ratio-law matrix."""
    field = xi_root.field
    f = len(d)
    for dj in d:
        if dj.is_zero():
            raise ValueError("d_j must be units")
    subsets = all_subsets(f)
    entries = {}
    for J in subsets:
        rowv = xi_root ** (f - 2 * len(J))
        for j in range(f):
            if (j + 1) % f not in J:
                rowv = rowv / d[j]
        for Jp in subsets:
            v = rowv
            for j in range(f):
                if j not in Jp:
                    v = v * d[j]
            entries[(J, Jp)] = v
    return RatioMatrix(f, entries)


def gamma_family(mu):
    """gamma_{J,J'} = (-1)^{f-1} eps_{J'} mu_{J,J'}."""
    f = mu.f
    field = mu[frozenset(), frozenset()].field
    sf = sign_power(field, f - 1)
    entries = {}
    for (J, Jp), v in mu.entries.items():
        entries[(J, Jp)] = sf * field(epsilon(Jp, f)) * v
    return RatioMatrix(f, entries)


def boundary_ratio(J, xi_root, d):
    """root^{|J^c|-|J|} prod_{j not in J, j+1 in J} d_j
    / prod_{j in J, j+1 not in J} d_j: the common value both families'
    invariants must equal."""
    field = xi_root.field
    f = len(d)
    J = frozenset(J)
    out = xi_root ** (f - 2 * len(J))
    for j in range(f):
        a, b = j in J, (j + 1) % f in J
        if not a and b:
            out = out * d[j]
        elif a and not b:
            out = out / d[j]
    return out


def constants_match(r, xi_root, d):
    """The matching identity: for every J the gamma invariant, its
    explicit sign-times-mu form, the nu invariant, and the boundary
    ratio of the parameters all agree."""
    field, p, f = _validate_parameters(r, xi_root, d)
    mu = mu_family(r, xi_root, d)
    qg = gamma_family(mu).quantities()
    qn = nu_family(xi_root, d).quantities()
    empty = frozenset()
    for J in all_subsets(f):
        Jc = complement(J, f)
        mid = (sign_power(field, f - 1) * field(epsilon(Jc, f))
               * mu[J, empty] / (mu[Jc, empty] * mu[J, Jc]))
        rhs = boundary_ratio(J, xi_root, d)
        if not qg[J] == mid == rhs == qn[J]:
            return False
    return True


# ---------------------------------------------------------------------
#  Fontaine-Laffaille data
# ---------------------------------------------------------------------

class FLModule:
    """Rank-2 filtered module data, one 2x2 block per embedding.

    Per component j the filtration jumps at r_j + 1 on the line spanned
    by the first basis vector, and the divided Frobenius sends the
    (j+1)-st pair to the j-th pair by a lower-triangular matrix in
    the root of xi and d_{j+1}.
    """

    def __init__(self, r, xi_root, d):
        self.field, self.p, self.f = _validate_parameters(r, xi_root, d)
        self.r = tuple(r)
        self.xi_root = xi_root
        self.xi = xi_root ** self.f
        self.d = tuple(d)
        self.split = all(dj.is_zero() for dj in d)

    def filtration_jump(self, j):
        return self.r[j % self.f] + 1

    def phi_matrix(self, j):
        """Columns are the images of the (j+1)-component basis pair in
        the j-component basis."""
        inv = self.xi_root.inverse()
        dj1 = self.d[(j + 1) % self.f]
        return ((inv, self.field.zero),
                (-inv * dj1, self.xi_root))


def fontaine_laffaille(r, xi_root, d):
    """Build the filtered-module record for the given parameters.

    Zero d is allowed (the module splits as two characters); the
    constants machinery itself insists on unit d_j.
    """
    return FLModule(r, xi_root, d)


# ---------------------------------------------------------------------
#  Parameter sampling
# ---------------------------------------------------------------------

def generic_r_window(p, f):
    """Inclusive bounds for the weights in the generic regime."""
    lo = max(12, 2 * f + 1)
    hi = p - max(15, 2 * f + 3)
    if lo > hi:
        raise ValueError(f"no generic weights at p = {p}, f = {f}")
    return lo, hi


def sample_parameters(p, f, rng):
    """One deterministic draw (r, xi_root, d) in the generic window,
    over GF(p^f).  The root is drawn first, so xi := root^f always has
    an f-th root in the field."""
    field = FiniteField(p, f)
    lo, hi = generic_r_window(p, f)
    r = tuple(rng.randint(lo, hi) for _ in range(f))
    units = [x for x in field.elements() if not x.is_zero()]
    xi_root = units[rng.randrange(len(units))]
    d = tuple(units[rng.randrange(len(units))] for _ in range(f))
    return r, xi_root, d
