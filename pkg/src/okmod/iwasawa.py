"""The completed group algebra of O_K and its localized completion.

Multiplicative coordinates: t_i = delta([b_i]) - 1 for the fixed F_p-basis
b_i = g^i of F_q (g the field generator), so that delta_x for
x = sum c_i [b_i] is the product of (1+t_i)^{c_i} with c_i in Z_p.  The
Y-variables are the eigenvectors of the Teichmueller action,

    Y_j = sum_{a in F_q^x} a^{-p^j} delta_[a],

and F[[O_K]] = F[[Y_0, ..., Y_{f-1}]].  A second representation models
the completion A of the localization at Y_0...Y_{f-1}: exponent vectors
in Z^f with coefficients in F, truncated at a total-degree cutoff N
(x known up to O(F_{-N})); phi multiplies total degree by p and x lies
in F_n A iff every stored monomial has total degree >= -n.

Powers with Z_p or (1-phi)/(1-q)-type exponents are taken digitwise,
using the characteristic-p identity u^(p^j c) = (u^(p^j))^c with u^(p^j)
a coefficientwise Frobenius rescaling.
"""

from __future__ import annotations

import threading
from fractions import Fraction

from .arith import (
    DigitProfile,
    FiniteField,
    ZqRing,
    val_p,
    zp_valuation_check,
)
from .lubin_tate import c_a


# ----------------------------------------------------------------------
# coordinates of O_K in the Teichmueller basis
# ----------------------------------------------------------------------

def teich_basis(ring):
    """Teichmueller lifts of the basis 1, g, ..., g^{f-1} of the residue field."""
    F = ring.residue_field
    if ring.degree == 1:
        return [ring.one]
    return [ring.teichmuller(F.gen ** i) for i in range(ring.degree)]


def teich_coordinates(x):
    """Write x = sum c_i [b_i] with c_i in Z/p^M; returns the list of c_i."""
    ring = x.ring
    p, f, M = ring.p, ring.degree, ring.M
    basis = [list(b.coeffs) for b in teich_basis(ring)]
    cur = [c % ring.pM for c in x.coeffs]
    coords = [0] * f
    for k in range(M):
        digits = [(c // p ** k) % p for c in cur]
        # residue of cur/p^k has basis coordinates = its coefficient word
        for i in range(f):
            d = digits[i]
            if d:
                coords[i] += d * p ** k
                for t in range(f):
                    cur[t] = (cur[t] - d * p ** k * basis[i][t]) % ring.pM
    return coords


def _zp_digits(c, K, p):
    """First K base-p digits of the p-adic integer c (int or Fraction
    with denominator prime to p)."""
    c = Fraction(c)
    if c.denominator % p == 0:
        raise ValueError("exponent is not a p-adic integer")
    digits = []
    for _ in range(K):
        d = (c.numerator * pow(c.denominator, -1, p)) % p
        digits.append(d)
        c = (c - d) / p
    return digits


# ----------------------------------------------------------------------
# the group algebra in t-coordinates
# ----------------------------------------------------------------------

class GroupAlgebraElement:
    """Truncated power series in t_0..t_{f-1} over F, total degree < N."""

    __slots__ = ("field", "f", "coeffs", "N")

    def __init__(self, field, f, coeffs, N):
        self.field = field
        self.f = f
        self.N = N
        self.coeffs = {e: v for e, v in coeffs.items()
                       if sum(e) < N and not v.is_zero()}

    @classmethod
    def constant(cls, field, f, c, N):
        return cls(field, f, {(0,) * f: field(c)}, N)

    @classmethod
    def variable(cls, field, f, i, N):
        e = [0] * f
        e[i] = 1
        return cls(field, f, {tuple(e): field.one}, N)

    def __add__(self, other):
        out = dict(self.coeffs)
        for e, v in other.coeffs.items():
            s = out.get(e, self.field.zero) + v
            if s.is_zero():
                out.pop(e, None)
            else:
                out[e] = s
        return GroupAlgebraElement(self.field, self.f, out,
                                   min(self.N, other.N))

    def __neg__(self):
        return GroupAlgebraElement(self.field, self.f,
                                   {e: -v for e, v in self.coeffs.items()},
                                   self.N)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        N = min(self.N, other.N)
        out = {}
        for e1, v1 in self.coeffs.items():
            d1 = sum(e1)
            for e2, v2 in other.coeffs.items():
                if d1 + sum(e2) >= N:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, self.field.zero) + v1 * v2
                if s.is_zero():
                    out.pop(e, None)
                else:
                    out[e] = s
        return GroupAlgebraElement(self.field, self.f, out, N)

    def scale(self, c):
        c = self.field(c) if not hasattr(c, "field") else c
        return GroupAlgebraElement(self.field, self.f,
                                   {e: v * c for e, v in self.coeffs.items()},
                                   self.N)

    def __pow__(self, e):
        if e < 0:
            raise ValueError("negative powers: use unit_pow_zp")
        out = GroupAlgebraElement.constant(self.field, self.f, 1, self.N)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def frobenius_power(self, j):
        """The p^j-th power: coefficients to the p^j, exponents times p^j."""
        s = self.field.p ** j
        return GroupAlgebraElement(
            self.field, self.f,
            {tuple(s * x for x in e): v.frobenius(j)
             for e, v in self.coeffs.items()}, self.N)

    def constant_term(self):
        return self.coeffs.get((0,) * self.f, self.field.zero)

    def min_total_degree(self):
        """Smallest total degree of a stored monomial (None if zero)."""
        return min((sum(e) for e in self.coeffs), default=None)

    def truncate(self, k):
        """Reduce modulo the k-th power of the maximal ideal."""
        return GroupAlgebraElement(self.field, self.f, self.coeffs,
                                   min(self.N, k))

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, GroupAlgebraElement):
            return NotImplemented
        return self.coeffs == other.coeffs and self.N == other.N

    def __repr__(self):
        return (f"GroupAlgebraElement(f={self.f}, N={self.N}, "
                f"{len(self.coeffs)} terms)")


def unit_pow_zp(u, c):
    """u^c for a 1-unit u of the group algebra and c in Z_p (int/Fraction)."""
    field = u.field
    p = field.p
    if u.constant_term() != field.one:
        raise ValueError("Z_p powers need constant term 1")
    K = 0
    while p ** K < u.N:
        K += 1
    K += 1
    one = GroupAlgebraElement.constant(field, u.f, 1, u.N)
    z = u - one
    out = one
    for j, d in enumerate(_zp_digits(c, K, p)):
        if d:
            out = out * (one + z.frobenius_power(j)) ** d
    return out


def delta(x, N):
    """delta_x as a group-algebra element mod total degree N.

    x is a ZqRing element whose precision must satisfy p^M >= N.
    """
    ring = x.ring
    if ring.pM < N:
        raise ValueError(f"need coordinate precision p^M >= {N}")
    field = FiniteField(ring.p, ring.degree)
    f = ring.degree
    one = GroupAlgebraElement.constant(field, f, 1, N)
    out = one
    for i, c in enumerate(teich_coordinates(x)):
        if c % ring.pM:
            t = GroupAlgebraElement.variable(field, f, i, N)
            out = out * unit_pow_zp(one + t, c)
    return out


def _coord_ring(p, f, N):
    M = 1
    while p ** M < N:
        M += 1
    return ZqRing(p, f, M)


def y_variable(j, p, f, N):
    """Y_j = sum_{a in F_q^x} a^{-p^j} delta_[a], mod total degree N."""
    field = FiniteField(p, f)
    ring = _coord_ring(p, f, N)
    out = GroupAlgebraElement(field, f, {}, N)
    for x in field.elements():
        if x.is_zero():
            continue
        out = out + delta(ring.teichmuller(x), N).scale(x ** (-(p ** j)))
    return out


def moment_sum(i, p, f, N):
    """sum_{lam in F_q} lam^i delta_[lam] with the convention 0^0 = 1."""
    field = FiniteField(p, f)
    ring = _coord_ring(p, f, N)
    out = GroupAlgebraElement(field, f, {}, N)
    if i == 0:
        out = out + GroupAlgebraElement.constant(field, f, 1, N)  # lam = 0
    for x in field.elements():
        if x.is_zero():
            continue
        out = out + delta(ring.teichmuller(x), N).scale(x ** i)
    return out


def _substitute(x, images, one):
    """Evaluate the t-polynomial x on the given variable images."""
    out = None
    pows = [{} for _ in range(x.f)]

    def power(i, e):
        if e == 0:
            return one
        hit = pows[i].get(e)
        if hit is None:
            hit = images[i] ** e
            pows[i][e] = hit
        return hit

    for e, v in x.coeffs.items():
        term = one.scale(v)
        for i, ei in enumerate(e):
            if ei:
                term = term * power(i, ei)
        out = term if out is None else out + term
    if out is None:
        return one.scale(one.field.zero)
    return out


def unit_action_group(a, x):
    """The algebra automorphism delta_z -> delta_{az} applied to x."""
    ring = a.ring
    N = x.N
    if ring.pM < N:
        raise ValueError(f"need coordinate precision p^M >= {N}")
    one = GroupAlgebraElement.constant(x.field, x.f, 1, N)
    images = [delta(a * b, N) - one for b in teich_basis(ring)]
    return _substitute(x, images, one)


def phi_group(x, p=None):
    """The Frobenius delta_z -> delta_{pz} applied to x."""
    p = x.field.p
    ring = _coord_ring(p, x.f, x.N)
    one = GroupAlgebraElement.constant(x.field, x.f, 1, x.N)
    images = [delta(ring(p) * b, x.N) - one for b in teich_basis(ring)]
    return _substitute(x, images, one)


# ----------------------------------------------------------------------
# the change of variables t -> Y
# ----------------------------------------------------------------------

_t_in_y_cache = {}


def _t_in_y(p, f, N):
    """The inverse change of variables: each t_i as a series in Y_0..Y_{f-1}.

    Returned as GroupAlgebraElements whose variables are read as the Y's.
    """
    key = (p, f, N)
    hit = _t_in_y_cache.get(key)
    if hit is not None:
        return hit
    field = FiniteField(p, f)
    ys = [y_variable(j, p, f, N) for j in range(f)]
    # linear part L[j][i] = coefficient of t_i in Y_j
    unit_vecs = []
    for i in range(f):
        e = [0] * f
        e[i] = 1
        unit_vecs.append(tuple(e))
    L = [[ys[j].coeffs.get(unit_vecs[i], field.zero) for i in range(f)]
         for j in range(f)]
    Linv = _invert_matrix(L, field)
    one = GroupAlgebraElement.constant(field, f, 1, N)
    highers = []
    for j in range(f):
        h = dict(ys[j].coeffs)
        for i in range(f):
            h.pop(unit_vecs[i], None)
        h.pop((0,) * f, None)
        highers.append(GroupAlgebraElement(field, f, h, N))
    # start with the linear inversion and refine: t = Linv (Y - H(t))
    t_expr = [GroupAlgebraElement(
        field, f, {unit_vecs[j]: Linv[i][j] for j in range(f)}, N)
        for i in range(f)]
    for _ in range(N):
        hy = [_substitute(highers[j], t_expr, one) for j in range(f)]
        new = []
        for i in range(f):
            acc = GroupAlgebraElement(field, f, {}, N)
            for j in range(f):
                yj = GroupAlgebraElement(field, f, {unit_vecs[j]: field.one}, N)
                acc = acc + (yj - hy[j]).scale(Linv[i][j])
            new.append(acc)
        if all((a - b).is_zero() for a, b in zip(new, t_expr)):
            break
        t_expr = new
    _t_in_y_cache[key] = t_expr
    return t_expr


def _invert_matrix(L, field):
    f = len(L)
    aug = [[L[r][c] for c in range(f)]
           + [field.one if r == c else field.zero for c in range(f)]
           for r in range(f)]
    for col in range(f):
        piv = next((r for r in range(col, f) if not aug[r][col].is_zero()),
                   None)
        if piv is None:
            raise ArithmeticError("linear part of the Y-variables is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [v * inv for v in aug[col]]
        for r in range(f):
            if r != col and not aug[r][col].is_zero():
                c = aug[r][col]
                aug[r] = [a - c * b for a, b in zip(aug[r], aug[col])]
    return [row[f:] for row in aug]


def y_coordinates(x):
    """Rewrite a group-algebra element as a series in Y_0..Y_{f-1}."""
    field = x.field
    t_expr = _t_in_y(field.p, x.f, x.N)
    one = GroupAlgebraElement.constant(field, x.f, 1, x.N)
    return _substitute(x, t_expr, one)


# ----------------------------------------------------------------------
# the localized completed ring A
# ----------------------------------------------------------------------

def _nmin(*vals):
    known = [v for v in vals if v is not None]
    return min(known) if known else None


class ARingElement:
    """Finite sum of monomials Y^e, e in Z^f, known up to O(F_{-N}).

    Monomials of total degree >= N are dropped; N = None marks an exact
    element (no truncation).  x lies in F_n A exactly when every stored
    total degree is >= -n.
    """

    __slots__ = ("field", "f", "coeffs", "N")

    def __init__(self, field, f, coeffs, N):
        self.field = field
        self.f = f
        self.N = N
        self.coeffs = {e: v for e, v in coeffs.items()
                       if (N is None or sum(e) < N) and not v.is_zero()}

    @classmethod
    def monomial(cls, field, f, e, c=None, N=None):
        return cls(field, f, {tuple(e): field.one if c is None else field(c)},
                   N)

    @classmethod
    def one(cls, field, f, N):
        return cls.monomial(field, f, (0,) * f, None, N)

    @classmethod
    def from_group_algebra(cls, x):
        """Reinterpret a series in the Y-variables as an element of A."""
        return cls(x.field, x.f, x.coeffs, x.N)

    def __add__(self, other):
        out = dict(self.coeffs)
        for e, v in other.coeffs.items():
            s = out.get(e, self.field.zero) + v
            if s.is_zero():
                out.pop(e, None)
            else:
                out[e] = s
        return ARingElement(self.field, self.f, out, _nmin(self.N, other.N))

    def __neg__(self):
        return ARingElement(self.field, self.f,
                            {e: -v for e, v in self.coeffs.items()}, self.N)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        # a zero with cutoff N still hides terms of degree >= N, so it
        # bounds the product error just like a lowest stored degree would
        lo1 = self.min_total_degree()
        lo2 = other.min_total_degree()
        elo1 = lo1 if lo1 is not None else self.N
        elo2 = lo2 if lo2 is not None else other.N
        N = _nmin(None if self.N is None or elo2 is None
                  else self.N + elo2,
                  None if other.N is None or elo1 is None
                  else other.N + elo1)
        out = {}
        for e1, v1 in self.coeffs.items():
            d1 = sum(e1)
            for e2, v2 in other.coeffs.items():
                if N is not None and d1 + sum(e2) >= N:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, self.field.zero) + v1 * v2
                if s.is_zero():
                    out.pop(e, None)
                else:
                    out[e] = s
        return ARingElement(self.field, self.f, out, N)

    def scale(self, c):
        c = self.field(c) if not hasattr(c, "field") else c
        return ARingElement(self.field, self.f,
                            {e: v * c for e, v in self.coeffs.items()}, self.N)

    def min_total_degree(self):
        return min((sum(e) for e in self.coeffs), default=None)

    def in_filtration(self, n):
        """Membership in F_n A (total degree >= -n throughout)."""
        lo = self.min_total_degree()
        return lo is None or lo >= -n

    def dominant_monomial(self):
        """The unique monomial of minimal total degree; error if tied."""
        lo = self.min_total_degree()
        if lo is None:
            raise ArithmeticError("zero element has no dominant monomial")
        mons = [e for e in self.coeffs if sum(e) == lo]
        if len(mons) != 1:
            raise ArithmeticError("no dominant monomial (tied minimal degree)")
        return mons[0]

    def inverse(self):
        """Inverse of an element with a dominant monomial, by Newton."""
        e0 = self.dominant_monomial()
        c0 = self.coeffs[e0]
        lead_inv = ARingElement.monomial(
            self.field, self.f, tuple(-x for x in e0), c0.inverse(),
            None if self.N is None else self.N - 2 * sum(e0))
        if len(self.coeffs) == 1:
            return lead_inv
        u = self * lead_inv  # 1 + strictly positive total degrees
        if u.N is None:
            raise ArithmeticError("exact inverse of a non-monomial")
        one = ARingElement.one(self.field, self.f, u.N)
        inv = one
        known = 1
        while known < u.N:
            known = min(2 * known, u.N)
            inv = inv + inv * (one - u * inv)
        return lead_inv * inv

    def __pow__(self, e):
        if e < 0:
            return self.inverse() ** (-e)
        out = ARingElement.one(self.field, self.f, self.N)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def frobenius_power(self, j):
        """The p^j-th power (Frobenius rescaling in characteristic p)."""
        s = self.field.p ** j
        return ARingElement(self.field, self.f,
                            {tuple(s * x for x in e): v.frobenius(j)
                             for e, v in self.coeffs.items()},
                            None if self.N is None
                            else self.N * s if self.N > 0 else self.N)

    def truncate(self, N):
        return ARingElement(self.field, self.f, self.coeffs,
                            _nmin(self.N, N))

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        if not isinstance(other, ARingElement):
            return NotImplemented
        return self.coeffs == other.coeffs and self.N == other.N

    def __repr__(self):
        return (f"ARingElement(f={self.f}, N={self.N}, "
                f"{len(self.coeffs)} terms)")


def phi_A(x):
    """phi(Y_j) = Y_{j-1}^p on exponent vectors; the cutoff scales by p."""
    p = x.field.p
    out = {}
    for e, v in x.coeffs.items():
        ne = [0] * x.f
        for j, ej in enumerate(e):
            ne[(j - 1) % x.f] += p * ej
        ne = tuple(ne)
        s = out.get(ne, x.field.zero) + v
        if s.is_zero():
            out.pop(ne, None)
        else:
            out[ne] = s
    return ARingElement(x.field, x.f, out,
                        None if x.N is None else p * x.N)


def phi_q_A(x):
    """phi_q = phi^f: every exponent vector scales by q."""
    q = x.field.order
    return ARingElement(x.field, x.f,
                        {tuple(q * a for a in e): v
                         for e, v in x.coeffs.items()},
                        None if x.N is None else q * x.N)


def a_unit_pow_zp(u, c):
    """u^c for u in 1 + (positive degrees) of A and c in Z_p."""
    field = u.field
    p = field.p
    if u.N is None:
        raise ValueError("Z_p powers need a finite cutoff")
    one = ARingElement.one(field, u.f, u.N)
    z = u - one
    lo = z.min_total_degree()
    if not z.is_zero() and (lo is None or lo <= 0):
        raise ValueError("Z_p powers need a 1-unit")
    K = 0
    gap = max(lo or 1, 1)
    while gap * p ** K < u.N:
        K += 1
    K += 1
    out = one
    for j, d in enumerate(_zp_digits(c, K, p)):
        if d:
            out = out * (one + z.frobenius_power(j).truncate(u.N)) ** d
    return out.truncate(u.N)


def phi_twisted_power(u, h, q):
    """u^{h(1-phi)/(1-q)} for a 1-unit u of A."""
    c = Fraction(h, 1 - q)
    return (a_unit_pow_zp(u, c)
            * a_unit_pow_zp(phi_A(u).truncate(u.N), -c)).truncate(u.N)


# ----------------------------------------------------------------------
# the unit action on A and the one-unit ratios f_{a, sigma_j}
# ----------------------------------------------------------------------

_action_cache = {}
_action_lock = threading.Lock()


def _y_images(a, N):
    """a(Y_j) as elements of A (computed in t-coordinates, then converted),
    together with their inverses; memoized."""
    key = (id(a.ring), a.coeffs)
    with _action_lock:
        hit = _action_cache.get(key)
    if hit is not None and hit[0] >= N:
        return hit[1]
    ring = a.ring
    p, f = ring.p, ring.degree
    images = []
    inverses = []
    for j in range(f):
        yj = y_variable(j, p, f, N)
        ayj = ARingElement.from_group_algebra(
            y_coordinates(unit_action_group(a, yj)))
        images.append(ayj)
        inverses.append(ayj.inverse())
    out = (images, inverses)
    with _action_lock:
        _action_cache[key] = (N, out)
    return out


def fa_sigma_pow_zp(a, j, c, N):
    """f_{a,sigma_j}^c mod degree N for c in Z_p (int or Fraction).

    A p-divisible exponent c = p^v c' only needs f_{a,sigma_j} at the
    cutoff ceil(N / p^v): the p^v-th power is a Frobenius rescaling.
    """
    p = a.ring.p
    field = FiniteField(p, a.ring.degree)
    c = Fraction(c)
    if c == 0:
        return ARingElement.one(field, a.ring.degree, N)
    v = val_p(c, p)
    if v <= 0:
        return a_unit_pow_zp(f_a_sigma(a, j, N), c)
    sub = -(-N // p ** v)
    u = f_a_sigma(a, j, max(sub, 2))
    return a_unit_pow_zp(u.frobenius_power(v).truncate(N), c / p ** v)


def unit_action_A(a, x, N=None):
    """The unit action on A: a(Y^e) = abar^{sum e_j p^j} Y^e
    prod_j f_{a,sigma_j}^{-e_j}, with each unit power taken only to the
    degree the monomial in front still requires."""
    N = _nmin(x.N, N)
    if N is None:
        raise ValueError("exact input needs an explicit cutoff N")
    p, f = a.ring.p, a.ring.degree
    q = a.ring.q
    field = FiniteField(p, f)
    abar = a.residue()
    out = ARingElement(field, f, {}, N)
    for e, v in x.coeffs.items():
        d = sum(e)
        if d >= N:
            continue
        Nu = N - d
        unit = ARingElement.one(field, f, Nu)
        for j, ej in enumerate(e):
            if ej:
                unit = unit * fa_sigma_pow_zp(a, j, -ej, Nu)
        tw = abar ** (sum(ej * p ** j for j, ej in enumerate(e)) % (q - 1))
        out = out + ARingElement.monomial(field, f, e, v) * unit.scale(tw)
    return out.truncate(N)


def f_a_sigma(a, j, N):
    """f_{a, sigma_j} = abar^{p^j} Y_j / a(Y_j) as a 1-unit of A.

    Accurate mod total degree N: the inversion is run with slack so the
    Newton step's precision loss stays above the requested cutoff.
    """
    _, inverses = _y_images(a, N + 2)
    field = FiniteField(a.ring.p, a.ring.degree)
    abar = a.residue()
    e = [0] * a.ring.degree
    e[j] = 1
    mono = ARingElement.monomial(field, a.ring.degree, tuple(e),
                                 abar ** (field.p ** j))
    return (mono * inverses[j]).truncate(N)


def lemma_fa_A_check_Y(a, j, N=None):
    """Check f_{a,sigma_j}^{-1} - 1 - c_a^{p^j} Y_j^{phi-1}
    + c_a^{p^{j-1}} Y_j^{phi-1} Y_{j-1}^{phi-1}  lies in F_{3-3p}A."""
    ring = a.ring
    p, f = ring.p, ring.degree
    if N is None:
        N = 3 * (p - 1) + 1
    field = FiniteField(p, f)
    finv = f_a_sigma(a, j, N).inverse()
    ca = c_a(a)

    def y_phi_minus_1(i):
        # Y_i^{phi-1} = Y_{i-1}^p Y_i^{-1}
        e = [0] * f
        e[(i - 1) % f] += p
        e[i % f] -= 1
        return ARingElement.monomial(field, f, tuple(e), None, N)

    r = finv - ARingElement.one(field, f, N)
    r = r - y_phi_minus_1(j).scale(ca ** (p ** j))
    r = r + (y_phi_minus_1(j) * y_phi_minus_1((j - 1) % f)).scale(
        ca ** (p ** ((j - 1) % f)))
    return r.in_filtration(3 - 3 * p)


# ----------------------------------------------------------------------
# fixed points and extension tuples over A (Y-variables)
# ----------------------------------------------------------------------

def _twist_monomial(h, field, f, N):
    """Y_0^{h(1-phi)} = Y_0^h Y_{f-1}^{-ph}."""
    e = [0] * f
    e[0] += h
    e[(f - 1) % f] -= field.p * h
    return ARingElement.monomial(field, f, tuple(e), None, N)


def twisted_operator_A(lam, h, x):
    """lam * Y_0^{h(1-phi)} phi_q(x)."""
    m = _twist_monomial(h, x.field, x.f, x.N)
    return (m.scale(lam) * phi_q_A(x)).truncate(x.N)


def solve_fixed_point_A(lam, h, y, N):
    """Unique x in F_{1-p}A with (id - lam Y_0^{h(1-phi)} phi_q)(x) = y."""
    h = getattr(h, "h", h)
    p = y.field.p
    if not y.in_filtration(1 - p):
        raise ValueError("right-hand side outside F_{1-p}A")
    x = ARingElement(y.field, y.f, {}, N)
    term = y.truncate(N)
    guard = 0
    while not term.is_zero():
        x = x + term
        term = twisted_operator_A(lam, h, term).truncate(N)
        guard += 1
        if guard > 4 * N + 8:
            raise RuntimeError("fixed-point iteration failed to contract")
    return x


def one_minus_fa_action_A(a, h, x, N):
    """(id - f_{a,0}^{h(1-phi)/(1-q)} a)(x), truncated at the cutoff N.

    Computed monomial by monomial: with phi(f_{a,sigma_0}) equal to
    f_{a,sigma_{f-1}}^p, the twist and the action combine into

        c Y^e (1 - abar^{sum e_j p^j} prod_j f_{a,sigma_j}^{c_j}),

    c_0 = h/(1-q) - e_0, c_{f-1} -= p h/(1-q), c_j = -e_j otherwise.
    The huge principal exponents cancel inside the single subtraction,
    and their high p-divisibility keeps every unit power cheap.
    """
    p, f = a.ring.p, a.ring.degree
    q = a.ring.q
    field = FiniteField(p, f)
    abar = a.residue()
    ch = Fraction(h, 1 - q)
    out = ARingElement(field, f, {}, N)
    for e, v in x.coeffs.items():
        d = sum(e)
        if d >= N:
            continue
        Nu = N - d
        cexp = [Fraction(-ej) for ej in e]
        cexp[0] += ch
        cexp[(f - 1) % f] -= p * ch
        unit = ARingElement.one(field, f, Nu)
        for j in range(f):
            unit = unit * fa_sigma_pow_zp(a, j, cexp[j], Nu)
        tw = abar ** (sum(ej * p ** j for j, ej in enumerate(e)) % (q - 1))
        z = ARingElement.one(field, f, Nu) - unit.scale(tw)
        out = out + ARingElement.monomial(field, f, e, v) * z
    return out.truncate(N)


class ExtTupleA:
    """Extension tuple (D, a |-> E_a) over A in the Y-variables."""

    def __init__(self, field, p, f, h, lam0, lam1, D, e_builder, N):
        self.field = field
        self.p = p
        self.f = f
        self.q = p ** f
        self.h = h
        self.lam0 = field(lam0) if not hasattr(lam0, "field") else lam0
        self.lam1 = field(lam1) if not hasattr(lam1, "field") else lam1
        self.ratio = self.lam0 / self.lam1
        self.D = D
        self.N = N
        self._e_builder = e_builder
        self._memo = {}
        self._lock = threading.Lock()

    def E(self, a):
        key = a.coeffs
        with self._lock:
            hit = self._memo.get(key)
        if hit is not None:
            return hit
        val = self._e_builder(a)
        with self._lock:
            self._memo[key] = val
        return val

    def compat_residual(self, a):
        e = self.E(a)
        lhs = (e - twisted_operator_A(self.ratio, self.h, e)).truncate(self.N)
        rhs = one_minus_fa_action_A(a, self.h, self.D, self.N)
        return (lhs - rhs).truncate(self.N)

    def cocycle_residual(self, a, b):
        eab = self.E(a * b)
        ea = self.E(a)
        eb = self.E(b)
        fpow = phi_twisted_power(f_a_sigma(a, 0, self.N), self.h, self.q)
        r = eab - ea - fpow * unit_action_A(a, eb)
        return r.truncate(self.N)


def _y_one_minus_phi(base_index, e, field, f):
    """Y_i^{e(1-phi)} as an exact monomial of A."""
    vec = [0] * f
    vec[base_index % f] += e
    vec[(base_index - 1) % f] -= field.p * e
    return ARingElement.monomial(field, f, tuple(vec))


def build_wy(kind, j, h, lam0, lam1, p, f, N=None):
    """The distinguished tuples over A: kinds "index", "index2", "trace",
    "unramified" (index2 is the second family D'_j)."""
    q = p ** f
    field = FiniteField(p, f)
    lam0 = field(lam0) if not hasattr(lam0, "field") else lam0
    lam1 = field(lam1) if not hasattr(lam1, "field") else lam1
    ratio = lam0 / lam1
    if N is None:
        N = 3 * (p - 1) + 1
    hp = DigitProfile(h, p, f)

    def zero_tuple():
        return ExtTupleA(field, p, f, h, lam0, lam1,
                         ARingElement(field, f, {}, N),
                         lambda a: ARingElement(field, f, {}, N), N)

    if kind == "unramified":
        if not (h == 0 and ratio == field.one):
            return zero_tuple()
        return ExtTupleA(field, p, f, h, lam0, lam1,
                         ARingElement.one(field, f, N),
                         lambda a: ARingElement(field, f, {}, N), N)

    if kind == "trace":
        if not (h == (q - 1) // (p - 1) and ratio == field.one):
            return zero_tuple()
        D = ARingElement(field, f, {}, None)
        for i in range(f):
            D = D + (_y_one_minus_phi(0, int(hp.partial(i)), field, f)
                     * _y_one_minus_phi(1, p ** i, field, f))

        def e_tr(a, _D=D):
            ca = c_a(a)
            y = one_minus_fa_action_A(a, h, _D, N)
            corr = (ARingElement.one(field, f, N)
                    - _twist_monomial(h, field, f, N)).scale(ca)
            x = solve_fixed_point_A(field.one, h, (y - corr).truncate(N), N)
            return (ARingElement.one(field, f, N).scale(ca) + x).truncate(N)

        return ExtTupleA(field, p, f, h, lam0, lam1, D, e_tr, N)

    if kind == "index2":
        D = (_y_one_minus_phi(0, int(hp.partial(j - 1)) - p ** j, field, f)
             * _y_one_minus_phi(1, p ** j, field, f))
    elif kind == "index":
        if hp.digit(j) != 0:
            D = _y_one_minus_phi(0, int(hp.partial(j - 1)), field, f)
        else:
            r = 0
            while hp.digit(j + 1 + r) == 1:
                r += 1
            D = _y_one_minus_phi(
                0, int(hp.partial(j + r)) + p ** (j + r + 1), field, f)
            cr = field(hp.digit(j + r + 1) - 1)
            for i in range(r + 1):
                D = D + (_y_one_minus_phi(0, int(hp.partial(j + i)),
                                          field, f)
                         * _y_one_minus_phi(1, p ** (j + i), field, f)
                         ).scale(cr)
    else:
        raise ValueError(f"unknown kind {kind!r}")

    def e_j(a, _D=D):
        y = one_minus_fa_action_A(a, h, _D, N)
        return solve_fixed_point_A(ratio, h, y, N)

    return ExtTupleA(field, p, f, h, lam0, lam1, D, e_j, N)


# ----------------------------------------------------------------------
# the X-to-Y comparison exponents
# ----------------------------------------------------------------------

def xy_exponent_check(h, j, p, f):
    """The comparison exponent [h]_{j-1} + h/(q-1) must have p-adic
    valuation >= j (this is what makes the change of basis converge)."""
    hp = DigitProfile(h, p, f)
    q = p ** f
    return zp_valuation_check(hp.partial(j - 1) + Fraction(h, q - 1), j, p)


def xy_bookkeeping_check(h, j, p, f):
    """Given a unit in 1 + F_{1-p}A raised to a p^j Z_p exponent, the
    twist by Y_0^{[h]_{j-1}(1-phi)} must land back in F_{1-p}A; this is
    the exact integer inequality [h]_{j-1} < p^j behind that step."""
    hp = DigitProfile(h, p, f)
    return (hp.digit(j) != 0 and
            int(hp.partial(j - 1)) * (p - 1) + (1 - p) * p ** j <= 1 - p)
