"""Normed monomial model of the perfected Laurent ring with error balls.

Elements are finite sums of monomials prod_i T_i^{e_i} with exponents in
Z[1/p], a coefficient in F_q per monomial, plus one worst-case error ball:
an unknown additive term of norm <= p^{-r}.  The norm is multiplicative on
monomials, |T_i| = p^{-p^i}, and every operation propagates the ball radius
conservatively (closed balls, exact rational exponents).

The three distinguished elements X_0, X_1^{1-phi} and u T_0^{-1} are not
axiomatised: they are re-derived from the length-3 Witt-vector identity
relating the Teichmueller branches of the T_i to the X-branch, in a
two-pass refinement (the first pass treats the small Witt digits as bare
balls, the second feeds the refined X_0 back in).  Each classical radius
statement about them is then certified by monomial subtraction, and the
certificates ship with the cached expansions.
"""

from __future__ import annotations

import threading
from fractions import Fraction

from .arith import FiniteField
from .lt_ext import fa_power
from .witt import WittVector


class PerfectoidDepthError(ArithmeticError):
    """Exponent denominators would exceed the allowed p-power depth."""

    def __init__(self, required_depth):
        self.required_depth = required_depth
        super().__init__(
            f"exponent depth cap exceeded: need denominators up to "
            f"{required_depth}")


def _fr(x):
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


def _p_power_denominator(e, p):
    """Check that e's denominator is a power of p; return it."""
    d = e.denominator
    dd = d
    while dd % p == 0:
        dd //= p
    if dd != 1:
        raise ValueError(f"exponent denominator {d} is not a power of {p}")
    return d


class NormedElement:
    """Finitely many fractional-exponent monomials plus one error ball.

    coeffs maps exponent tuples (length f, Fractions) to nonzero field
    elements; radius is a Fraction r (unknown additive term of norm
    <= p^{-r}) or None for "no error term".
    """

    __slots__ = ("field", "f", "coeffs", "radius")

    def __init__(self, field, f, coeffs, radius=None):
        self.field = field
        self.f = f
        clean = {}
        for e, c in coeffs.items():
            if not c.is_zero():
                clean[tuple(_fr(x) for x in e)] = c
        self.coeffs = clean
        self.radius = None if radius is None else _fr(radius)

    # -- constructors --------------------------------------------------

    @classmethod
    def monomial(cls, field, f, exps, coeff=None, radius=None):
        if coeff is None:
            coeff = field.one
        return cls(field, f, {tuple(exps): coeff}, radius)

    @classmethod
    def one(cls, field, f):
        return cls.monomial(field, f, (0,) * f)

    @classmethod
    def zero(cls, field, f):
        return cls(field, f, {})

    @classmethod
    def ball(cls, field, f, r):
        return cls(field, f, {}, r)

    # -- norms ---------------------------------------------------------

    def _nex(self, e):
        p = self.field.p
        return sum(ei * p ** i for i, ei in enumerate(e))

    def monomial_exponent(self):
        """min_e sum e_i p^i over the monomials; None if there are none."""
        if not self.coeffs:
            return None
        return min(self._nex(e) for e in self.coeffs)

    def norm_exponent(self):
        """-log_p of the norm (monomials and ball); None means norm 0."""
        m = self.monomial_exponent()
        if m is None:
            return self.radius
        if self.radius is None:
            return m
        return min(m, self.radius)

    def is_zero(self):
        return not self.coeffs and self.radius is None

    def is_ball_only(self):
        return not self.coeffs

    # -- ring operations -----------------------------------------------

    def _check(self, other):
        if not isinstance(other, NormedElement):
            raise TypeError("NormedElement expected")
        if other.field is not self.field or other.f != self.f:
            raise ValueError("mixed coefficient fields")

    @staticmethod
    def _rmin(*vals):
        vals = [v for v in vals if v is not None]
        return min(vals) if vals else None

    def __add__(self, other):
        if isinstance(other, int):
            other = NormedElement.monomial(
                self.field, self.f, (0,) * self.f, self.field(other))
        self._check(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            s = out.get(e)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(e, None)
            else:
                out[e] = s
        return NormedElement(self.field, self.f, out,
                             self._rmin(self.radius, other.radius))

    __radd__ = __add__

    def __neg__(self):
        return NormedElement(self.field, self.f,
                             {e: -c for e, c in self.coeffs.items()},
                             self.radius)

    def __sub__(self, other):
        if isinstance(other, int):
            other = NormedElement.monomial(
                self.field, self.f, (0,) * self.f, self.field(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        if isinstance(c, int):
            c = self.field(c)
        if c.is_zero():
            return NormedElement(self.field, self.f, {}, self.radius)
        return NormedElement(self.field, self.f,
                             {e: c * v for e, v in self.coeffs.items()},
                             self.radius)

    def __rmul__(self, c):
        if isinstance(c, int):
            return self.scale(c)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        self._check(other)
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                c = c1 * c2
                s = out.get(e)
                s = c if s is None else s + c
                if s.is_zero():
                    out.pop(e, None)
                else:
                    out[e] = s
        # |x*y| <= |x||y|: the ball of one factor rides on the full norm
        # of the other, and the two balls multiply
        cands = []
        m1, m2 = self.monomial_exponent(), other.monomial_exponent()
        if self.radius is not None and m2 is not None:
            cands.append(self.radius + m2)
        if other.radius is not None and m1 is not None:
            cands.append(other.radius + m1)
        if self.radius is not None and other.radius is not None:
            cands.append(self.radius + other.radius)
        return NormedElement(self.field, self.f, out, self._rmin(*cands))

    def __pow__(self, e):
        if not isinstance(e, int) or e < 0:
            raise ValueError("integer power >= 0 expected; use unit_pow")
        out = NormedElement.one(self.field, self.f)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    # -- truncation ----------------------------------------------------

    def truncate(self, r):
        """Fold every monomial of norm <= p^{-r} into the error ball."""
        r = _fr(r)
        keep, folded = {}, False
        for e, c in self.coeffs.items():
            if self._nex(e) >= r:
                folded = True
            else:
                keep[e] = c
        rad = self.radius
        if folded:
            rad = self._rmin(rad, r)
        return NormedElement(self.field, self.f, keep, rad)

    # -- Frobenius-type maps -------------------------------------------

    def frobenius(self):
        """The coefficient-fixing substitution T_i -> T_{i+1}, T_{f-1} ->
        T_0^q; multiplies the norm exponent (and ball radius) by p."""
        f = self.f
        q = self.field.p ** f
        out = {}
        for e, c in self.coeffs.items():
            ne = [Fraction(0)] * f
            for i in range(f - 1):
                ne[i + 1] = e[i]
            ne[0] += q * e[f - 1]
            out[tuple(ne)] = c
        rad = None if self.radius is None else self.radius * self.field.p
        return NormedElement(self.field, self.f, out, rad)

    def frobenius_inverse(self, max_depth=None):
        f = self.f
        p = self.field.p
        q = p ** f
        if max_depth is None:
            max_depth = p ** 3
        out = {}
        for e, c in self.coeffs.items():
            ne = [Fraction(0)] * f
            for i in range(1, f):
                ne[i - 1] = e[i]
            ne[f - 1] += e[0] / q
            d = _p_power_denominator(ne[f - 1], p)
            if d > max_depth:
                raise PerfectoidDepthError(d)
            out[tuple(ne)] = c
        rad = None if self.radius is None else self.radius / p
        return NormedElement(self.field, self.f, out, rad)

    def phi_q(self):
        """frobenius composed f times: every exponent scales by q."""
        q = self.field.p ** self.f
        out = {tuple(q * x for x in e): c for e, c in self.coeffs.items()}
        rad = None if self.radius is None else self.radius * q
        return NormedElement(self.field, self.f, out, rad)

    def pth_power(self, j=1):
        """The ring's p^j-power map: exact, coefficients included."""
        p = self.field.p
        s = p ** j
        out = {tuple(s * x for x in e): c ** s for e, c in self.coeffs.items()}
        rad = None if self.radius is None else self.radius * s
        return NormedElement(self.field, self.f, out, rad)

    def pth_root(self, j=1, max_depth=None):
        p = self.field.p
        if max_depth is None:
            max_depth = p ** 3
        s = p ** j
        out = {}
        for e, c in self.coeffs.items():
            ne = tuple(x / s for x in e)
            for x in ne:
                d = _p_power_denominator(x, p)
                if d > max_depth:
                    raise PerfectoidDepthError(d)
            r = c
            for _ in range(j):
                r = r.pth_root()
            out[ne] = r
        rad = None if self.radius is None else self.radius / s
        return NormedElement(self.field, self.f, out, rad)

    # -- misc ----------------------------------------------------------

    def support(self):
        return sorted(self.coeffs, key=self._nex)

    def __eq__(self, other):
        if not isinstance(other, NormedElement):
            return NotImplemented
        return (self.field is other.field and self.coeffs == other.coeffs
                and self.radius == other.radius)

    def __repr__(self):
        parts = [f"T^{list(e)}*{c!r}" for e, c in list(self.coeffs.items())[:4]]
        if len(self.coeffs) > 4:
            parts.append(f"...({len(self.coeffs)} monomials)")
        if self.radius is not None:
            parts.append(f"ball({self.radius})")
        return "NormedElement(" + " + ".join(parts or ["0"]) + ")"


def norm(x):
    """The norm exponent r with |x| = p^{-r} (None for |x| = 0)."""
    return x.norm_exponent()


def in_ball(x, r, strict=True):
    """Whether x lies in the (strict) ball of radius exponent r.

    With closed stored radii a strict claim needs every monomial strictly
    below and the ball radius strictly below; equality on the stored
    radius is rejected for strict=True except when there is no ball.
    """
    r = _fr(r)
    m = x.monomial_exponent()
    if m is not None and (m < r or (strict and m == r)):
        return False
    if x.radius is not None and (x.radius < r or (strict and x.radius == r)):
        return False
    return True


# ---------------------------------------------------------------------
#  Z_p-powers of 1-units
# ---------------------------------------------------------------------

def _binom_mod_p(field, alpha, k):
    """C(alpha, k) mod p for a p-integral rational alpha."""
    p = field.p
    num = Fraction(1)
    for i in range(k):
        num *= (alpha - i)
    num /= Fraction(1)
    for i in range(2, k + 1):
        num /= i
    den = num.denominator
    if den % p == 0:
        raise ValueError("binomial coefficient is not p-integral")
    return field(num.numerator % p) * field(den % p).inverse()


def zp_power(z, alpha, target):
    """(1+z)^alpha for |z| < 1 and alpha in Z_p (a p-free-denominator
    rational), as monomials plus a tail ball at the requested radius.

    p-divisible exponents are pulled through the exact identity
    (1+z)^{p^j a} = (1+z^{p^j})^a before the binomial series.
    """
    field, f = z.field, z.f
    p = field.p
    alpha = _fr(alpha)
    target = _fr(target)
    if alpha.denominator % p == 0:
        raise ValueError("exponent is not a p-adic integer")
    if alpha == 0:
        return NormedElement.one(field, f)
    s = z.norm_exponent()
    if s is None:
        return NormedElement.one(field, f)
    if s <= 0:
        raise ValueError("unit part must have norm < 1")
    v = 0
    while alpha.numerator % p ** (v + 1) == 0:
        v += 1
    if v:
        z = z.pth_power(v)
        alpha /= p ** v
        s *= p ** v
    out = NormedElement.one(field, f)
    zk = NormedElement.one(field, f)
    k = 0
    while (k + 1) * s <= target:
        k += 1
        zk = (zk * z).truncate(target)
        c = _binom_mod_p(field, alpha, k)
        if not c.is_zero():
            out = out + zk.scale(c)
    tail = (k + 1) * s
    return out + NormedElement.ball(field, f, min(tail, target))


def unit_split(x):
    """Write x = c T^e (1 + z) with a strictly dominant monomial."""
    if not x.coeffs:
        raise ValueError("no dominant monomial")
    items = sorted(x.coeffs.items(), key=lambda t: x._nex(t[0]))
    e, c = items[0]
    lead = x._nex(e)
    if len(items) > 1 and x._nex(items[1][0]) == lead:
        raise ValueError("tied minimal-norm monomials")
    if x.radius is not None and x.radius <= lead:
        raise ValueError("error ball as large as the dominant monomial")
    inv = NormedElement.monomial(x.field, x.f, tuple(-t for t in e),
                                 c.inverse())
    z = inv * x - 1
    return e, c, z


def unit_pow(x, alpha, target, max_depth=None):
    """x^alpha for a unit x and alpha in Z_p; result known to `target`."""
    alpha = _fr(alpha)
    p = x.field.p
    if max_depth is None:
        max_depth = p ** 3
    e, c, z = unit_split(x)
    ne = tuple(alpha * t for t in e)
    for t in ne:
        d = _p_power_denominator(t, p)
        if d > max_depth:
            raise PerfectoidDepthError(d)
    if alpha.denominator == 1:
        cc = c ** int(alpha)
    elif c == x.field.one:
        cc = c
    else:
        raise ValueError("fractional power of a non-trivial leading "
                         "coefficient")
    lead = NormedElement.monomial(x.field, x.f, ne, cc)
    rel = _fr(target) - sum(ne[i] * p ** i for i in range(x.f))
    return lead * zp_power(z, alpha, rel)


def unit_inverse(x, target):
    return unit_pow(x, -1, target)


# ---------------------------------------------------------------------
#  Witt-bridge derivation of the distinguished expansions
# ---------------------------------------------------------------------

class _Capped:
    """Ring adapter truncating after every operation (for Witt entries)."""

    __slots__ = ("x", "cap")

    def __init__(self, x, cap):
        self.x = x
        self.cap = cap

    def _w(self, other):
        return other.x if isinstance(other, _Capped) else other

    def __add__(self, other):
        return _Capped((self.x + self._w(other)).truncate(self.cap), self.cap)

    __radd__ = __add__

    def __neg__(self):
        return _Capped(-self.x, self.cap)

    def __sub__(self, other):
        return _Capped((self.x - self._w(other)).truncate(self.cap), self.cap)

    def __mul__(self, other):
        return _Capped((self.x * self._w(other)).truncate(self.cap), self.cap)

    def __rmul__(self, c):
        return _Capped((c * self.x).truncate(self.cap), self.cap)

    def __pow__(self, e):
        out = _Capped(NormedElement.one(self.x.field, self.x.f), self.cap)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out


def _stated_forms(field, f):
    """The classical monomial skeletons of the three expansions."""
    p = field.p
    q = p ** f
    c = Fraction(q - 1)
    one = field.one

    def mono(**at):
        e = [Fraction(0)] * f
        for k, v in at.items():
            e[int(k[1:])] += v
        return tuple(e)

    tvec = tuple(Fraction(1) for _ in range(f))
    forms = {}
    # X_0 refined: T_0...T_{f-1} (1 + T_0^{q-1} sum_{i>=1} T_i^{-(1-1/q)})
    x0 = {tvec: one}
    for i in range(1, f):
        e = list(tvec)
        e[0] += c
        e[i] -= 1 - Fraction(1, q)
        x0[tuple(e)] = one
    forms["x0_refined"] = (x0, Fraction(2) * c)
    forms["x0_coarse"] = ({tvec: one}, c)
    forms["x0_tight"] = ({tvec: one},
                         sum(Fraction(p) ** i for i in range(f))
                         + c * (p - 1) / p)
    # X_1^{1/p}: T-vec (sum_i T_i^{-(1-1/q)} - T_0^{(q-1)/p} sum_{i>=1}
    # T_i^{-(1-1/q)/p})
    x1r = {}
    for i in range(f):
        e = list(tvec)
        e[i] -= 1 - Fraction(1, q)
        x1r[tuple(e)] = one
    for i in range(1, f):
        e = list(tvec)
        e[0] += c / p
        e[i] -= (1 - Fraction(1, q)) / p
        x1r[tuple(e)] = -one
    S = sum(Fraction(p) ** i for i in range(f))
    forms["x1_root"] = (x1r, S + c * (2 * p - 2) / p ** 2)
    # X_0^{1-phi}: T_0^{-(q-1)} + sum_{i>=1} T_i^{-(1-1/q)}
    xr = {mono(e0=-c): one}
    for i in range(1, f):
        xr[mono(**{f"e{i}": -(1 - Fraction(1, q))})] = one
    # the honest ball here is (q-1)(p-1)/p: the refinement drops a term
    # -T_0^{(q-1)/p} sum_{i>=1} T_i^{-(1-1/q)/p} whose Frobenius image
    # sits exactly at that radius; multiplying by T_0^{q-1} in the
    # normalised-unit step shifts it to the classical (q-1)(2p-1)/p
    forms["x0_ratio"] = (xr, c * (p - 1) / p)
    # X_1^{1-phi}: sum_i T_i^{-p(1-1/q)} - T_0^{q-1} sum_{i>=1}
    # T_i^{-(1-1/q)}
    x1p = {}
    for i in range(f):
        x1p[mono(**{f"e{i}": -p * (1 - Fraction(1, q))})] = one
    for i in range(1, f):
        e = [Fraction(0)] * f
        e[0] += c
        e[i] -= 1 - Fraction(1, q)
        x1p[tuple(e)] = -one
    forms["x1_ratio"] = (x1p, c * (2 * p - 2) / p)
    # u T_0^{-1}: 1 + T_0^{q-1} sum_{i>=1} T_i^{-(1-1/q)}
    ut = {(Fraction(0),) * f: one}
    for i in range(1, f):
        e = [Fraction(0)] * f
        e[0] += c
        e[i] -= 1 - Fraction(1, q)
        ut[tuple(e)] = one
    forms["u_t0_inv"] = (ut, c * (2 * p - 1) / p)
    forms["u_t0_inv_simple"] = ({(Fraction(0),) * f: one}, c * (p - 1) / p)
    return forms


def _matches(x, stated, bound):
    """Whether x agrees with the stated monomials to the stated radius."""
    diff = x - NormedElement(x.field, x.f, stated)
    ne = diff.norm_exponent()
    return ne is None or ne >= bound


_bundle_cache = {}
_bundle_lock = threading.Lock()


def _expansion_bundle(p, f):
    with _bundle_lock:
        got = _bundle_cache.get((p, f))
    if got is not None:
        return got
    if p < 3:
        raise ValueError("odd p >= 3 required")
    field = FiniteField(p, f)
    q = p ** f
    c = Fraction(q - 1)
    one = NormedElement.one(field, f)
    depth = p ** (f + 3)

    def mono(exps, coeff=None, radius=None):
        return NormedElement.monomial(field, f, exps, coeff, radius)

    def teich_branch(length, cap):
        # component n of the i-th factor is (T_i^{q^{-n}})^{p^n}
        cone = _Capped(one, cap)
        factors = []
        for i in range(f):
            entries = []
            for n in range(length):
                e = [Fraction(0)] * f
                e[i] = Fraction(p, q) ** n
                entries.append(_Capped(mono(e), cap))
            factors.append(WittVector(entries, p, cone))
        wt = factors[0]
        for v in factors[1:]:
            wt = wt * v
        return wt, cone

    tvec = tuple(Fraction(1) for _ in range(f))
    certs = {}
    certs["digit_gap"] = c > sum(Fraction(p) ** i for i in range(f))

    # pass 0 seed, then refinement passes through the Witt identity until
    # the certified ball stops improving; the floor is the digit error
    # |x_1| < p^{-c}, entering the length-2 coordinates as a ball p*c
    cap2 = p * c + q
    wt2, cone2 = teich_branch(2, cap2)
    t0 = wt2.entries[0].x
    x0 = mono(tvec, radius=c)
    x1root = None
    prev = None
    for _ in range(12):
        if prev is not None and x0.radius is not None and x0.radius <= prev:
            break
        prev = x0.radius
        e0 = t0 - x0
        digits = WittVector(
            [_Capped(e0, cap2),
             _Capped(NormedElement.ball(field, f, p * c), cap2)],
            p, cone2)
        u = wt2 - digits
        # the X-branch Witt coordinates are (X_0, X_1, X_{2 mod f}, ...)
        u1 = u.entries[1].x
        x1root = u1.pth_root(1, max_depth=depth)
        x0 = x1root.frobenius()

    forms = _stated_forms(field, f)
    for key, src in (("x0_coarse", x0), ("x0_refined", x0),
                     ("x0_tight", x0), ("x1_root", x1root)):
        stated, bound = forms[key]
        certs[key] = _matches(src, stated, bound)

    # the two Frobenius ratios and the normalised unit: X_i^{1-phi} =
    # (X_1^{1/p} / X_0)^{p resp. phi}, u T_0^{-1} = (X_0^{1-phi}
    # T_0^{q-1})^{1/(1-q)}
    work = 2 * c
    ratio_root = (x1root * unit_inverse(x0, work + c)).truncate(work)
    x0_ratio = ratio_root.frobenius().truncate(work)
    x1_ratio = ratio_root.pth_power().truncate(work)
    e = [Fraction(0)] * f
    e[0] = c
    ut = unit_pow(x0_ratio * mono(e), Fraction(1, 1 - q), work,
                  max_depth=depth).truncate(work)
    for key, src in (("x0_ratio", x0_ratio), ("x1_ratio", x1_ratio),
                     ("u_t0_inv", ut), ("u_t0_inv_simple", ut)):
        stated, bound = forms[key]
        certs[key] = _matches(src, stated, bound)

    # component-2 consistency: the X-branch slot 2 carries X_{2 mod f},
    # which for f <= 2 is X_0 again; run one length-3 subtraction at a
    # modest cap and compare to the refined X_0 within the shared budget
    if f <= 2:
        cap3 = 2 * c + q
        wt3, cone3 = teich_branch(3, cap3)
        e0 = wt3.entries[0].x - x0.truncate(cap3)
        digits3 = WittVector(
            [_Capped(e0, cap3),
             _Capped(NormedElement.ball(field, f, p * c), cap3),
             _Capped(NormedElement.ball(field, f, p * p * c), cap3)],
            p, cone3)
        u2 = (wt3 - digits3).entries[2].x
        budget = NormedElement._rmin(u2.radius, x0.radius, 2 * c)
        ne = (u2 - x0).norm_exponent()
        certs["witt_component_2"] = ne is None or ne >= budget
    else:
        certs["witt_component_2"] = None

    bundle = {
        "p": p, "f": f, "field": field,
        "x0_coarse": mono(tvec, radius=c),
        "x0": x0.truncate(2 * c + Fraction(1, p)),
        "x1_root": x1root,
        "x0_ratio": x0_ratio,
        "x1_ratio": x1_ratio,
        "u_t0_inv": ut,
        "certificates": certs,
    }
    with _bundle_lock:
        _bundle_cache[(p, f)] = bundle
    return bundle


def expansion_certificates(p, f):
    """The named radius certificates backing x_expansions."""
    return dict(_expansion_bundle(p, f)["certificates"])


def x_expansions(p, f, tier="fine"):
    """The certified expansions of X_0, X_1^{1-phi} and u T_0^{-1}.

    tier "coarse" keeps only the leading monomial of each with the weaker
    classical ball; "fine" returns the refined monomials.  Construction
    fails loudly if any radius certificate does not come out true.
    """
    bundle = _expansion_bundle(p, f)
    bad = [k for k, v in bundle["certificates"].items() if v is False]
    if bad:
        raise ArithmeticError(f"radius certification failed: {bad}")
    if tier == "fine":
        return {"x0": bundle["x0"], "x1_ratio": bundle["x1_ratio"],
                "u_t0_inv": bundle["u_t0_inv"]}
    if tier == "coarse":
        c = Fraction(p ** f - 1)
        coarse_bound = c * (p - 1) / p
        return {
            "x0": bundle["x0_coarse"],
            "x1_ratio": bundle["x1_ratio"].truncate(coarse_bound),
            "u_t0_inv": bundle["u_t0_inv"].truncate(coarse_bound),
        }
    raise ValueError(f"unknown tier {tier!r}")


# ---------------------------------------------------------------------
#  The (O_K^x)^f-action
# ---------------------------------------------------------------------

def is_product_one(tup):
    prod = None
    for a in tup:
        prod = a if prod is None else prod * a
    return (prod - prod.ring.one).is_zero()


def ok_tuple_action(tup, x, target, max_depth=None):
    """Apply (a_0, ..., a_{f-1}) by T_i -> a_i(T_i), fractional exponents
    via p-th roots of the one-variable series; the norm is preserved."""
    field, f = x.field, x.f
    p = field.p
    if max_depth is None:
        max_depth = p ** 3
    if len(tup) != f:
        raise ValueError(f"need an action tuple of length {f}")
    for a in tup:
        if a.ring.residue_field is not field:
            raise ValueError("coefficient field mismatch")
    target = _fr(target)
    out = NormedElement.zero(field, f)
    for e, cf in x.coeffs.items():
        nex_e = sum(e[i] * p ** i for i in range(f))
        term = NormedElement.monomial(field, f, e)
        coeff = cf
        for i in range(f):
            if e[i] == 0:
                continue
            den = _p_power_denominator(e[i], p)
            if den > max_depth:
                raise PerfectoidDepthError(den)
            k = 0
            while p ** k < den:
                k += 1
            m = int(e[i] * den)
            abar = tup[i].residue()
            cfac = abar ** m
            for _ in range(k):
                cfac = cfac.pth_root()
            coeff = coeff * cfac
            # a(T^{m/p^k}) = abar^{m/p^k} T^{m/p^k} (f_a^{-m})^{1/p^k}
            rel = target - nex_e
            if rel <= 0:
                continue
            prec = int(-(-(rel * den) // p ** i))
            fa = fa_power(tup[i], -m, max(prec, 1))
            conv = {}
            for d, v in fa.coeffs.items():
                ee = [Fraction(0)] * f
                ee[i] = Fraction(d, den)
                r = v
                for _ in range(k):
                    r = r.pth_root()
                conv[tuple(ee)] = r
            term = term * NormedElement(
                field, f, conv, Fraction(fa.prec, den) * p ** i)
        out = out + term.scale(coeff)
    rad = NormedElement._rmin(x.radius, target)
    out = out.truncate(target)
    return NormedElement(field, f, out.coeffs,
                         NormedElement._rmin(out.radius, rad))


def fa_lt_element(a, e, f, target, var=0):
    """(f_a^{LT})^e as a NormedElement supported on variable `var`."""
    field = a.ring.residue_field
    p = field.p
    prec = int(-(-_fr(target) // p ** var)) + 1
    fa = fa_power(a, e, prec)
    coeffs = {}
    for d, v in fa.coeffs.items():
        ee = [Fraction(0)] * f
        ee[var] = Fraction(d)
        coeffs[tuple(ee)] = v
    return NormedElement(field, f, coeffs, Fraction(prec) * p ** var)


# ---------------------------------------------------------------------
#  Fixed points and the operator identities
# ---------------------------------------------------------------------

def twisted_operator_ainfty(ratio, h, x):
    """x -> ratio T_0^{-(q-1)h} phi_q(x)."""
    q = x.field.p ** x.f
    e = [Fraction(0)] * x.f
    e[0] = Fraction(-(q - 1) * h)
    mono = NormedElement.monomial(x.field, x.f, e, ratio)
    return mono * x.phi_q()


def solve_fixed_point_ainfty(ratio, h, y, target):
    """The unique x with |x| < p^{-h} and x - ratio T_0^{-(q-1)h}
    phi_q(x) = y, summed until the geometric terms drop below `target`."""
    ne = y.norm_exponent()
    if ne is None:
        return y
    if ne <= h:
        raise ValueError("right-hand side is not small enough (need "
                         f"norm < p^-{h})")
    target = _fr(target)
    x = NormedElement.zero(y.field, y.f)
    term = y
    guard = 0
    while True:
        te = term.norm_exponent()
        if te is None or te > target:
            break
        x = x + term.truncate(target)
        term = twisted_operator_ainfty(ratio, h, term)
        guard += 1
        if guard > 10000:
            raise ArithmeticError("fixed-point iteration did not contract")
    return x + NormedElement.ball(y.field, y.f, target)


def operator_identity_check(which, h, x, a=None, tup=None, target=None):
    """Evaluate both sides of an operator identity on x.

    Returns (residual_exponent, budget): the identity holds to precision
    iff the residual is None (exact zero) or >= budget, the smaller of
    the two sides' error radii.
    """
    field, f = x.field, x.f
    p = field.p
    q = p ** f
    c = Fraction(q - 1)
    if target is None:
        target = 3 * c
    target = _fr(target)
    e = [Fraction(0)] * f
    e[0] = Fraction(-(q - 1) * h)
    tw = NormedElement.monomial(field, f, e)

    if which == "iii":
        bundle = _expansion_bundle(p, f)
        b00 = unit_pow(bundle["u_t0_inv"], -h, target)
        x0h = unit_pow(bundle["x0_ratio"], h, target) if h else \
            NormedElement.one(field, f)
        lhs = (tw * (b00 * x).phi_q()).truncate(target)
        rhs = (b00 * x0h * x.phi_q()).truncate(target)
    elif which in ("i", "ii"):
        if which == "i":
            if a is None:
                raise ValueError("a unit is required for identity (i)")
            tup = tuple([a] + [a.ring.one] * (f - 1))
        else:
            if tup is None or not is_product_one(tup):
                raise ValueError("a product-one tuple is required for "
                                 "identity (ii)")
        fah = fa_lt_element(tup[0], h, f, target)
        lhs = (tw * (fah * ok_tuple_action(tup, x, target)).phi_q()
               ).truncate(target)
        rhs = (fah * ok_tuple_action(tup, (tw * x.phi_q()).truncate(target),
                                     target)).truncate(target)
    else:
        raise ValueError(f"unknown identity {which!r}")

    budget = NormedElement._rmin(lhs.radius, rhs.radius)
    resid = (lhs - rhs).norm_exponent()
    return resid, budget


# ---------------------------------------------------------------------
#  Relations of the normalised unit
# ---------------------------------------------------------------------

def u_relations_check(p, f, target=None):
    """Residual exponents of u^{q-1} = X_0^{phi-1} and phi_q(u) = u^q."""
    bundle = _expansion_bundle(p, f)
    field = bundle["field"]
    q = p ** f
    c = Fraction(q - 1)
    if target is None:
        target = 2 * c
    ut = bundle["u_t0_inv"]
    e = [Fraction(0)] * f
    e[0] = Fraction(1)
    t0 = NormedElement.monomial(field, f, e)
    u = ut * t0
    # (u T_0^{-1})^{q-1} = X_0^{phi-1} T_0^{-(q-1)}
    lhs = unit_pow(ut, q - 1, target + c)
    rhs = unit_inverse(bundle["x0_ratio"] * NormedElement.monomial(
        field, f, [c] + [Fraction(0)] * (f - 1)), target + c)
    first = ((lhs - rhs).truncate(target)).norm_exponent()
    lhs2 = u.phi_q().truncate(q * target)
    rhs2 = (u ** q).truncate(q * target)
    second = (lhs2 - rhs2).norm_exponent()
    return {"u_power": first, "u_power_budget": NormedElement._rmin(
                lhs.radius, rhs.radius, _fr(target)),
            "phi_q_u": second, "phi_q_u_budget": NormedElement._rmin(
                lhs2.radius, rhs2.radius)}


def delta1_action_check(tup, target=None):
    """Residual of (a_0,...,a_{f-1})(u T_0^{-1}) = f_{a_0} u T_0^{-1} for
    a product-one tuple; returns (residual_exponent, budget)."""
    if not is_product_one(tup):
        raise ValueError("product-one tuple required")
    ring = tup[0].ring
    field = ring.residue_field
    p, f = field.p, field.degree
    c = Fraction(p ** f - 1)
    if target is None:
        target = 2 * c
    bundle = _expansion_bundle(p, f)
    ut = bundle["u_t0_inv"]
    lhs = ok_tuple_action(tup, ut, target)
    rhs = (fa_lt_element(tup[0], 1, f, target) * ut).truncate(target)
    budget = NormedElement._rmin(lhs.radius, rhs.radius)
    return (lhs - rhs).norm_exponent(), budget


def fa_x_variant_norm_check(a, j):
    """Norm-exponent form of the f_{a,sigma_j} congruence: the residual
    f_{a,sigma_j}^{-1} - 1 - c_a^{p^j} Y_j^{phi-1} + c_a^{p^{j-1}}
    Y_j^{phi-1} Y_{j-1}^{phi-1}, read with |Y_i| = p^{-(1+p+...+p^{f-1})},
    must have norm <= p^{-3(q-1)}.  Returns (norm_exponent, bound)."""
    from .iwasawa import ARingElement, f_a_sigma
    from .lubin_tate import c_a
    ring = a.ring
    p, f = ring.p, ring.degree
    N = 3 * (p - 1) + 1
    field = ring.residue_field
    finv = f_a_sigma(a, j, N).inverse()
    ca = c_a(a)

    def y_phi_minus_1(i):
        e = [0] * f
        e[(i - 1) % f] += p
        e[i % f] -= 1
        return ARingElement.monomial(field, f, tuple(e), None, N)

    r = finv - ARingElement.one(field, f, N)
    r = r - y_phi_minus_1(j).scale(ca ** (p ** j))
    r = r + (y_phi_minus_1(j) * y_phi_minus_1((j - 1) % f)).scale(
        ca ** (p ** ((j - 1) % f)))
    return a_ring_norm_exponent(r), 3 * Fraction(p ** f - 1)


def a_ring_norm_exponent(x):
    """Norm exponent of a Y-monomial series: every variable has norm
    p^{-(1+p+...+p^{f-1})}, so a total degree d monomial sits at d times
    that; the cutoff contributes like a ball."""
    S = sum(Fraction(x.field.p) ** i for i in range(x.f))
    d = x.min_total_degree()
    if d is None:
        return None if x.N is None else S * x.N
    lead = S * d
    if x.N is None:
        return lead
    return min(lead, S * x.N)
