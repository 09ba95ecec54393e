"""Laurent series over F_q with Frobenius and unit actions; extension classes.

The coefficient field is F_q = GF(p^f); series live in F_q((T)) and are
tracked modulo T^N.  phi_q substitutes T -> T^q (F-linearly) and a unit a
of W(F_q) acts by T -> a_LT(T).  On a monomial the action collapses to

    a(T^k) = abar^k T^k f_a^{-k},      f_a := abar*T / a_LT(T),

so everything reduces to powers of the 1-unit series f_a.  Those powers
are taken through the base-p digits of the exponent: f_a^(p^j * e) is the
p^j-fold Frobenius rescaling of f_a^e, which keeps the required expansion
degree of f_a itself small even when the exponent is huge (the large
exponents produced by the class builders are always highly p-divisible).

The extension classes are tuples (D, a |-> E_a) subject to the cocycle
rule E_ab = E_a + f_a^h * a(E_b) and the compatibility rule

    (id - r T^{-(q-1)h} phi_q)(E_a) = (id - f_a^h a)(D),   r = lam0/lam1,

built for the three kinds of distinguished D (index classes, the trace
class, the unramified class).  E_a is recovered from D with the
fixed-point solver and memoized per unit.
"""

from __future__ import annotations

import threading

from .arith import DigitProfile, FiniteField
from .lubin_tate import c_a, fa_lt_inverse


class LaurentSeries:
    """Finite-tailed Laurent series, known modulo T^prec.

    `coeffs` maps degree -> field element; prec is an int, or None for an
    exact (polynomial) element.  Stored degrees >= prec are dropped, zero
    coefficients are stripped.
    """

    __slots__ = ("field", "coeffs", "prec")

    def __init__(self, field, coeffs, prec=None):
        if prec is None:
            cs = {k: v for k, v in coeffs.items() if not v.is_zero()}
        else:
            cs = {k: v for k, v in coeffs.items()
                  if k < prec and not v.is_zero()}
        self.field = field
        self.coeffs = cs
        self.prec = prec

    @classmethod
    def monomial(cls, field, deg, coeff=None, prec=None):
        c = field.one if coeff is None else field(coeff)
        return cls(field, {deg: c}, prec)

    @classmethod
    def zero(cls, field, prec=None):
        return cls(field, {}, prec)

    def coeff(self, k):
        if self.prec is not None and k >= self.prec:
            raise ValueError(f"coefficient of T^{k} not known mod T^{self.prec}")
        return self.coeffs.get(k, self.field.zero)

    def lowdeg(self):
        """Lowest stored degree, or None for the zero series."""
        return min(self.coeffs) if self.coeffs else None

    def support(self):
        return sorted(self.coeffs)

    def is_zero(self):
        return not self.coeffs

    def truncate(self, N):
        return LaurentSeries(self.field, self.coeffs, _pmin(self.prec, N))

    def _merge_prec(self, other):
        return _pmin(self.prec, other.prec)

    def __add__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            s = out.get(k, self.field.zero) + v
            if s.is_zero():
                out.pop(k, None)
            else:
                out[k] = s
        return LaurentSeries(self.field, out, self._merge_prec(other))

    def __neg__(self):
        return LaurentSeries(self.field, {k: -v for k, v in self.coeffs.items()},
                             self.prec)

    def __sub__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        # prec(xy) = min(N_x + lowdeg(y), N_y + lowdeg(x))
        cands = []
        if self.prec is not None:
            lo = other.lowdeg()
            cands.append(self.prec + lo if lo is not None else None)
        if other.prec is not None:
            lo = self.lowdeg()
            cands.append(other.prec + lo if lo is not None else None)
        cands = [c for c in cands if c is not None]
        prec = min(cands) if cands else None
        out = {}
        for k1, v1 in self.coeffs.items():
            for k2, v2 in other.coeffs.items():
                k = k1 + k2
                if prec is not None and k >= prec:
                    continue
                s = out.get(k, self.field.zero) + v1 * v2
                if s.is_zero():
                    out.pop(k, None)
                else:
                    out[k] = s
        return LaurentSeries(self.field, out, prec)

    def scale(self, c):
        c = self.field(c) if not hasattr(c, "field") else c
        if c.is_zero():
            return LaurentSeries(self.field, {}, self.prec)
        return LaurentSeries(self.field, {k: v * c for k, v in self.coeffs.items()},
                             self.prec)

    def __eq__(self, other):
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        return self.coeffs == other.coeffs and self.prec == other.prec

    def __repr__(self):
        sup = self.support()
        head = ", ".join(f"T^{k}" for k in sup[:5])
        return f"LaurentSeries({head}{'...' if len(sup) > 5 else ''}, prec={self.prec})"


def _pmin(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def default_precision(p, f):
    """Working truncation degree: covers every principal part used below."""
    q = p ** f
    return 4 * (q - 1) * p


def phi_q(x):
    """T -> T^q with coefficients fixed; precision scales to q*prec."""
    q = x.field.order
    prec = None if x.prec is None else q * x.prec
    return LaurentSeries(x.field, {q * k: v for k, v in x.coeffs.items()}, prec)


# --- lattice-compressed 1-unit arithmetic (support in (q-1)Z, degrees >= 0)

def _lat_mul(x, y, prec, field):
    out = {}
    for k1, v1 in x.items():
        for k2, v2 in y.items():
            k = k1 + k2
            if k >= prec:
                continue
            s = out.get(k, field.zero) + v1 * v2
            if s.is_zero():
                out.pop(k, None)
            else:
                out[k] = s
    return out


def _lat_trunc(x, prec):
    return {k: v for k, v in x.items() if k < prec}


def _lat_inverse(u, prec, field):
    # Newton iteration for the inverse of a 1-unit series mod T^prec
    if u.get(0) != field.one:
        raise ValueError("series inversion needs constant term 1")
    inv = {0: field.one}
    known = 1
    while known < prec:
        known = min(2 * known, prec)
        t = _lat_mul(u, inv, known, field)
        # inv <- inv*(2 - u*inv)
        two_minus = {k: -v for k, v in t.items() if k}
        two_minus[0] = field.one + field.one - t.get(0, field.zero)
        inv = _lat_mul(inv, two_minus, known, field)
    return inv


def _lat_smallpow(u, e, prec, field):
    out = {0: field.one}
    base = _lat_trunc(u, prec)
    while e:
        if e & 1:
            out = _lat_mul(out, base, prec, field)
        e >>= 1
        if e:
            base = _lat_mul(base, base, prec, field)
    return out


def _lat_frobscale(x, j, p):
    # y(T) = x(T^{p^j}) with coefficients raised to the p^j: the p^j-th
    # power of x when x has F_q coefficients
    s = p ** j
    return {k * s: v.frobenius(j) for k, v in x.items()}


def fa_power(a, e, prec):
    """f_a^e modulo T^prec as a LaurentSeries (support in (q-1)Z, deg >= 0).

    a is a unit of a ZqRing; e any integer.  The exponent is split as
    e = p^v e' and the power computed at degree prec/p^v before Frobenius
    rescaling, so large highly-divisible exponents stay cheap.
    """
    ring = a.ring
    p = ring.p
    field = ring.residue_field
    if prec <= 0:
        return LaurentSeries(field, {}, prec)
    if e == 0:
        return LaurentSeries(field, {0: field.one}, prec)
    v = 0
    ee = abs(e)
    while ee % p == 0:
        ee //= p
        v += 1
    sub_prec = -(-prec // p ** v)  # ceil
    u = fa_lt_inverse(a, sub_prec)  # (f_a)^{-1} mod T^sub_prec
    u = _lat_trunc(u, sub_prec)
    if e > 0:
        base = _lat_inverse(u, sub_prec, field)
    else:
        base = u
    # digits of ee base p, least significant first (digit 0 nonzero)
    out = {0: field.one}
    j = 0
    while ee:
        d = ee % p
        ee //= p
        if d:
            fac_prec = -(-sub_prec // p ** j)
            fac = _lat_smallpow(_lat_trunc(base, fac_prec), d, fac_prec, field)
            fac = _lat_frobscale(fac, j, p)
            out = _lat_mul(out, fac, sub_prec, field)
        j += 1
    out = _lat_frobscale(out, v, p)
    return LaurentSeries(field, _lat_trunc(out, prec), prec)


def unit_action(a, x, N=None):
    """Substitute T -> a_LT(T) into x; precision is preserved.

    a is a unit of a ZqRing whose residue field embeds in x.field.  For an
    exact x (prec None) a target precision N must be supplied, since the
    image of a negative-degree monomial is an infinite series.
    """
    prec = x.prec if x.prec is not None else N
    if prec is None:
        raise ValueError("target precision required for exact input")
    field = x.field
    ring = a.ring
    if ring.residue_field is not field:
        raise ValueError("coefficient field mismatch")
    abar = a.residue()
    out = LaurentSeries.zero(field, prec)
    for k, c in x.coeffs.items():
        # a(T^k) = abar^k T^k f_a^{-k}
        pw = fa_power(a, -k, prec - k)
        term = LaurentSeries(field,
                             {k + d: (c * abar ** k) * v
                              for d, v in pw.coeffs.items()}, prec)
        out = out + term
    return out


def one_minus_fa_action(a, h, x, N):
    """(id - f_a^h a)(x) modulo T^N.

    On a monomial this is T^k(1 - f_a^{h-k}) up to the Teichmueller factor
    abar^k, which keeps all the cancellation between the huge principal
    tails of the individual powers inside one series subtraction.
    """
    field = x.field
    abar = a.residue()
    out = LaurentSeries.zero(field, N)
    for k, c in x.coeffs.items():
        # x - f_a^h a(x) on c*T^k: c T^k (1 - abar^k f_a^{h-k})
        pw = fa_power(a, h - k, N - k)
        piece = {k: c}
        fac = abar ** k
        for d, v in pw.coeffs.items():
            kk = k + d
            if kk >= N:
                continue
            s = piece.get(kk, field.zero) - (c * fac) * v
            if s.is_zero():
                piece.pop(kk, None)
            else:
                piece[kk] = s
        out = out + LaurentSeries(field, piece, N)
    return out


def twisted_operator(lam, h, x):
    """lam * T^{-(q-1)h} phi_q(x), the twist appearing in the fixed point."""
    q = x.field.order
    y = phi_q(x)
    shifted = {k - (q - 1) * h: v * lam for k, v in y.coeffs.items()}
    prec = None if y.prec is None else y.prec - (q - 1) * h
    return LaurentSeries(x.field, shifted, prec)


def in_positive_lattice(x):
    """True iff every known term sits in T^{q-1} F[[T^{q-1}]]."""
    q = x.field.order
    return all(k >= q - 1 and k % (q - 1) == 0 for k in x.coeffs)


def solve_fixed_point_lt(lam, h, y, N):
    """Unique x in T^{q-1}F[[T^{q-1}]] with (id - lam T^{-(q-1)h} phi_q)(x) = y.

    Convergent geometric series in the twist operator; y must lie in
    T^{q-1}F[[T^{q-1}]] and h must satisfy 0 <= h <= q-2.
    """
    h = getattr(h, "h", h)
    q = y.field.order
    if not 0 <= h <= q - 2:
        raise ValueError("need 0 <= h <= q-2")
    if not in_positive_lattice(y):
        raise ValueError("right-hand side outside T^{q-1}F[[T^{q-1}]]")
    x = LaurentSeries.zero(y.field, N)
    term = y.truncate(N)
    guard = 0
    while not term.is_zero():
        x = x + term
        term = twisted_operator(lam, h, term).truncate(N)
        guard += 1
        if guard > 4 * N:
            raise RuntimeError("fixed-point iteration failed to contract")
    return x


def no_solution_detector(h, p, f, m, n, t):
    """Structural no-solution test for the three-block right-hand sides.

    The blocks have top indices m, n (value -1 for an empty block) and t;
    returns True exactly when m, n < t and t is not congruent to h mod q,
    which rules out any Laurent-series solution of the twisted equation.
    """
    h = getattr(h, "h", h)
    for v in (m, n):
        if not isinstance(v, int) or v < -1:
            raise ValueError("block indices must be integers >= -1")
    if not isinstance(t, int) or t < 0:
        raise ValueError("t must be a nonnegative integer")
    q = p ** f
    return m < t and n < t and (t - h) % q != 0


def basis_step_instances(h, p, f, ratio_is_one):
    """The (m, n, t) triples the independence argument feeds the detector.

    Returns a list of (label, h_used, m, n, t) covering every invocation
    for the given digit profile: the zero-digit eliminations (h_used is
    the rotated profile whose vanishing digit sits second from the top),
    the top-digit elimination, the h = 0 eliminations, and the
    trace-class elimination when applicable.
    """
    q = p ** f
    hp = DigitProfile(h, p, f)
    out = []
    if h != 0:
        for j in range(f):
            if hp.digit(j) != 0:
                continue
            # rotate the digits so the vanishing digit sits at position f-2
            rot = (j - (f - 2)) % f
            digits = [hp.digit(i + rot) for i in range(f)]
            hr = sum(d * p ** i for i, d in enumerate(digits))
            hrp = DigitProfile(hr, p, f)
            t = int(hrp.partial(2 * f - 2)) + p ** (f - 1)
            mn = int(hrp.partial(f - 2)) + p ** (f - 1)
            out.append(("zero-digit", hr, mn, mn, t))
        j0 = max(j for j in range(f) if hp.digit(j) != 0)
        out.append(("top-digit", h, -1, -1, int(hp.partial(j0 - 1))))
    elif not ratio_is_one:
        for j0 in range(f):
            out.append(("h-zero", h, -1, -1, p ** j0))
    if h == (q - 1) // (p - 1) and ratio_is_one:
        out.append(("trace", h, -1, -1,
                    int(hp.partial(2 * f - 2)) + p ** (f - 1)))
    return out


class ExtTupleLT:
    """An extension tuple (D, a |-> E_a) with lazy, memoized E.

    lam0, lam1 are the two Frobenius scalars; h the twist exponent; D a
    Laurent series supported in (q-1)Z; e_builder maps a unit to E_a.
    """

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

    def scale(self, c):
        c = self.field(c) if not hasattr(c, "field") else c
        return ExtTupleLT(self.field, self.p, self.f, self.h,
                          self.lam0, self.lam1, self.D.scale(c),
                          lambda a, _s=self, _c=c: _s.E(a).scale(_c), self.N)

    def __neg__(self):
        return self.scale(-self.field.one)

    def compat_residual(self, a):
        """Def. residual (id - r T^{-(q-1)h} phi_q)(E_a) - (id - f_a^h a)(D)."""
        e = self.E(a)
        lhs = e - twisted_operator(self.ratio, self.h, e)
        rhs = one_minus_fa_action(a, self.h, self.D, self.N)
        return (lhs - rhs).truncate(self.N)

    def cocycle_residual(self, a, b):
        """Residual of E_ab = E_a + f_a^h a(E_b) at working precision."""
        eab = self.E(a * b)
        ea = self.E(a)
        eb = self.E(b)
        fh = fa_power(a, self.h, self.N)
        r = eab - ea - fh * unit_action(a, eb)
        return r.truncate(self.N)


def _d_index(j, hp, ratio, field):
    """D for the index class: monomial, or the three-term zero-digit sum."""
    p, f, q = hp.p, hp.f, hp.q
    if hp.digit(j) != 0:
        return LaurentSeries.monomial(field, -(q - 1) * int(hp.partial(j - 1)))
    r = 0
    while hp.digit(j + 1 + r) == 1:
        r += 1
    top = int(hp.partial(f + j + r)) + p ** (f + j + r + 1)
    coeffs = {-(q - 1) * top: ratio}
    cr = field(hp.digit(j + r + 1) - 1)
    for i in range(r + 1):
        s = int(hp.partial(f + j + i)) + p ** (j + i + 1)
        k = -(q - 1) * s
        v = coeffs.get(k, field.zero) + ratio * cr
        if v.is_zero():
            coeffs.pop(k, None)
        else:
            coeffs[k] = v
    return LaurentSeries(field, coeffs)


def build_wlt(kind, j, h, lam0, lam1, p, f, N=None):
    """Construct one of the distinguished extension tuples.

    kind is "index" (needs j), "trace" or "unramified".  The trace kind
    requires h = 1 + p + ... + p^{f-1} and lam0 = lam1, the unramified
    kind h = 0 and lam0 = lam1; outside those ranges the zero tuple is
    returned, matching the convention of the source construction.
    """
    q = p ** f
    field = FiniteField(p, f)
    lam0 = field(lam0) if not hasattr(lam0, "field") else lam0
    lam1 = field(lam1) if not hasattr(lam1, "field") else lam1
    ratio = lam0 / lam1
    if N is None:
        N = default_precision(p, f)
    hp = DigitProfile(h, p, f)

    if kind == "unramified":
        ok = h == 0 and ratio == field.one
        D = (LaurentSeries.monomial(field, 0) if ok
             else LaurentSeries.zero(field))
        return ExtTupleLT(field, p, f, h, lam0, lam1, D,
                          lambda a: LaurentSeries.zero(field, N), N)

    if kind == "trace":
        ok = h == (q - 1) // (p - 1) and ratio == field.one
        if not ok:
            return ExtTupleLT(field, p, f, h, lam0, lam1,
                              LaurentSeries.zero(field),
                              lambda a: LaurentSeries.zero(field, N), N)
        coeffs = {}
        for i in range(f):
            s = int(hp.partial(f + i - 1)) + p ** i
            coeffs[-(q - 1) * s] = coeffs.get(-(q - 1) * s, field.zero) + field.one
        D = LaurentSeries(field, coeffs)
        s0 = (p ** (f - 1) - 1) // (p - 1)  # 1 + p + ... + p^{f-2}

        def e_tr(a, _D=D, _s0=s0):
            ca = c_a(a)
            C = LaurentSeries.monomial(field, -(q - 1) * _s0,
                                       ca ** (p ** (f - 1)))
            y = one_minus_fa_action(a, h, _D, N)
            y = y - (C - twisted_operator(field.one, h, C)).truncate(N)
            return (C + solve_fixed_point_lt(field.one, h, y, N)).truncate(N)

        return ExtTupleLT(field, p, f, h, lam0, lam1, D, e_tr, N)

    if kind != "index":
        raise ValueError(f"unknown kind {kind!r}")
    if not 0 <= j < f:
        raise ValueError("index out of range")
    D = _d_index(j, hp, ratio, field)

    def e_j(a, _D=D):
        y = one_minus_fa_action(a, h, _D, N)
        return solve_fixed_point_lt(ratio, h, y, N)

    return ExtTupleLT(field, p, f, h, lam0, lam1, D, e_j, N)


def congruence_check_lt(case, i, h, a, N=None):
    """Residual of the three one-step congruences, principal part removed.

    case "i":   x = T^{-(q-1)[h]_i}
    case "ii":  x = T^{-(q-1)([h]_i + p^{i+1})}, subtracting
                (h_{i+1}-1) c_a^{p^{i+1}} T^{-(q-1)[h]_i}
    case "iii": x = T^{-(q-1)([h]_i + p^{i+1-f})} (needs h_i = 1, i >= f-1),
                subtracting -c_a^{p^{i+1}} T^{-(q-1)[h]_i}
                            + c_a^{p^i} T^{-(q-1)[h]_{i-1}}
    The caller asserts the returned series lies in T^{q-1}F[[T^{q-1}]].
    """
    ring = a.ring
    p, f = ring.p, ring.degree
    q = ring.q
    field = ring.residue_field
    hp = DigitProfile(h, p, f)
    if N is None:
        N = default_precision(p, f)
    if case == "i":
        s = int(hp.partial(i))
        principal = LaurentSeries.zero(field, N)
    elif case == "ii":
        s = int(hp.partial(i)) + p ** (i + 1)
        ca = c_a(a)
        principal = LaurentSeries.monomial(
            field, -(q - 1) * int(hp.partial(i)),
            field(hp.digit(i + 1) - 1) * ca ** (p ** (i + 1)), N)
    elif case == "iii":
        if hp.digit(i) != 1 or i < f - 1:
            raise ValueError("case iii needs h_i = 1 and i >= f-1")
        s = int(hp.partial(i)) + p ** (i + 1 - f)
        ca = c_a(a)
        principal = (
            LaurentSeries.monomial(field, -(q - 1) * int(hp.partial(i)),
                                   -(ca ** (p ** (i + 1))), N)
            + LaurentSeries.monomial(field, -(q - 1) * int(hp.partial(i - 1)),
                                     ca ** (p ** i), N))
    else:
        raise ValueError(f"unknown case {case!r}")
    x = LaurentSeries.monomial(field, -(q - 1) * s)
    lhs = one_minus_fa_action(a, h, x, N)
    return (lhs - principal).truncate(N)


def find_equivalence_witness(tup1, tup2, units, N=None):
    """Search for b with D2 = D1 + (id - r T^{-(q-1)h} phi_q)(b) and
    E2_a = E1_a + (id - f_a^h a)(b) for the sampled units.

    Returns (b, True) on success, (None, False) when the principal-part
    peeling proves no witness exists at this precision, and (None, None)
    when the search is inconclusive.
    """
    field = tup1.field
    q = tup1.q
    h = tup1.h
    ratio = tup1.ratio
    if N is None:
        N = min(tup1.N, tup2.N)
    delta = (tup2.D - tup1.D).truncate(N)
    b = LaurentSeries.zero(field, N)
    guard = 0
    while True:
        r = (delta - (b - twisted_operator(ratio, h, b))).truncate(N)
        lo = r.lowdeg()
        if lo is None or lo >= q - 1:
            break
        c = r.coeff(lo)
        if lo < h:
            # absorb through the twist: need q | lo + (q-1)h
            num = lo + (q - 1) * h
            if num % q:
                return None, False
            b = b + LaurentSeries.monomial(field, num // q, -(c / ratio), N)
        elif lo > h:
            b = b + LaurentSeries.monomial(field, lo, c, N)
        else:
            if ratio == field.one:
                return None, False
            b = b + LaurentSeries.monomial(field, h, c / (field.one - ratio), N)
        guard += 1
        if guard > 64 * N:
            return None, None
    tail = (delta - (b - twisted_operator(ratio, h, b))).truncate(N)
    if not tail.is_zero():
        if not in_positive_lattice(tail):
            return None, None
        b = b + solve_fixed_point_lt(ratio, h, tail, N)
    # D-equation now holds mod T^N; verify the E-equations on the samples
    for a in units:
        r = (tup2.E(a) - tup1.E(a)
             - one_minus_fa_action(a, h, b, N)).truncate(N)
        if not r.is_zero():
            return None, None
    return b, True
