"""Finite fields, truncated unramified p-adic rings, and digit arithmetic.

Everything downstream sits on the towers built here:

* ``FiniteField(p, n)`` -- GF(p^n) with a reproducible modulus (the
  lexicographically smallest monic irreducible of degree n over F_p).
* ``ZqRing(p, n, M)`` -- W(GF(p^n))/p^M, i.e. the unramified extension of
  Z/p^M cut out by a fixed integer lift of the same modulus, with the
  Frobenius lift and Teichmueller representatives.
* ``DigitProfile`` -- base-p digits h_j of an exponent h, extended
  periodically with period f, and the partial sums [h]_j (exact rationals;
  [h]_{-2} = -h_{f-1}/p).

All exponent arithmetic is exact (``fractions.Fraction``); nothing here is
ever floating point.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache


# ----------------------------------------------------------------------
# dense polynomial helpers over Z/m (coefficient lists, low degree first)
# ----------------------------------------------------------------------

def _poly_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_add(a, b, m):
    n = max(len(a), len(b))
    out = [0] * n
    for i, c in enumerate(a):
        out[i] = c
    for i, c in enumerate(b):
        out[i] = (out[i] + c) % m
    return _poly_trim(out)


def _poly_mul(a, b, m):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return _poly_trim([c % m for c in out])


def _poly_rem(a, mod, m):
    # mod must be monic
    a = [c % m for c in a]
    _poly_trim(a)
    d = len(mod) - 1
    while len(a) > d:
        lead = a[-1]
        shift = len(a) - 1 - d
        for i in range(d):
            a[shift + i] = (a[shift + i] - lead * mod[i]) % m
        a.pop()
        _poly_trim(a)
    return a


def _poly_mulmod(a, b, mod, m):
    return _poly_rem(_poly_mul(a, b, m), mod, m)


def _poly_powmod(a, e, mod, m):
    out = [1]
    base = _poly_rem(list(a), mod, m)
    while e:
        if e & 1:
            out = _poly_mulmod(out, base, mod, m)
        base = _poly_mulmod(base, base, mod, m)
        e >>= 1
    return out


def _poly_gcd_simple(a, b, p):
    a, b = list(a), list(b)
    while b:
        lead_inv = pow(b[-1], p - 2, p)
        monic_b = [(c * lead_inv) % p for c in b]
        a, b = monic_b, _poly_rem(a, monic_b, p)
    return a


def _is_irreducible(mod, p):
    """Rabin test for a monic polynomial over F_p."""
    n = len(mod) - 1
    if n == 0:
        return False
    x = [0, 1]
    # x^(p^n) == x mod (mod)
    xp = _poly_powmod(x, p ** n, mod, p)
    if _poly_rem(_poly_add(xp, [0, p - 1], p), mod, p):
        return False
    for ell in _prime_divisors(n):
        xq = _poly_powmod(x, p ** (n // ell), mod, p)
        g = _poly_gcd_simple(mod, _poly_add(xq, [0, p - 1], p), p)
        if len(g) != 1:
            return False
    return True


def _prime_divisors(n):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=None)
def smallest_irreducible(p, n):
    """Lexicographically smallest monic irreducible of degree n over F_p.

    The order is on the coefficient word (a_{n-1}, ..., a_0) of
    x^n + a_{n-1}x^{n-1} + ... + a_0.  Returns low-first coefficients
    including the leading 1.
    """
    if n == 1:
        return (0, 1)  # x itself
    for code in range(p ** n):
        digits = []
        c = code
        for _ in range(n):
            digits.append(c % p)
            c //= p
        # digits[0] is a_0 (least significant in the lex word)
        mod = digits + [1]
        if _is_irreducible(mod, p):
            return tuple(mod)
    raise RuntimeError(f"no irreducible of degree {n} over F_{p}")  # pragma: no cover


# ----------------------------------------------------------------------
# finite fields
# ----------------------------------------------------------------------

class FFElement:
    """Element of a FiniteField, stored as a low-first coefficient tuple."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field, coeffs):
        self.field = field
        self.coeffs = coeffs

    def _co(self, other):
        if isinstance(other, FFElement):
            if other.field is not self.field:
                raise ValueError("mixed fields")
            return other
        if isinstance(other, int):
            return self.field(other)
        return NotImplemented

    def __add__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        p = self.field.p
        return FFElement(self.field, tuple(
            (a + b) % p for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        p = self.field.p
        return FFElement(self.field, tuple((-a) % p for a in self.coeffs))

    def __sub__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        f = self.field
        prod = _poly_mulmod(list(self.coeffs), list(o.coeffs), f._mod, f.p)
        return f._from_list(prod)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("finite field inverse of 0")
        # x^(q-2) with q = p^n
        return self ** (self.field.order - 2)

    def __pow__(self, e):
        f = self.field
        if e < 0:
            return self.inverse() ** (-e)
        out = _poly_powmod(list(self.coeffs), e, f._mod, f.p)
        return f._from_list(out)

    def frobenius(self, j=1):
        """x -> x^(p^j) (j may be negative; the map is invertible)."""
        n = self.field.degree
        j %= n
        return self ** (self.field.p ** j)

    def pth_root(self):
        return self.frobenius(self.field.degree - 1)

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.field(other)
        if not isinstance(other, FFElement):
            return NotImplemented
        return self.field is other.field and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((id(self.field), self.coeffs))

    def __repr__(self):
        return f"FF({self.field.p}^{self.field.degree}:{list(self.coeffs)})"


class FiniteField:
    """GF(p^degree) with the reproducible lexicographic modulus."""

    _instances = {}

    def __new__(cls, p, degree=1):
        key = (p, degree)
        inst = cls._instances.get(key)
        if inst is None:
            inst = super().__new__(cls)
            inst._init(p, degree)
            cls._instances[key] = inst
        return inst

    def _init(self, p, degree):
        self.p = p
        self.degree = degree
        self.order = p ** degree
        self.modulus = smallest_irreducible(p, degree)
        self._mod = list(self.modulus)
        self.zero = FFElement(self, (0,) * degree)
        self.one = self._from_list([1]) if degree >= 1 else None

    def _from_list(self, coeffs):
        coeffs = list(coeffs[:self.degree])
        coeffs += [0] * (self.degree - len(coeffs))
        return FFElement(self, tuple(c % self.p for c in coeffs))

    def __call__(self, value):
        if isinstance(value, FFElement):
            if value.field is self:
                return value
            raise ValueError("use an embedding to move between fields")
        if isinstance(value, int):
            return self._from_list([value])
        return self._from_list(list(value))

    @property
    def gen(self):
        """Image of x; for degree 1 this is 0 (modulus is x)."""
        return self._from_list([0, 1]) if self.degree > 1 else self.zero

    def elements(self):
        for code in range(self.order):
            digits = []
            c = code
            for _ in range(self.degree):
                digits.append(c % self.p)
                c //= self.p
            yield FFElement(self, tuple(digits))

    def __repr__(self):
        return f"FiniteField({self.p}, {self.degree})"


@lru_cache(maxsize=None)
def subfield_embedding_root(p, small_degree, big_degree):
    """A root of GF(p^small)'s modulus inside GF(p^big), as coefficients.

    Deterministic: the first root in element enumeration order.  Brute
    force is fine at desk scale; results are cached per tower.
    """
    if big_degree % small_degree:
        raise ValueError("not a subfield")
    big = FiniteField(p, big_degree)
    if small_degree == 1:
        return big.zero.coeffs  # modulus of GF(p) is x; root is 0
    mod = smallest_irreducible(p, small_degree)
    for x in big.elements():
        acc = big.zero
        for c in reversed(mod):
            acc = acc * x + c
        if acc.is_zero():
            return x.coeffs
    raise RuntimeError("modulus has no root in the extension")  # pragma: no cover


class FieldEmbedding:
    """Ring embedding GF(p^m) -> GF(p^n) for m | n, fixed by caching."""

    def __init__(self, small, big):
        if small.p != big.p or big.degree % small.degree:
            raise ValueError("not a subfield inclusion")
        self.small = small
        self.big = big
        root = subfield_embedding_root(small.p, small.degree, big.degree)
        self._root = FFElement(big, root)

    def __call__(self, x):
        if x.field is self.big:
            return x
        if x.field is not self.small:
            raise ValueError("element not in the source field")
        acc = self.big.zero
        for c in reversed(x.coeffs):
            acc = acc * self._root + c
        return acc


# ----------------------------------------------------------------------
# truncated unramified p-adic rings
# ----------------------------------------------------------------------

class ZqElement:
    """Element of W(GF(p^n))/p^M: an integer-coefficient word mod p^M."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring, coeffs):
        self.ring = ring
        self.coeffs = coeffs

    def _co(self, other):
        if isinstance(other, ZqElement):
            if other.ring is not self.ring:
                raise ValueError("mixed rings")
            return other
        if isinstance(other, int):
            return self.ring(other)
        return NotImplemented

    def __add__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        m = self.ring.pM
        return ZqElement(self.ring, tuple(
            (a + b) % m for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        m = self.ring.pM
        return ZqElement(self.ring, tuple((-a) % m for a in self.coeffs))

    def __sub__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._co(other)
        if o is NotImplemented:
            return o
        r = self.ring
        prod = _poly_mulmod(list(self.coeffs), list(o.coeffs), r._mod, r.pM)
        return r._from_list(prod)

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            return self.inverse() ** (-e)
        r = self.ring
        out = _poly_powmod(list(self.coeffs), e, r._mod, r.pM)
        return r._from_list(out)

    def inverse(self):
        r = self.ring
        red = self.residue()
        if red.is_zero():
            raise ZeroDivisionError("not a unit")
        inv0 = red.inverse()
        z = r.lift(inv0)
        # Hensel: z <- z(2 - xz), doubles p-adic accuracy each pass
        k = 1
        while k < r.M:
            z = z * (r(2) - self * z)
            k *= 2
        return z

    def residue(self):
        """Reduction mod p into the residue FiniteField."""
        return self.ring.residue_field._from_list(
            [c % self.ring.p for c in self.coeffs])

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ring(other)
        if not isinstance(other, ZqElement):
            return NotImplemented
        return self.ring is other.ring and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((id(self.ring), self.coeffs))

    def __repr__(self):
        return f"Zq({self.ring.p}^{self.ring.degree} mod p^{self.ring.M}:{list(self.coeffs)})"


class ZqRing:
    """W(GF(p^degree))/p^M with the canonical Frobenius lift."""

    _instances = {}

    def __new__(cls, p, degree, M):
        key = (p, degree, M)
        inst = cls._instances.get(key)
        if inst is None:
            inst = super().__new__(cls)
            inst._init(p, degree, M)
            cls._instances[key] = inst
        return inst

    def _init(self, p, degree, M):
        self.p = p
        self.degree = degree
        self.M = M
        self.pM = p ** M
        self.q = p ** degree
        self.residue_field = FiniteField(p, degree)
        self._mod = list(smallest_irreducible(p, degree))  # same integer lift
        self.zero = ZqElement(self, (0,) * degree)
        self.one = self._from_list([1])
        self._frob_gen = None

    def _from_list(self, coeffs):
        coeffs = list(coeffs[:self.degree])
        coeffs += [0] * (self.degree - len(coeffs))
        return ZqElement(self, tuple(c % self.pM for c in coeffs))

    def __call__(self, value):
        if isinstance(value, ZqElement):
            if value.ring is self:
                return value
            if value.ring.p == self.p and value.ring.degree == self.degree:
                return self._from_list(list(value.coeffs))  # precision change
            raise ValueError("mixed rings")
        if isinstance(value, int):
            return self._from_list([value])
        return self._from_list(list(value))

    def lift(self, x):
        """Arbitrary (coefficientwise) lift of a residue-field element."""
        if x.field is not self.residue_field:
            raise ValueError("element not in the residue field")
        return self._from_list(list(x.coeffs))

    @property
    def gen(self):
        return self._from_list([0, 1]) if self.degree > 1 else self.zero

    def teichmuller(self, x):
        """The unique lift t of x with t^q = t."""
        t = self.lift(x)
        for _ in range(self.M + 1):
            t = t ** self.q
        return t

    def _frobenius_generator_image(self):
        if self._frob_gen is None:
            # the root of the modulus congruent to gen^p mod p, by Newton
            y = self.gen ** self.p
            mod = self._mod
            for _ in range(self.M + 1):
                val = self.zero
                der = self.zero
                for c in reversed(mod):
                    der = der * y + val
                    val = val * y + c
                y = y - val * der.inverse()
            self._frob_gen = y
        return self._frob_gen

    def frobenius(self, x, j=1):
        """The lift of x -> x^(p^j); j may be any integer (period degree)."""
        j %= self.degree
        if j == 0 or self.degree == 1:
            return x
        g = self._frobenius_generator_image()
        out = x
        for _ in range(j):
            img = self.zero
            for c in reversed(out.coeffs):
                img = img * g + c
            out = img
        return out

    def __repr__(self):
        return f"ZqRing({self.p}, {self.degree}, M={self.M})"


def teichmuller(x, M):
    """Teichmueller lift of a FiniteField element to precision p^M."""
    ring = ZqRing(x.field.p, x.field.degree, M)
    return ring.teichmuller(x)


# ----------------------------------------------------------------------
# binomials, factorials
# ----------------------------------------------------------------------

def lucas_binom(n, k, p):
    """C(n, k) mod p via Lucas: the digitwise product of binomials."""
    if k < 0 or n < 0:
        raise ValueError("nonnegative arguments required")
    out = 1
    while n or k:
        ni, ki = n % p, k % p
        if ki > ni:
            return 0
        num = den = 1
        for i in range(ki):
            num = (num * (ni - i)) % p
            den = (den * (i + 1)) % p
        out = (out * num * pow(den, p - 2, p)) % p
        n //= p
        k //= p
    return out


def factorial_congruence_check(r, p):
    """Check ((p-1-r)!)^{-1} == (-1)^{r+1} r! mod p for 0 <= r <= p-1."""
    if not 0 <= r <= p - 1:
        raise ValueError("r out of range")
    fact = 1
    for i in range(2, p - r):
        fact = (fact * i) % p
    lhs = pow(fact, p - 2, p)
    rfact = 1
    for i in range(2, r + 1):
        rfact = (rfact * i) % p
    rhs = (pow(-1, r + 1, p) * rfact) % p
    return lhs == rhs


# ----------------------------------------------------------------------
# digit profiles and valuation checks
# ----------------------------------------------------------------------

class DigitProfile:
    """Base-p digits of h with period-f extension and partial sums.

    h = h_0 + p h_1 + ... + p^{f-1} h_{f-1}, 0 <= h <= q-2, digits
    extended by h_{j+f} = h_j.  Partial sums:

        [h]_j   = h_0 + p h_1 + ... + p^j h_j          (j >= 0)
        [h]_{-1} = 0,   [h]_{-2} = -h_{f-1}/p

    with [h]_{j+f} = h + q[h]_j for every j >= -2.
    """

    def __init__(self, h, p, f):
        q = p ** f
        if not 0 <= h <= q - 2:
            raise ValueError(f"h out of range: need 0 <= h <= {q - 2}")
        self.h = h
        self.p = p
        self.f = f
        self.q = q
        digits = []
        c = h
        for _ in range(f):
            digits.append(c % p)
            c //= p
        self.digits = tuple(digits)

    def digit(self, j):
        """h_j for any integer j (period f)."""
        return self.digits[j % self.f]

    def partial(self, j):
        """[h]_j as an exact Fraction, defined for j >= -2."""
        if j < -2:
            raise ValueError("partial sums defined for j >= -2")
        if j == -1:
            return Fraction(0)
        if j == -2:
            return Fraction(-self.digits[self.f - 1], self.p)
        if j < self.f:
            return Fraction(sum(self.digits[i] * self.p ** i
                                for i in range(j + 1)))
        return self.h + self.q * self.partial(j - self.f)

    def __eq__(self, other):
        return (isinstance(other, DigitProfile)
                and (self.h, self.p, self.f) == (other.h, other.p, other.f))

    def __hash__(self):
        return hash((self.h, self.p, self.f))

    def __repr__(self):
        return f"DigitProfile(h={self.h}, p={self.p}, f={self.f})"


def digit_profile(h, p, f):
    return DigitProfile(h, p, f)


def val_p(x, p):
    """Exact p-adic valuation of a rational (None for x = 0)."""
    x = Fraction(x)
    if x == 0:
        return None
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def zp_valuation_check(x, j, p):
    """Decide whether the rational x (a p-adic integer combination such as
    [h]_{j-1} + h/(q-1)) has p-adic valuation >= j.  Exact."""
    v = val_p(x, p)
    return v is None or v >= j


def hj_inequality_check(h, j, p, f):
    """Exact rational check of the two digit inequalities used to bound
    principal parts:

      (i)  (q-1)((p-1)p^{j-1} - [h]_{j-1}) > h    when h_{j-1} != p-1
      (ii) (q-1)(p^j - [h]_{j-1} - p^{j-f}) > h

    Returns the conjunction of the applicable parts.
    """
    prof = DigitProfile(h, p, f)
    if not 0 <= j <= f - 1:
        raise ValueError("j out of range")
    q = Fraction(p ** f)
    ok = True
    if prof.digit(j - 1) != p - 1:
        lhs = (q - 1) * ((p - 1) * Fraction(p) ** (j - 1) - prof.partial(j - 1))
        ok = ok and lhs > h
    lhs2 = (q - 1) * (Fraction(p) ** j - prof.partial(j - 1)
                      - Fraction(p) ** (j - f))
    return ok and lhs2 > h
