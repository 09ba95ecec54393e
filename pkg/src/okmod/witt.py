"""Universal Witt addition/multiplication polynomials and finite Witt vectors.

The addition law S_0, S_1, ... is produced by exact division in the ghost
recursion

    sum_i p^i a_i^{p^{n-i}} + sum_i p^i b_i^{p^{n-i}} = sum_i p^i S_i^{p^{n-i}},

and the windowed polynomials c_{i,n} = S_n(a_{i-n..i}, b_{i-n..i}) together
with the differences c_{i,n+1} - c_{i,n} expose the structural facts the
congruence arguments rest on: every difference monomial beyond level 1 is
"mixed" (uses an a- and a b-variable) and has total degree >= 2p-1.

Witt vectors of a fixed finite length over any commutative coefficient ring
are supported by evaluating the universal polynomials; entries only need
+, -, *, integer ** and multiplication by Python ints.
"""

from __future__ import annotations


class IntPoly:
    """Sparse multivariate polynomial with exact integer coefficients.

    Monomials are stored as sorted tuples of ((kind, index), exponent);
    kinds are short strings like "a", "b", "t".
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = dict(terms or {})

    @classmethod
    def const(cls, c):
        return cls({(): c} if c else {})

    @classmethod
    def var(cls, kind, index=0):
        return cls({(((kind, index), 1),): 1})

    def _wrap(self, other):
        if isinstance(other, IntPoly):
            return other
        if isinstance(other, int):
            return IntPoly.const(other)
        return NotImplemented

    def __add__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        out = dict(self.terms)
        for m, c in o.terms.items():
            nc = out.get(m, 0) + c
            if nc:
                out[m] = nc
            elif m in out:
                del out[m]
        return IntPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return IntPoly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                exps = dict(m1)
                for v, e in m2:
                    exps[v] = exps.get(v, 0) + e
                m = tuple(sorted(exps.items()))
                nc = out.get(m, 0) + c1 * c2
                if nc:
                    out[m] = nc
                elif m in out:
                    del out[m]
        return IntPoly(out)

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            raise ValueError("negative power of a polynomial")
        out = IntPoly.const(1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def exact_div(self, n):
        """Divide every coefficient by the integer n; must be exact."""
        out = {}
        for m, c in self.terms.items():
            q, r = divmod(c, n)
            if r:
                raise ArithmeticError(f"non-exact division by {n}")
            out[m] = q
        return IntPoly(out)

    def rename(self, shift_by_kind):
        """Shift variable indices: (kind, i) -> (kind, i + shift)."""
        out = {}
        for m, c in self.terms.items():
            nm = tuple(sorted(((k, i + shift_by_kind.get(k, 0)), e)
                              for (k, i), e in m))
            out[nm] = c
        return IntPoly(out)

    def evaluate(self, assignment, one):
        """Evaluate with a {(kind, index): ring element} mapping.

        `one` is the ring's multiplicative identity (used for the empty
        monomial and to seed products).
        """
        total = None
        for m, c in self.terms.items():
            term = one
            for v, e in m:
                term = term * (assignment[v] ** e)
            term = c * term
            total = term if total is None else total + term
        if total is None:
            return 0 * one
        return total

    def monomials(self):
        """Iterate (monomial, coefficient) pairs."""
        return self.terms.items()

    def total_degree_of(self, monomial):
        return sum(e for _, e in monomial)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return self.terms == o.terms

    def __hash__(self):
        return hash(tuple(sorted(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "IntPoly(0)"
        bits = []
        for m, c in sorted(self.terms.items()):
            vs = "*".join(f"{k}{i}^{e}" if e != 1 else f"{k}{i}"
                          for (k, i), e in m)
            bits.append(f"{c}*{vs}" if vs else str(c))
        return "IntPoly(" + " + ".join(bits) + ")"


def _ghost(entries, p, n):
    """n-th ghost component sum_{i<=n} p^i x_i^{p^(n-i)} of a list of polys."""
    out = IntPoly.const(0)
    for i in range(n + 1):
        out = out + p ** i * entries[i] ** (p ** (n - i))
    return out


def sum_polynomials(p, n):
    """The Witt addition polynomials S_0..S_n (exact ghost recursion)."""
    if n > 3:
        raise ValueError("level capped at n = 3 (coefficient blowup)")
    avars = [IntPoly.var("a", i) for i in range(n + 1)]
    bvars = [IntPoly.var("b", i) for i in range(n + 1)]
    S = []
    for k in range(n + 1):
        rhs = _ghost(avars, p, k) + _ghost(bvars, p, k)
        for i in range(k):
            rhs = rhs - p ** i * S[i] ** (p ** (k - i))
        S.append(rhs.exact_div(p ** k))
    return S


def prod_polynomials(p, n):
    """The Witt multiplication polynomials P_0..P_n."""
    if n > 3:
        raise ValueError("level capped at n = 3 (coefficient blowup)")
    avars = [IntPoly.var("a", i) for i in range(n + 1)]
    bvars = [IntPoly.var("b", i) for i in range(n + 1)]
    P = []
    for k in range(n + 1):
        rhs = _ghost(avars, p, k) * _ghost(bvars, p, k)
        for i in range(k):
            rhs = rhs - p ** i * P[i] ** (p ** (k - i))
        P.append(rhs.exact_div(p ** k))
    return P


def ghost_identity_check(p, n):
    """Exact check of the defining ghost identity at every level <= n."""
    S = sum_polynomials(p, n)
    avars = [IntPoly.var("a", i) for i in range(n + 1)]
    bvars = [IntPoly.var("b", i) for i in range(n + 1)]
    for k in range(n + 1):
        lhs = _ghost(avars, p, k) + _ghost(bvars, p, k)
        rhs = _ghost(S, p, k)
        if not (lhs - rhs).is_zero():
            return False
    return True


def c_sequence(p, i, n):
    """Windowed addition-law polynomials c_{i,0..n} and their differences.

    c_{i,k} = S_k(a_{i-k}, ..., a_i, b_{i-k}, ..., b_i); returns
    (c_list, diff_list) with diff_list[k] = c_{i,k+1} - c_{i,k}.
    """
    if n > 2:
        raise ValueError("level capped at n = 2")
    S = sum_polynomials(p, n)
    cs = []
    for k in range(n + 1):
        shift = {"a": i - k, "b": i - k}
        cs.append(S[k].rename(shift))
    diffs = [cs[k + 1] - cs[k] for k in range(n)]
    return cs, diffs


def difference_monomials_ok(p, i, n):
    """Every monomial of c_{i,n+1} - c_{i,n} (n >= 1) must use at least one
    a-variable and one b-variable and have total degree >= 2p-1."""
    _, diffs = c_sequence(p, i, n + 1)
    d = diffs[n]
    for m, _ in d.monomials():
        kinds = {k for (k, _), _e in m}
        if "a" not in kinds or "b" not in kinds:
            return False
        if d.total_degree_of(m) < 2 * p - 1:
            return False
    return True


class WittVector:
    """Fixed-length Witt vector over an arbitrary commutative ring.

    `one` is the ring identity; entries are ring elements (anything with
    +, -, *, integer powers, and int multiples).
    """

    def __init__(self, entries, p, one):
        self.entries = tuple(entries)
        self.p = p
        self.one = one

    def __len__(self):
        return len(self.entries)

    def _check(self, other):
        if not isinstance(other, WittVector):
            raise TypeError("WittVector expected")
        if len(other) != len(self) or other.p != self.p:
            raise ValueError("length or prime mismatch")

    def _apply(self, polys, other):
        assignment = {}
        for idx, x in enumerate(self.entries):
            assignment[("a", idx)] = x
        for idx, y in enumerate(other.entries):
            assignment[("b", idx)] = y
        return WittVector(
            [polys[k].evaluate(assignment, self.one)
             for k in range(len(self))], self.p, self.one)

    def __add__(self, other):
        self._check(other)
        return self._apply(sum_polynomials(self.p, len(self) - 1), other)

    def __mul__(self, other):
        self._check(other)
        return self._apply(prod_polynomials(self.p, len(self) - 1), other)

    def __neg__(self):
        # -x has entries given by evaluating S with b = componentwise
        # negation iff p is odd: V(-x_i) works since [-1] = (-1,0,0,...)
        return WittVector([-x for x in self.entries], self.p, self.one)

    def __sub__(self, other):
        return self + (-other)

    def ghost(self):
        """Ghost components (only meaningful over torsion-free rings)."""
        out = []
        p = self.p
        for n in range(len(self)):
            acc = None
            for i in range(n + 1):
                term = p ** i * self.entries[i] ** (p ** (n - i))
                acc = term if acc is None else acc + term
            out.append(acc)
        return out

    def __eq__(self, other):
        if not isinstance(other, WittVector):
            return NotImplemented
        return (self.p == other.p and self.entries == other.entries)

    def __repr__(self):
        return f"WittVector(p={self.p}, {list(self.entries)})"


def witt_add(x, y):
    return x + y


def witt_mul(x, y):
    return x * y
