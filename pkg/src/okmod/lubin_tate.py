"""Lubin-Tate multiplication series a_LT(T) for the uniformizer p.

The series is pinned down by the logarithm identity

    sum_{n>=0} a_LT(T)^{q^n} / p^n  =  a * sum_{n>=0} T^{q^n} / p^n,

solved coefficient-by-coefficient.  For a unit a the series lives on the
sparse support 1 + (q-1)Z (commutation with the Teichmueller action), so
we store it compressed: a_LT(T) = T * B(T^{q-1}) with B a short series
over W(F_q)/p^M.  Divisions by p^n are combined over a common denominator
per degree, so each coefficient costs exactly one exact division.

Exposed:
  lt_series(a, D, M)   -- the compressed solve, reduced mod p at the end
  fa_lt_inverse(a, D)  -- a_LT(T)/(a-bar T) mod (p, T^D), support (q-1)Z
  c_a(a)               -- reduction mod p of (1 - a^{q-1})/p
"""

from __future__ import annotations

import math

from .arith import ZqRing


class LtPrecisionError(ArithmeticError):
    """p-adic precision exhausted; carries the required precision."""

    def __init__(self, required_M):
        self.required_M = required_M
        super().__init__(f"insufficient p-adic precision: need M >= {required_M}")


class LtSeries:
    """a_LT(T) mod p: coefficients over the residue field of a's ring.

    `coeffs` maps T-degree -> residue-field element (zeros dropped);
    the series is known mod T^{D+1}.
    """

    def __init__(self, field, coeffs, D, a):
        self.field = field
        self.coeffs = {k: v for k, v in coeffs.items() if not v.is_zero()}
        self.D = D
        self.a = a

    def coeff(self, k):
        return self.coeffs.get(k, self.field.zero)

    def support(self):
        return sorted(self.coeffs)

    def __repr__(self):
        return f"LtSeries(D={self.D}, support={self.support()[:6]}...)"


def _required_M(q, D):
    nmax = 0
    while q ** (nmax + 1) <= max(D, 1):
        nmax += 1
    return 2 + nmax, nmax


_solve_cache = {}


def lt_series(a, D, M=None):
    """Solve the logarithm identity for a_LT(T) mod (p, T^{D+1}).

    a is a ZqRing element (a unit, or p itself for the [p]-series); M is
    the p-adic working precision (defaults to a's ring precision) and must
    satisfy M >= 2 + ceil(log_q D).
    """
    ring = a.ring
    p, q = ring.p, ring.q
    req, nmax = _required_M(q, D)
    if M is None:
        M = ring.M
    if M < req:
        raise LtPrecisionError(req)
    if M > ring.M:
        raise LtPrecisionError(M)  # a is not known that accurately

    key = (id(ring), a.coeffs, D, M)
    hit = _solve_cache.get(key)
    if hit is not None:
        return hit

    work = ZqRing(p, ring.degree, M)
    aw = work(a)
    m = (D - 1) // (q - 1) if D >= 1 else 0  # lattice degree 1+(q-1)i <= D

    # logarithm coefficients on the lattice, scaled: at degree q^n the
    # coefficient of L is 1/p^n; record the lattice index and n.
    log_idx = {}
    n = 0
    while q ** n <= 1 + (q - 1) * m:
        log_idx[(q ** n - 1) // (q - 1)] = n
        n += 1

    A = [work.zero] * (m + 1)
    A[0] = aw

    def lattice_pow(B, e):
        # (T*B(S))^e on the lattice, S = T^{q-1}: returns B(S)^e as a list
        # truncated at lattice length m+1
        out = [work.one] + [work.zero] * m
        base = list(B)
        while e:
            if e & 1:
                out = _series_mul(out, base, m, work)
            e >>= 1
            if e:
                base = _series_mul(base, base, m, work)
        return out

    for i in range(1, m + 1):
        d_i = 1 + (q - 1) * i
        ni = 0
        while q ** (ni + 1) <= d_i:
            ni += 1
        # numerator = a * p^{ni} L_{d_i} - sum_{n=1..ni} p^{ni-n} [A^{q^n}]_{d_i}
        num = work.zero
        nl = log_idx.get(i)
        if nl is not None and nl >= 1:
            num = num + aw * (p ** (ni - nl))
        elif nl == 0:
            pass  # the n=0 log term is the A[i] we are solving for (i=0 only)
        for n in range(1, ni + 1):
            # [A^{q^n}]_{d_i}: A^{q^n} = T^{q^n} B^{q^n}(S); lattice shift
            shift = (q ** n - 1) // (q - 1)
            j = i - shift
            if j < 0:
                continue
            Bpow = lattice_pow(A, q ** n)
            num = num - (p ** (ni - n)) * Bpow[j]
        if ni:
            A[i] = _divide_p_power(num, ni, work)
        else:
            A[i] = num

    field = ring.residue_field
    coeffs = {}
    for i, c in enumerate(A):
        r = c.residue()
        if not r.is_zero():
            coeffs[1 + (q - 1) * i] = r
    out = LtSeries(field, coeffs, D, a)
    _solve_cache[key] = out
    return out


def _series_mul(x, y, m, work):
    out = [work.zero] * (m + 1)
    for i, xi in enumerate(x):
        if xi.is_zero():
            continue
        for j in range(0, m + 1 - i):
            yj = y[j]
            if not yj.is_zero():
                out[i + j] = out[i + j] + xi * yj
    return out


def _divide_p_power(x, n, work):
    pn = work.p ** n
    out = []
    for c in x.coeffs:
        if c % pn:
            raise LtPrecisionError(work.M + n)
        out.append(c // pn)
    return work._from_list(out)


def fa_lt_inverse(a, D):
    """(f_a^LT)^{-1} = a_LT(T)/(a-bar T) mod (p, T^D).

    Returns {degree: residue-field element} supported on (q-1)Z,
    congruent to 1 + c_a T^{q-1} - c_a^{p^{f-1}} T^{(q-1)(p^{f-1}+1)}
    modulo T^{(q-1)(2p^{f-1}+1)}.
    """
    ring = a.ring
    q = ring.q
    s = lt_series(a, D)
    abar = a.residue()
    if abar.is_zero():
        raise ValueError("a must be a unit")
    inv = abar.inverse()
    out = {}
    for k, c in s.coeffs.items():
        if k - 1 < D:
            out[k - 1] = c * inv
    # sanity: support must sit in (q-1)Z
    for k in out:
        if k % (q - 1):
            raise AssertionError("f_a^LT support escaped the (q-1)-lattice")
    return out


def c_a(a):
    """Reduction mod p of (1 - a^{q-1})/p; requires precision M >= 2."""
    ring = a.ring
    if ring.M < 2:
        raise LtPrecisionError(2)
    x = ring.one - a ** (ring.q - 1)
    y = _divide_p_power(x, 1, ring)
    return y.residue()
