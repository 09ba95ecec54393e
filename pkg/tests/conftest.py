"""Shared sampling helpers for the test suite."""

import random

from okmod.arith import ZqRing


def unit_sample(p, f, M, extra=10, seed=20260825):
    """A reproducible list of units of W(F_q)/p^M.

    All Teichmueller units, all 1 + p[mu], then `extra` pseudorandom
    units drawn from the fixed seed.
    """
    ring = ZqRing(p, f, M)
    field = ring.residue_field
    units = []
    for x in field.elements():
        if not x.is_zero():
            units.append(ring.teichmuller(x))
    for x in field.elements():
        if not x.is_zero():
            units.append(ring.one + ring(p) * ring.teichmuller(x))
    rng = random.Random(seed)
    while extra > 0:
        u = ring([rng.randrange(ring.pM) for _ in range(f)])
        if u.residue().is_zero():
            continue
        units.append(u)
        extra -= 1
    return units
