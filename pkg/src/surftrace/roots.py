"""Roots of monic cubics with Gaussian-integer coefficients.

Repeated roots are located exactly from the discriminant and closed forms,
so the numerical solver only ever sees cubics with simple roots.  A plain
companion-matrix solve loses about a third of the working digits at a
triple root, which is too much for a 1e-9 purity tolerance.
"""

from __future__ import annotations

import mpmath

from .gaussian import GaussianInt

DPS = 50


def cubic_discriminant(b: GaussianInt, c: GaussianInt, d: GaussianInt) -> GaussianInt:
    """Discriminant of X^3 + bX^2 + cX + d, exact in Z[i]."""
    return 18 * b * c * d - 4 * b**3 * d + b * b * c * c - 4 * c**3 - 27 * d * d


def _mpc(g: GaussianInt):
    return mpmath.mpc(g.re, g.im)


def cubic_roots(b: GaussianInt, c: GaussianInt, d: GaussianInt) -> list:
    """All three roots (with multiplicity) of X^3 + bX^2 + cX + d as mpmath mpc values."""
    with mpmath.workdps(DPS):
        if cubic_discriminant(b, c, d):
            roots = mpmath.polyroots([1, _mpc(b), _mpc(c), _mpc(d)], maxsteps=200, extraprec=2 * DPS)
            return sorted(roots, key=lambda r: (float(r.real), float(r.imag)))
        h = b * b - 3 * c
        if not h:
            r = -_mpc(b) / 3
            return [r, r, r]
        r = (9 * _mpc(d) - _mpc(b) * _mpc(c)) / (2 * _mpc(h))
        s = -_mpc(b) - 2 * r
        return [r, r, s]


def frobenius_roots(a: GaussianInt, p: int, unit: GaussianInt = GaussianInt(1, 0)) -> list:
    """Roots of X^3 - aX^2 + unit*p*conj(a)X - unit*p^3.

    unit = 1 is the characteristic polynomial Q_p of the twisted system.
    """
    return cubic_roots(-a, unit * p * a.conjugate(), -(unit * p**3))


def max_modulus_deviation(a: GaussianInt, p: int, unit: GaussianInt = GaussianInt(1, 0)) -> float:
    """max over roots of | |root|/p - 1 |."""
    with mpmath.workdps(DPS):
        return float(max(abs(abs(r) / p - 1) for r in frobenius_roots(a, p, unit)))
