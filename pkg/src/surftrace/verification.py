"""Checks on resolved traces: Weil bound, purity, ordinarity and censuses."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import mpmath

from .extraction import TraceCandidate
from .gaussian import GaussianInt, QiPlace, ResidueField, place_valuation, places_over, rational_divides, scaled_disc_member
from .roots import DPS, frobenius_roots

IRREDUCIBLE = "irreducible"
SPLIT_1_2 = "split_1_2"
SPLIT_1_1_1 = "split_1_1_1"
FACTOR_TYPES = (IRREDUCIBLE, SPLIT_1_2, SPLIT_1_1_1)

ORDINARY = "ordinary_certified"
UNDETERMINED = "undetermined"
MIXED = "mixed"  # siblings disagree


def weil_bound_check(a: GaussianInt, p: int) -> bool:
    return a.norm <= 9 * p * p


def root_moduli(a: GaussianInt, p: int) -> list[float]:
    with mpmath.workdps(DPS):
        return [float(abs(r)) for r in frobenius_roots(a, p)]


def purity_check(a: GaussianInt, p: int, tol: float = 1e-9) -> bool:
    """All roots of X^3 - aX^2 + conj(a)pX - p^3 have modulus within tol*p of p."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return all(abs(m - p) <= tol * p for m in root_moduli(a, p))


# --- ordinarity ------------------------------------------------------------


@dataclass(frozen=True)
class OrdinarityVerdict:
    p: int
    verdict: str
    witness: tuple  # ((place generator, valuation), ...)


def ordinarity_classify(p: int, a: GaussianInt) -> OrdinarityVerdict:
    """p not dividing a certifies ordinarity at some place over p; p | a decides nothing."""
    witness = tuple((str(v.generator), place_valuation(a, v)) for v in places_over(p))
    verdict = UNDETERMINED if rational_divides(p, a) else ORDINARY
    return OrdinarityVerdict(p, verdict, witness)


# --- censuses ----------------------------------------------------------------


@dataclass(frozen=True)
class CensusReport:
    """Counts over a prime range.

    ``counts`` partitions the primes: a prime lands in a category only when
    every sibling candidate does, otherwise in ``mixed``.  ``possible``
    counts primes where at least one sibling lands in the category.
    """

    name: str
    p_lo: int
    p_hi: int
    total: int
    counts: tuple  # ((category, n), ...)
    possible: tuple

    @property
    def fractions(self) -> dict:
        return {c: Fraction(n, self.total) for c, n in self.counts}

    def fraction(self, category: str) -> Fraction:
        return self.fractions.get(category, Fraction(0))

    def csv_rows(self) -> list[tuple]:
        rng = f"{self.p_lo}-{self.p_hi}"
        rows = [(rng, f"{self.name}:{c}", n, self.total) for c, n in self.counts]
        rows += [(rng, f"{self.name}:{c}:possible", n, self.total) for c, n in self.possible]
        return rows


def _census(
    name: str,
    items: Sequence[tuple[int, tuple]],
    classify: Callable[[int, GaussianInt], str],
    categories: Sequence[str],
    prange: Optional[tuple[int, int]] = None,
) -> CensusReport:
    if not items:
        raise ValueError(f"{name}: empty candidate list")
    certain: Counter = Counter()
    possible: Counter = Counter()
    for p, cands in items:
        kinds = {classify(p, a) for a in cands}
        certain[next(iter(kinds)) if len(kinds) == 1 else MIXED] += 1
        for k in kinds:
            possible[k] += 1
    ps = [p for p, _ in items]
    lo, hi = prange or (min(ps), max(ps))
    cats = tuple(categories) + (MIXED,)
    return CensusReport(
        name,
        lo,
        hi,
        len(items),
        tuple((c, certain[c]) for c in cats),
        tuple((c, possible[c]) for c in categories),
    )


def _items(candidates: Iterable[TraceCandidate]) -> list:
    return sorted(((c.p, c.candidates) for c in candidates), key=lambda t: t[0])


def ordinarity_census(candidates: Iterable[TraceCandidate], prange=None) -> CensusReport:
    return _census(
        "ordinarity",
        _items(candidates),
        lambda p, a: ordinarity_classify(p, a).verdict,
        (ORDINARY, UNDETERMINED),
        prange,
    )


def disc_census(candidates: Iterable[TraceCandidate], r: int = 3, prange=None) -> CensusReport:
    """Fraction of primes with a_p in p*C_r."""
    return _census(
        f"disc_pC{r}",
        _items(candidates),
        lambda p, a: "inside" if scaled_disc_member(a, p, r) else "outside",
        ("inside", "outside"),
        prange,
    )


# --- residual factorization --------------------------------------------------


def _poly_trim(f, F):
    while len(f) > 1 and F.is_zero(f[-1]):
        f = f[:-1]
    return f


def _poly_mod(f, g, F):
    """Remainder of f by monic-izable g; coefficients low degree first."""
    f = list(f)
    g = _poly_trim(g, F)
    inv = F.inv(g[-1])
    while len(f) >= len(g) and not (len(f) == 1 and F.is_zero(f[0])):
        if F.is_zero(f[-1]):
            f.pop()
            continue
        coef = F.mul(f[-1], inv)
        shift = len(f) - len(g)
        for k, gk in enumerate(g):
            f[shift + k] = F.sub(f[shift + k], F.mul(coef, gk))
        f.pop()
    return _poly_trim(f or [F.zero], F)


def _poly_mul(f, g, F):
    out = [F.zero] * (len(f) + len(g) - 1)
    for i, fi in enumerate(f):
        for j, gj in enumerate(g):
            out[i + j] = F.add(out[i + j], F.mul(fi, gj))
    return out


def _poly_gcd(f, g, F):
    f, g = _poly_trim(f, F), _poly_trim(g, F)
    while not (len(g) == 1 and F.is_zero(g[0])):
        f, g = g, _poly_mod(f, g, F)
    inv = F.inv(f[-1])
    return [F.mul(c, inv) for c in f]


def _poly_eval(f, x, F):
    acc = F.zero
    for c in reversed(f):
        acc = F.add(F.mul(acc, x), c)
    return acc


def _x_power_mod(e: int, m, F):
    result, base = [F.one], [F.zero, F.one]
    while e:
        if e & 1:
            result = _poly_mod(_poly_mul(result, base, F), m, F)
        base = _poly_mod(_poly_mul(base, base, F), m, F)
        e >>= 1
    return result


def reduced_frobenius_poly(a: GaussianInt, p: int, v: QiPlace):
    """Q_p reduced at v, coefficients low degree first, and its residue field."""
    F = ResidueField(v)
    coeffs = [
        F.reduce(GaussianInt(-p**3, 0)),
        F.reduce(a.conjugate() * p),
        F.reduce(-a),
        F.one,
    ]
    return coeffs, F


def residual_factor_type(a: GaussianInt, p: int, v: QiPlace) -> str:
    """Factorization shape of Q_p mod v, via gcd with X^q - X."""
    if v.p <= 3 or p % v.p == 0:
        raise ValueError(f"residual factorization needs l > 3 and l != p (l={v.p}, p={p})")
    P, F = reduced_frobenius_poly(a, p, v)
    xq = _x_power_mod(F.q, P, F)
    xq_minus_x = list(xq) + [F.zero] * (2 - len(xq))
    xq_minus_x[1] = F.sub(xq_minus_x[1], F.one)
    g = _poly_gcd(P, _poly_trim(xq_minus_x, F), F)
    distinct = len(g) - 1
    if distinct == 0:
        return IRREDUCIBLE
    if distinct >= 2:
        return SPLIT_1_1_1  # the last root is forced into F_q by the trace
    r = F.neg(g[0])
    deriv = [F.mul(F.from_int(k), P[k]) for k in range(1, len(P))]
    return SPLIT_1_1_1 if F.is_zero(_poly_eval(deriv, r, F)) else SPLIT_1_2


def root_scan_type(a: GaussianInt, p: int, v: QiPlace) -> str:
    """Oracle: count roots with multiplicity by trying every residue-field element."""
    P, F = reduced_frobenius_poly(a, p, v)
    mult = 0
    for x in F.elements():
        f = list(P)
        while len(f) > 1 and F.is_zero(_poly_eval(f, x, F)):
            # synthetic division by (X - x)
            q = [F.zero] * (len(f) - 1)
            acc = F.zero
            for k in range(len(f) - 1, 0, -1):
                acc = F.add(F.mul(acc, x), f[k])
                q[k - 1] = acc
            f = q
            mult += 1
    return {0: IRREDUCIBLE, 1: SPLIT_1_2, 3: SPLIT_1_1_1}[mult]


def residual_census(candidates: Iterable[TraceCandidate], v: QiPlace, prange=None) -> CensusReport:
    if v.p <= 7:
        raise ValueError("residual censuses exclude places over l <= 7")
    items = [(p, c) for p, c in _items(candidates) if p != v.p]
    return _census(
        f"residual_{v.generator}",
        items,
        lambda p, a: residual_factor_type(a, p, v),
        FACTOR_TYPES,
        prange,
    )
