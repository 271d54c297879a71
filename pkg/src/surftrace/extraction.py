"""From raw character sums to Gaussian-integer Frobenius traces.

The affine sums differ from the transcendental traces by algebraic terms.
The model used here, per symbol class of p, is

  S1   = 2 Re(alpha) + p*m1 + c1 + e*aE(p)
  Sphi = -2 s Im(alpha) + p*mphi + cphi
  S2   = 2 Re(alpha^2 - 2 u p conj(alpha)) + p^2*m2 + c2 + e*(aE(p)^2 - 2p)

where aE is the Frobenius trace of the boundary curve t^2 = s(s^2 + z s - 1),
u is a 4th root of unity (the determinant unit of the eigenspace: the
roots of X^3 - alpha X^2 + u p conj(alpha) X - u p^3 have modulus p), and
s = +-1 is a global labelling convention for the two eigenspaces.  The
twisted trace is a = u*alpha unless a character is configured.
All constants are learned by :func:`calibrate_law`.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .characters import DirichletCharacter, legendre
from .counting import CountRecord, SurfaceParams, boundary_trace
from .gaussian import ONE, UNITS, GaussianInt, format_gaussian, parse_gaussian
from .roots import max_modulus_deviation

log = logging.getLogger(__name__)

PURITY_TOL = 1e-9
LAW_SCHEMA = 1


class NoConsistentLaw(ValueError):
    pass


class AmbiguousLaw(ValueError):
    """Several constant tuples survive; ``law`` holds all of them (candidate-set mode)."""

    def __init__(self, msg: str, law: "CorrectionLaw"):
        super().__init__(msg)
        self.law = law


class EmptyCandidateSet(ValueError):
    pass


# --- symbol classes ------------------------------------------------------


@dataclass(frozen=True, order=True)
class SymbolClass:
    p_mod8: int
    chi_m1: int
    chi_2: int
    chi_z: int
    chi_z2p4: int

    @property
    def code(self) -> str:
        sym = {1: "+", -1: "-", 0: "0"}
        return f"{self.p_mod8}{sym[self.chi_m1]}{sym[self.chi_2]}{sym[self.chi_z]}{sym[self.chi_z2p4]}"

    @classmethod
    def from_code(cls, code: str) -> "SymbolClass":
        val = {"+": 1, "-": -1, "0": 0}
        if len(code) != 5 or code[0] not in "1357" or any(c not in val for c in code[1:]):
            raise ValueError(f"bad symbol class code {code!r}")
        return cls(int(code[0]), *(val[c] for c in code[1:]))


def symbol_class(z: int, p: int) -> SymbolClass:
    return SymbolClass(p % 8, legendre(-1, p), legendre(2, p), legendre(z, p), legendre(z * z + 4, p))


# --- law constants -------------------------------------------------------


@dataclass(frozen=True, order=True)
class LawConstants:
    m1: int = 0
    c1: int = 0
    mphi: int = 0
    cphi: int = 0
    m2: int = 0
    c2: int = 0
    e: int = 0
    u: GaussianInt = ONE

    def __post_init__(self):
        if self.u not in UNITS:
            raise ValueError(f"law unit {self.u} is not a 4th root of unity")

    def within(self, r_max: int, c_max: int) -> bool:
        return all(abs(m) <= r_max for m in (self.m1, self.mphi, self.m2)) and all(
            abs(c) <= c_max for c in (self.c1, self.cphi, self.c2)
        )

    def to_tokens(self) -> list[str]:
        ints = [self.m1, self.c1, self.mphi, self.cphi, self.m2, self.c2, self.e]
        return [str(v) for v in ints] + [format_gaussian(self.u)]


def _sort_key(k: LawConstants):
    return (k.m1, k.c1, k.mphi, k.cphi, k.m2, k.c2, k.e, k.u.re, k.u.im)


@dataclass(frozen=True)
class CorrectionLaw:
    """Constant tuples per symbol class, plus calibration bookkeeping.

    A class mapped to several tuples is in candidate-set mode.
    """

    z: int
    entries: dict = field(default_factory=dict)  # SymbolClass -> tuple[LawConstants, ...]
    support: dict = field(default_factory=dict)  # SymbolClass -> int
    phi_sign: int = 1
    unsupported: tuple = ()  # classes seen with too few calibration primes

    @property
    def ambiguous(self) -> bool:
        return any(len(v) > 1 for v in self.entries.values())

    def constants_for(self, cls: SymbolClass) -> tuple:
        return self.entries.get(cls, ())

    def flipped(self) -> "CorrectionLaw":
        """The same law in the opposite eigenspace labelling (every alpha conjugated)."""
        entries = {
            c: tuple(sorted((replace(k, u=k.u.conjugate()) for k in ks), key=_sort_key))
            for c, ks in self.entries.items()
        }
        return replace(self, entries=entries, phi_sign=-self.phi_sign)

    def to_text(self) -> str:
        lines = [f"law_schema = {LAW_SCHEMA}", f"z = {self.z}", f"phi_sign = {self.phi_sign}"]
        lines.append("# class m1 c1 mphi cphi m2 c2 e u support")
        for c in sorted(self.entries):
            for k in self.entries[c]:
                lines.append(" ".join([c.code] + k.to_tokens() + [str(self.support.get(c, 0))]))
        for c in sorted(self.unsupported):
            lines.append(f"{c.code} unsupported {self.support.get(c, 0)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CorrectionLaw":
        head = {}
        entries: dict = {}
        support = {}
        unsupported = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                if "=" in line:
                    k, v = (s.strip() for s in line.split("=", 1))
                    head[k] = int(v)
                    continue
                parts = line.split()
                c = SymbolClass.from_code(parts[0])
                if parts[1] == "unsupported":
                    unsupported.append(c)
                    support[c] = int(parts[2])
                    continue
                ints = [int(t) for t in parts[1:8]]
                k = LawConstants(*ints, u=parse_gaussian(parts[8]))
                entries.setdefault(c, []).append(k)
                support[c] = int(parts[9])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"law line {lineno}: {exc}") from exc
        if head.get("law_schema") != LAW_SCHEMA:
            raise ValueError(f"unsupported law schema {head.get('law_schema')}")
        return cls(
            head["z"],
            {c: tuple(ks) for c, ks in entries.items()},
            support,
            head.get("phi_sign", 1),
            tuple(sorted(unsupported)),
        )


# --- exact identities ----------------------------------------------------


def newton_frob2(alpha: GaussianInt, p: int, unit: GaussianInt = ONE) -> GaussianInt:
    """Sum of squared roots of X^3 - alpha X^2 + unit p conj(alpha) X - unit p^3."""
    return alpha * alpha - 2 * p * unit * alpha.conjugate()


def newton_frob3(alpha: GaussianInt, p: int, unit: GaussianInt = ONE) -> GaussianInt:
    return alpha**3 - 3 * p * unit * alpha.norm + 3 * unit * p**3


@lru_cache(maxsize=8192)
def _boundary(z: int, p: int) -> int:
    return boundary_trace(SurfaceParams(z), p)


def predicted_sums(alpha: GaussianInt, p: int, k: LawConstants, boundary: int, phi_sign: int = 1):
    """(S1, Sphi, S2) predicted by the law for trace alpha."""
    s1 = 2 * alpha.re + p * k.m1 + k.c1 + k.e * boundary
    sphi = -2 * phi_sign * alpha.im + p * k.mphi + k.cphi
    s2 = 2 * newton_frob2(alpha, p, k.u).re + p * p * k.m2 + k.c2 + k.e * (boundary * boundary - 2 * p)
    return s1, sphi, s2


def extraction_identities(
    record: CountRecord,
    alpha: GaussianInt,
    constants: LawConstants,
    boundary: Optional[int] = None,
    phi_sign: int = 1,
) -> bool:
    if boundary is None:
        boundary = _boundary(record.z, record.p) if constants.e else 0
    s1, sphi, s2 = predicted_sums(alpha, record.p, constants, boundary, phi_sign)
    if (s1, sphi) != (record.S1, record.Sphi):
        return False
    return record.S2 is None or s2 == record.S2


def is_pure(alpha: GaussianInt, p: int, unit: GaussianInt = ONE, tol: float = PURITY_TOL) -> bool:
    if alpha.norm > 9 * p * p:
        return False
    return max_modulus_deviation(alpha, p, unit) <= tol


# --- calibration ---------------------------------------------------------


@dataclass
class _Prime:
    p: int
    S1: int
    Sphi: int
    S2: int
    aE: int


def _first_prime_survivors(q: _Prime, r_max: int, c_max: int, e: int, u: GaussianInt) -> np.ndarray:
    """All (m1, c1, mphi, cphi, m2, c2) consistent at one prime, as rows of an int64 array."""
    p = q.p
    m = np.arange(-r_max, r_max + 1, dtype=np.int64)
    c = np.arange(-c_max, c_max + 1, dtype=np.int64)
    mm, cc = (a.ravel() for a in np.meshgrid(m, c, indexing="ij"))
    num1 = q.S1 - p * mm - cc - e * q.aE
    ok1 = num1 % 2 == 0
    m1, c1, R = mm[ok1], cc[ok1], num1[ok1] // 2
    numphi = q.Sphi - p * mm - cc
    ok2 = numphi % 2 == 0
    mphi, cphi, I = mm[ok2], cc[ok2], -numphi[ok2] // 2
    # outer product over (R, I)
    Rg = np.repeat(R, len(I))
    Ig = np.tile(I, len(R))
    weil = Rg * Rg + Ig * Ig <= 9 * p * p
    i1 = np.repeat(np.arange(len(R)), len(I))[weil]
    i2 = np.tile(np.arange(len(I)), len(R))[weil]
    Rg, Ig = Rg[weil], Ig[weil]
    f = 2 * (Rg * Rg - Ig * Ig) - 4 * p * (u.re * Rg + u.im * Ig) + e * (q.aE * q.aE - 2 * p)
    resid = q.S2 - f
    rows = []
    p2 = p * p
    base = np.floor_divide(resid + c_max, p2)
    # every m2 with |resid - p^2 m2| <= c_max; more than one only when p^2 <= 2 c_max
    for shift in range(0, (2 * c_max) // p2 + 1):
        m2 = base - shift
        c2 = resid - p2 * m2
        keep = (np.abs(c2) <= c_max) & (np.abs(m2) <= r_max)
        rows.append(
            np.stack(
                [m1[i1[keep]], c1[i1[keep]], mphi[i2[keep]], cphi[i2[keep]], m2[keep], c2[keep]], axis=1
            )
        )
    return np.concatenate(rows) if rows else np.zeros((0, 6), dtype=np.int64)


def _consistent_rows(rows: np.ndarray, q: _Prime, e: int, u: GaussianInt) -> np.ndarray:
    p = q.p
    m1, c1, mphi, cphi, m2, c2 = rows.T
    num1 = q.S1 - p * m1 - c1 - e * q.aE
    numphi = q.Sphi - p * mphi - cphi
    ok = (num1 % 2 == 0) & (numphi % 2 == 0)
    R, I = num1 // 2, -numphi // 2
    ok &= R * R + I * I <= 9 * p * p
    f = 2 * (R * R - I * I) - 4 * p * (u.re * R + u.im * I) + e * (q.aE * q.aE - 2 * p)
    ok &= q.S2 == f + p * p * m2 + c2
    return rows[ok]


def _alpha(q, k: LawConstants, phi_sign: int = 1) -> Optional[GaussianInt]:
    num1 = q.S1 - q.p * k.m1 - k.c1 - k.e * q.aE
    numphi = q.Sphi - q.p * k.mphi - k.cphi
    if num1 % 2 or numphi % 2:
        return None
    return GaussianInt(num1 // 2, -phi_sign * (numphi // 2))


def _calibrate_class(primes: Sequence[_Prime], r_max: int, c_max: int, e_max: int) -> list[LawConstants]:
    ordered = sorted(primes, key=lambda q: -q.p)
    out = []
    for u in UNITS:
        for e in range(-e_max, e_max + 1):
            rows = _first_prime_survivors(ordered[0], r_max, c_max, e, u)
            for q in ordered[1:]:
                if len(rows) == 0:
                    break
                rows = _consistent_rows(rows, q, e, u)
            for row in rows:
                k = LawConstants(*(int(v) for v in row), e=e, u=u)
                if all(is_pure(_alpha(q, k), q.p, u) for q in ordered):
                    out.append(k)
    return sorted(set(out), key=_sort_key)


def calibrate_law(
    records: Iterable[CountRecord],
    r_max: int = 40,
    c_max: int = 10,
    min_support: int = 3,
    e_max: int = 2,
    boundary: Optional[Callable[[int, int], int]] = None,
) -> CorrectionLaw:
    """Learn the per-class constants from oracle-verified records carrying S2.

    Classes with fewer than ``min_support`` primes are listed as unsupported;
    their primes cannot be resolved.  Raises NoConsistentLaw if a supported
    class admits no tuple, AmbiguousLaw (carrying the full law) if some
    class admits several.
    """
    boundary = boundary or _boundary
    recs = [r for r in records if r.S2 is not None and r.oracle_verified]
    if not recs:
        raise NoConsistentLaw("no oracle-verified records with S2 to calibrate on")
    zs = {r.z for r in recs}
    if len(zs) != 1:
        raise ValueError(f"calibration records mix several z values: {sorted(zs)}")
    z = zs.pop()
    groups: dict = {}
    for r in sorted(recs, key=lambda r: r.p):
        q = _Prime(r.p, r.S1, r.Sphi, r.S2, boundary(z, r.p) if e_max else 0)
        groups.setdefault(symbol_class(z, r.p), []).append(q)
    entries, support, unsupported = {}, {}, []
    failed = []
    for cls in sorted(groups):
        qs = groups[cls]
        support[cls] = len(qs)
        if len(qs) < min_support:
            log.warning("class %s has %d calibration primes (< %d); skipped", cls.code, len(qs), min_support)
            unsupported.append(cls)
            continue
        found = _calibrate_class(qs, r_max, c_max, e_max)
        log.info("class %s: %d primes, %d surviving tuples", cls.code, len(qs), len(found))
        if not found:
            failed.append(cls.code)
        else:
            entries[cls] = tuple(found)
    if not entries and not failed:
        raise NoConsistentLaw(f"no symbol class reaches min_support={min_support} calibration primes")
    if failed:
        raise NoConsistentLaw(f"no constant tuple fits classes {failed} within r_max={r_max}, c_max={c_max}")
    law = CorrectionLaw(z, entries, support, 1, tuple(unsupported))
    law = _fix_sign_convention(law, groups)
    if law.ambiguous:
        n = {c.code: len(v) for c, v in law.entries.items() if len(v) > 1}
        raise AmbiguousLaw(f"several constant tuples survive: {n}", law)
    return law


def _fix_sign_convention(law: CorrectionLaw, groups: dict) -> CorrectionLaw:
    """Choose the labelling with Im(alpha) > 0 at the smallest calibration prime where Im != 0."""
    best = None
    for cls, ks in law.entries.items():
        for q in groups[cls]:
            a = _alpha(q, ks[0])
            if a is not None and a.im != 0 and (best is None or q.p < best[0]):
                best = (q.p, a.im)
    if best is not None and best[1] < 0:
        return law.flipped()
    return law


# --- resolution ----------------------------------------------------------


@dataclass(frozen=True)
class TraceCandidate:
    p: int
    alpha: GaussianInt
    a: GaussianInt
    law_class: SymbolClass
    ambiguous: bool = False
    siblings: tuple = ()  # alternative values of a

    def __post_init__(self):
        bound = 9 * self.p * self.p
        for v in (self.a,) + tuple(self.siblings):
            if v.norm > bound:
                raise ValueError(f"candidate {v} violates the Weil bound at p={self.p}")

    @property
    def candidates(self) -> tuple:
        return (self.a,) + tuple(self.siblings)


@dataclass(frozen=True)
class EulerFactor:
    p: int
    coeffs: tuple  # (1, -a, conj(a) p, -p^3)

    def __post_init__(self):
        one, c2, c1, c0 = self.coeffs
        if one != ONE or c0 != GaussianInt(-self.p**3, 0) or c1 != (-c2).conjugate() * self.p:
            raise ValueError("coefficients do not have the shape X^3 - aX^2 + conj(a)pX - p^3")

    @property
    def a(self) -> GaussianInt:
        return -self.coeffs[1]


def euler_factor(a: GaussianInt, p: int) -> EulerFactor:
    return EulerFactor(p, (ONE, -a, a.conjugate() * p, GaussianInt(-p**3, 0)))


def apply_twist(alpha: GaussianInt, p: int, epsilon) -> GaussianInt:
    """a_p = epsilon(p) alpha_p; ``epsilon`` is a DirichletCharacter or a unit."""
    if isinstance(epsilon, DirichletCharacter):
        return epsilon(p) * alpha
    if isinstance(epsilon, GaussianInt):
        if epsilon not in UNITS:
            raise ValueError("twist value must be a 4th root of unity")
        return epsilon * alpha
    raise TypeError("epsilon must be a DirichletCharacter or a GaussianInt unit")


def resolve_trace(
    record: CountRecord,
    law: CorrectionLaw,
    epsilon: Optional[DirichletCharacter] = None,
    boundary: Optional[int] = None,
    tol: float = PURITY_TOL,
) -> TraceCandidate:
    """Candidate traces at one prime.

    ``epsilon=None`` twists by the calibrated unit of the class, which makes
    Q_p(X) = X^3 - aX^2 + conj(a)pX - p^3 pure; a configured character is
    applied instead when given.
    """
    p = record.p
    cls = symbol_class(record.z, p)
    consts = law.constants_for(cls)
    if not consts:
        raise EmptyCandidateSet(f"p={p}: no calibrated law for class {cls.code}")
    if boundary is None and any(k.e for k in consts):
        boundary = _boundary(record.z, p)
    q = _Prime(p, record.S1, record.Sphi, record.S2, boundary or 0)
    found: dict = {}
    for k in consts:
        alpha = _alpha(q, k, law.phi_sign)
        if alpha is None or alpha.norm > 9 * p * p:
            continue
        if not extraction_identities(record, alpha, k, q.aE, law.phi_sign):
            continue
        if not is_pure(alpha, p, k.u, tol):
            continue
        a = k.u * alpha if epsilon is None else apply_twist(alpha, p, epsilon)
        found.setdefault(a, alpha)
    if not found:
        raise EmptyCandidateSet(f"p={p}: no trace satisfies the law, Weil bound and purity")
    values = sorted(found, key=lambda g: (g.re, g.im))
    a0 = values[0]
    return TraceCandidate(p, found[a0], a0, cls, len(values) > 1, tuple(values[1:]))
