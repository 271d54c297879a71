"""Dirichlet characters with values in the 4th roots of unity, and Kronecker symbols."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

from sympy import factorint, primitive_root

from .gaussian import ONE, UNITS, GaussianInt, format_gaussian, parse_gaussian


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for an odd prime p."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for n > 0."""
    if n <= 0:
        raise ValueError("kronecker symbol needs n > 0")
    result = 1
    for q, e in factorint(n).items():
        if q == 2:
            if d % 2 == 0:
                return 0
            val = 1 if d % 8 in (1, 7) else -1
        else:
            val = legendre(d, q)
        if val == 0:
            return 0
        result *= val**e
    return result


def is_fundamental_discriminant(d: int) -> bool:
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return _squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(abs(m))
    return False


def _squarefree(n: int) -> bool:
    return all(e == 1 for e in factorint(n).values())


def fundamental_discriminants(bound: int) -> list[int]:
    """Fundamental discriminants d with 0 < |d| <= bound, sorted by (|d|, sign)."""
    out = [d for d in range(-bound, bound + 1) if is_fundamental_discriminant(d)]
    return sorted(out, key=lambda d: (abs(d), d))


@dataclass(frozen=True)
class DirichletCharacter:
    """A character mod ``modulus`` given by its values on units, in {1, i, -1, -i}."""

    modulus: int
    values: tuple = field(repr=False)  # tuple of (residue, GaussianInt), sorted by residue
    label: str = ""

    def __post_init__(self):
        for r, v in self.values:
            if v not in UNITS:
                raise ValueError(f"character value {v} at {r} is not a 4th root of unity")
            if math.gcd(r, self.modulus) != 1:
                raise ValueError(f"residue {r} is not a unit mod {self.modulus}")

    def __call__(self, n: int) -> GaussianInt:
        if math.gcd(n, self.modulus) != 1:
            raise ValueError(f"character mod {self.modulus} is undefined at {n}")
        return dict(self.values)[n % self.modulus]

    @property
    def order(self) -> int:
        vals = {v for _, v in self.values}
        for k in (1, 2, 4):
            if all(v**k == ONE for v in vals):
                return k
        raise AssertionError("unreachable: values are 4th roots of unity")

    @property
    def is_trivial(self) -> bool:
        return all(v == ONE for _, v in self.values)

    def to_text(self) -> str:
        lines = [f"modulus = {self.modulus}"]
        lines += [f"{r} = {format_gaussian(v)}" for r, v in self.values]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DirichletCharacter":
        """Parse ``modulus = N`` followed by ``residue = value`` lines (``#`` comments)."""
        modulus = None
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key == "modulus":
                modulus = int(val)
            else:
                values[int(key)] = parse_gaussian(val)
        if modulus is None or modulus < 1:
            raise ValueError("character file needs a positive 'modulus'")
        units = [r for r in range(modulus) if math.gcd(r, modulus) == 1]
        if modulus == 1:
            units = [0]
            values.setdefault(0, ONE)
        missing = [r for r in units if r not in values]
        if missing:
            raise ValueError(f"character values missing for residues {missing}")
        chi = cls(modulus, tuple(sorted((r, values[r]) for r in units)))
        _check_multiplicative(chi)
        return chi


def _check_multiplicative(chi: DirichletCharacter):
    vals = dict(chi.values)
    m = chi.modulus
    for a, b in product(vals, repeat=2):
        if vals[a * b % m] != vals[a] * vals[b]:
            raise ValueError(f"character mod {m} is not multiplicative at ({a}, {b})")


def trivial_character(modulus: int = 1) -> DirichletCharacter:
    units = [r for r in range(modulus) if math.gcd(r, modulus) == 1] if modulus > 1 else [0]
    return DirichletCharacter(modulus, tuple((r, ONE) for r in units), "trivial")


def _cyclic_components(n: int):
    """Generators and orders of a decomposition of (Z/nZ)^x into cyclic factors,
    one list per prime power, as (modulus_part, generator, order)."""
    comps = []
    for q, e in sorted(factorint(n).items()):
        qe = q**e
        if q == 2:
            if e == 2:
                comps.append((qe, 3, 2))
            elif e >= 3:
                comps.append((qe, qe - 1, 2))
                comps.append((qe, 5, 2 ** (e - 2)))
        else:
            comps.append((qe, primitive_root(qe), qe // q * (q - 1)))
    return comps


def _dlog_tables(n: int, comps):
    """For every unit r mod n, its exponent vector on the cyclic generators."""
    units = [r for r in range(1, n) if math.gcd(r, n) == 1]
    # enumerate all exponent vectors and their products (CRT-combined)
    by_part: dict[int, list] = {}
    for idx, (qe, g, order) in enumerate(comps):
        by_part.setdefault(qe, []).append((idx, g, order))
    table = {}
    ranges = [range(order) for (_, _, order) in comps]
    for exps in product(*ranges):
        residues = []
        for qe, gens in by_part.items():
            val = 1
            for idx, g, _ in gens:
                val = val * pow(g, exps[idx], qe) % qe
            residues.append((qe, val))
        r = _crt(residues, n)
        table[r] = exps
    assert sorted(table) == units
    return table


def _crt(residues, n):
    x = 0
    for qe, r in residues:
        m = n // qe
        x += r * m * pow(m, -1, qe)
    return x % n


def dirichlet_characters(n: int, max_order: int = 4) -> list[DirichletCharacter]:
    """All characters mod n whose order divides max_order (max_order in {1, 2, 4}).

    Characters of every modulus dividing n appear here through their
    induced characters mod n.
    """
    if max_order not in (1, 2, 4):
        raise ValueError("max_order must be 1, 2 or 4")
    if n < 1:
        raise ValueError("modulus must be positive")
    if n <= 2:
        return [trivial_character(n)]
    comps = _cyclic_components(n)
    dlog = _dlog_tables(n, comps)
    choices = []
    for _, _, order in comps:
        k = math.gcd(order, max_order)
        # images of the generator: k-th roots of unity inside {1, i, -1, -i}
        step = 4 // k
        choices.append([UNITS[(j * step) % 4] for j in range(k)])
    chars = []
    for images in product(*choices):
        vals = []
        for r in sorted(dlog):
            v = ONE
            for img, e in zip(images, dlog[r]):
                v = v * img**e
            vals.append((r, v))
        chars.append(DirichletCharacter(n, tuple(vals)))
    chars.sort(key=lambda c: [(v.re, v.im) for _, v in c.values], reverse=True)
    out = []
    for k, c in enumerate(chars):
        out.append(DirichletCharacter(c.modulus, c.values, "trivial" if c.is_trivial else f"chi{n}_{k}"))
    return out
