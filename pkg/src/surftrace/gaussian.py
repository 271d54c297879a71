"""Exact arithmetic in Z[i]: norms, the discs C_r, places of Q(i) and residue fields."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Union

_TOKEN = re.compile(r"^(-?\d+)([+-])(\d+)i$")


@dataclass(frozen=True, slots=True)
class GaussianInt:
    """An element re + im*i of Z[i] with unbounded integer components."""

    re: int = 0
    im: int = 0

    def __post_init__(self):
        if not isinstance(self.re, int) or not isinstance(self.im, int):
            raise TypeError("GaussianInt components must be Python ints")

    @classmethod
    def coerce(cls, v: Union["GaussianInt", int]) -> "GaussianInt":
        if isinstance(v, GaussianInt):
            return v
        return cls(int(v), 0)

    def __add__(self, other):
        o = GaussianInt.coerce(other)
        return GaussianInt(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussianInt.coerce(other)
        return GaussianInt(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussianInt.coerce(other) - self

    def __mul__(self, other):
        o = GaussianInt.coerce(other)
        return GaussianInt(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __neg__(self):
        return GaussianInt(-self.re, -self.im)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not defined in Z[i]")
        out, base = ONE, self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __bool__(self):
        return bool(self.re or self.im)

    def conjugate(self) -> "GaussianInt":
        return GaussianInt(self.re, -self.im)

    @property
    def norm(self) -> int:
        return self.re * self.re + self.im * self.im

    def exact_div(self, other: Union["GaussianInt", int]) -> "GaussianInt":
        """Quotient self/other; raises ValueError if other does not divide self."""
        o = GaussianInt.coerce(other)
        n = o.norm
        if n == 0:
            raise ZeroDivisionError("division by zero in Z[i]")
        num = self * o.conjugate()
        if num.re % n or num.im % n:
            raise ValueError(f"{o} does not divide {self}")
        return GaussianInt(num.re // n, num.im // n)

    def divides(self, other: "GaussianInt") -> bool:
        n = self.norm
        if n == 0:
            return not other
        num = other * self.conjugate()
        return num.re % n == 0 and num.im % n == 0

    def __complex__(self):
        return complex(self.re, self.im)

    def __str__(self):
        return format_gaussian(self)

    def __repr__(self):
        return f"GaussianInt({self.re}, {self.im})"


ZERO = GaussianInt(0, 0)
ONE = GaussianInt(1, 0)
I = GaussianInt(0, 1)
UNITS = (ONE, I, -ONE, -I)


def format_gaussian(a: GaussianInt) -> str:
    """Canonical text form, e.g. ``3-2i``, ``0+0i``, ``-4+1i``."""
    sign = "-" if a.im < 0 else "+"
    return f"{a.re}{sign}{abs(a.im)}i"


def parse_gaussian(token: str) -> GaussianInt:
    m = _TOKEN.match(token)
    if m is None:
        raise ValueError(f"malformed Gaussian integer token {token!r}")
    re_s, sign, im_s = m.groups()
    if re_s.lstrip("-") != str(int(re_s.lstrip("-"))) or im_s != str(int(im_s)):
        raise ValueError(f"malformed Gaussian integer token {token!r} (leading zeros)")
    if re_s == "-0":
        raise ValueError(f"malformed Gaussian integer token {token!r} (negative zero)")
    im = int(im_s)
    if sign == "-":
        if im == 0:
            raise ValueError(f"malformed Gaussian integer token {token!r} (negative zero)")
        im = -im
    return GaussianInt(int(re_s), im)


def norm(a: GaussianInt) -> int:
    return a.norm


def in_disc(a: GaussianInt, r: int) -> bool:
    """Membership in C_r, decided by the integer comparison norm(a) <= r^2."""
    return a.norm <= r * r


def rational_divides(p: int, a: GaussianInt) -> bool:
    return a.re % p == 0 and a.im % p == 0


def scaled_disc_member(a: GaussianInt, p: int, r: int) -> bool:
    """True iff a lies in p*C_r."""
    if not rational_divides(p, a):
        return False
    return in_disc(GaussianInt(a.re // p, a.im // p), r)


@dataclass(frozen=True, slots=True)
class QiPlace:
    """A finite place of Q(i) lying over the rational prime p.

    ``generator`` is the canonical Gaussian prime (re > im > 0) for split
    places, 1+i for the ramified place, and p itself for inert places.
    """

    p: int
    kind: str
    generator: GaussianInt

    def __post_init__(self):
        if self.kind not in ("split", "inert", "ramified"):
            raise ValueError(f"unknown place kind {self.kind!r}")

    @property
    def residue_cardinality(self) -> int:
        return self.p * self.p if self.kind == "inert" else self.p

    @property
    def code(self) -> str:
        return self.kind[0]

    def conjugate(self) -> "QiPlace":
        if self.kind != "split":
            return self
        g = self.generator
        return QiPlace(self.p, "split", g.conjugate())


def two_squares(p: int) -> tuple[int, int]:
    """Return (a, b) with a > b > 0 and a^2 + b^2 = p, for primes p = 1 mod 4."""
    for b in range(1, math.isqrt(p // 2) + 1):
        a2 = p - b * b
        a = math.isqrt(a2)
        if a * a == a2 and a > b:
            return a, b
    raise ValueError(f"{p} is not a sum of two distinct squares")


def split_prime(p: int) -> QiPlace:
    """Classify the rational prime p in Z[i]; split places carry a norm-p generator."""
    if p == 2:
        return QiPlace(2, "ramified", GaussianInt(1, 1))
    if p % 4 == 3:
        return QiPlace(p, "inert", GaussianInt(p, 0))
    a, b = two_squares(p)
    return QiPlace(p, "split", GaussianInt(a, b))


def places_over(p: int) -> list[QiPlace]:
    v = split_prime(p)
    if v.kind == "split":
        return [v, QiPlace(p, "split", v.generator.conjugate())]
    return [v]


def place_valuation(a: GaussianInt, v: QiPlace) -> Union[int, float]:
    """Valuation of a at v; ``math.inf`` for a = 0."""
    if not a:
        return math.inf
    k = 0
    if v.kind == "inert":
        while a.re % v.p == 0 and a.im % v.p == 0:
            a = GaussianInt(a.re // v.p, a.im // v.p)
            k += 1
        return k
    g = v.generator
    while g.divides(a):
        a = a.exact_div(g)
        k += 1
    return k


def sqrt_minus_one(v: QiPlace) -> int:
    """Image of i in F_l for a split (or ramified) place: the root of -1 with g = 0."""
    g = v.generator
    if v.kind == "inert":
        raise ValueError("inert places have residue field F_{l^2}; i has no image in F_l")
    # g0 + g1*i = 0  =>  i = -g0/g1
    return (-g.re * pow(g.im, -1, v.p)) % v.p


def reduce_mod_place(a: GaussianInt, v: QiPlace):
    """Image of a in the residue field at v.

    Split/ramified places give an int in F_l; inert places give a pair
    (c0, c1) meaning c0 + c1*i in F_l[i] = F_{l^2}.
    """
    if v.kind == "inert":
        return (a.re % v.p, a.im % v.p)
    r = sqrt_minus_one(v)
    return (a.re + a.im * r) % v.p


class ResidueField:
    """Arithmetic in the residue field of a place of Q(i).

    Elements use the representation returned by :func:`reduce_mod_place`.
    """

    def __init__(self, v: QiPlace):
        self.place = v
        self.l = v.p
        self.inert = v.kind == "inert"
        self.q = v.residue_cardinality

    def reduce(self, a: GaussianInt):
        return reduce_mod_place(a, self.place)

    def from_int(self, n: int):
        return (n % self.l, 0) if self.inert else n % self.l

    @property
    def zero(self):
        return self.from_int(0)

    @property
    def one(self):
        return self.from_int(1)

    def add(self, x, y):
        if self.inert:
            return ((x[0] + y[0]) % self.l, (x[1] + y[1]) % self.l)
        return (x + y) % self.l

    def neg(self, x):
        if self.inert:
            return (-x[0] % self.l, -x[1] % self.l)
        return -x % self.l

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def mul(self, x, y):
        if self.inert:
            l = self.l
            return ((x[0] * y[0] - x[1] * y[1]) % l, (x[0] * y[1] + x[1] * y[0]) % l)
        return (x * y) % self.l

    def inv(self, x):
        if self.inert:
            n = (x[0] * x[0] + x[1] * x[1]) % self.l
            ni = pow(n, -1, self.l)
            return (x[0] * ni % self.l, -x[1] * ni % self.l)
        return pow(x, -1, self.l)

    def is_zero(self, x) -> bool:
        return x == self.zero

    def elements(self) -> Iterator:
        l = self.l
        if self.inert:
            for c0 in range(l):
                for c1 in range(l):
                    yield (c0, c1)
        else:
            yield from range(l)
