"""Finite-field contexts for F_p, F_{p^2} and F_{p^4}.

Elements are tuples of components, each either a Python int or an int64
numpy array, so the same arithmetic drives scalar oracles and the bulk
kernels.  F_{p^2} = F_p[u]/(u^2 - n) with n the least nonresidue, and
F_{p^4} = F_{p^2}[w]/(w^2 - nu) with nu a canonical nonsquare of F_{p^2};
an F_{p^4} element (a0, a1, a2, a3) stands for (a0 + a1 u) + (a2 + a3 u) w.
"""

from __future__ import annotations

from functools import cached_property
from typing import Iterator

import numpy as np


def quad_char_table(p: int) -> np.ndarray:
    """Legendre symbol table of length p, built by squaring every residue."""
    table = np.full(p, -1, dtype=np.int8)
    table[0] = 0
    r = np.arange(1, p, dtype=np.int64)
    table[(r * r) % p] = 1
    return table


def nonresidue_search(p: int) -> int:
    table = quad_char_table(p)
    for n in range(2, p):
        if table[n] == -1:
            return n
    raise ValueError(f"no quadratic nonresidue mod {p}")


class PrimeFieldCtx:
    """F_p with a precomputed quadratic-character table."""

    degree = 1

    def __init__(self, p: int):
        if p < 3 or p % 2 == 0:
            raise ValueError(f"PrimeFieldCtx needs an odd prime, got {p}")
        self.p = p
        self.table = quad_char_table(p)
        self.table.setflags(write=False)

    @property
    def order(self) -> int:
        return self.p

    def quad_char(self, v):
        if isinstance(v, np.ndarray):
            return self.table[v]
        return int(self.table[v % self.p])

    # arithmetic on ints or arrays already reduced mod p
    def const(self, c: int, like=None):
        c %= self.p
        if like is None:
            return c
        return np.full(np.shape(like), c, dtype=np.int64)

    def add(self, x, y):
        return (x + y) % self.p

    def sub(self, x, y):
        return (x - y) % self.p

    def neg(self, x):
        return (-x) % self.p

    def mul(self, x, y):
        return (x * y) % self.p

    def frobenius(self, x):
        return x

    def elements(self) -> np.ndarray:
        return np.arange(self.p, dtype=np.int64)


class ExtFieldCtx:
    """F_{p^2} or F_{p^4} as a tower over F_p."""

    def __init__(self, base: PrimeFieldCtx, degree: int):
        if degree not in (2, 4):
            raise ValueError("degree must be 2 or 4")
        self.base = base
        self.p = base.p
        self.degree = degree
        self.n = nonresidue_search(self.p)
        self.nu = self._find_nu() if degree == 4 else None

    @property
    def order(self) -> int:
        return self.p**self.degree

    # --- F_{p^2} layer -------------------------------------------------
    def _m2(self, a, b):
        p = self.p
        return ((a[0] * b[0] + self.n * (a[1] * b[1] % p)) % p, (a[0] * b[1] + a[1] * b[0]) % p)

    def norm2(self, a):
        """Norm F_{p^2} -> F_p, a^(p+1) = a0^2 - n a1^2."""
        p = self.p
        return (a[0] * a[0] - self.n * (a[1] * a[1] % p)) % p

    def _find_nu(self):
        # canonical nonsquare of F_{p^2}: least (c1, c0) in lexicographic order
        chi = self.base.table
        for c1 in range(1, self.p):
            for c0 in range(self.p):
                if chi[self.norm2((c0, c1))] == -1:
                    return (c0, c1)
        raise ArithmeticError(f"no nonsquare found in F_{self.p}^2")

    # --- generic element API -------------------------------------------
    def const(self, c: int, like=None):
        c %= self.p
        if like is None:
            head, zero = c, 0
        else:
            head = np.full(np.shape(like), c, dtype=np.int64)
            zero = np.zeros(np.shape(like), dtype=np.int64)
        return (head,) + (zero,) * (self.degree - 1)

    def embed(self, x):
        """Embed an F_p value (int or array) as an element of this field."""
        zero = np.zeros_like(x) if isinstance(x, np.ndarray) else 0
        return (x % self.p,) + (zero,) * (self.degree - 1)

    def add(self, x, y):
        return tuple((a + b) % self.p for a, b in zip(x, y))

    def sub(self, x, y):
        return tuple((a - b) % self.p for a, b in zip(x, y))

    def neg(self, x):
        return tuple((-a) % self.p for a in x)

    def mul(self, x, y):
        if self.degree == 2:
            return self._m2(x, y)
        a, b = (x[0], x[1]), (x[2], x[3])
        c, d = (y[0], y[1]), (y[2], y[3])
        # structurally zero halves (plain int 0) are skipped; the Frobenius
        # kernel lives entirely in the w-half, so this roughly triples speed
        ac = self._m2z(a, c)
        bd = self._m2z(b, d)
        nbd = self._m2z(self.nu, bd)
        ad = self._m2z(a, d)
        bc = self._m2z(b, c)
        p = self.p
        return (
            _addz(ac[0], nbd[0], p),
            _addz(ac[1], nbd[1], p),
            _addz(ad[0], bc[0], p),
            _addz(ad[1], bc[1], p),
        )

    def _m2z(self, a, b):
        if _zero_pair(a) or _zero_pair(b):
            return (0, 0)
        return self._m2(a, b)

    def pow(self, x, e: int):
        out = self.const(1)
        while e:
            if e & 1:
                out = self.mul(out, x)
            x = self.mul(x, x)
            e >>= 1
        return out

    def is_zero(self, x) -> bool:
        return all(int(c) == 0 for c in x)

    def in_base(self, x):
        """True (or boolean array) where x lies in the prime field."""
        if isinstance(x[0], np.ndarray):
            mask = np.ones(np.shape(x[0]), dtype=bool)
            for c in x[1:]:
                mask &= c == 0
            return mask
        return all(int(c) == 0 for c in x[1:])

    def quad_char(self, x):
        """Quadratic character of F_{p^2}, computed as chi_p(x^(p+1))."""
        if self.degree != 2:
            raise NotImplementedError("quadratic character only provided for F_{p^2}")
        return self.base.quad_char(self.norm2(x))

    @cached_property
    def char_table(self) -> np.ndarray:
        """Length-p^2 table of the quadratic character, indexed by a0 + p*a1."""
        a0 = np.tile(np.arange(self.p, dtype=np.int64), self.p)
        a1 = np.repeat(np.arange(self.p, dtype=np.int64), self.p)
        return self.base.table[self.norm2((a0, a1))]

    def quad_char_tabled(self, x):
        return self.char_table[x[0] + self.p * x[1]]

    def basis(self) -> list[tuple]:
        e = []
        for k in range(self.degree):
            e.append(tuple(1 if j == k else 0 for j in range(self.degree)))
        return e

    @cached_property
    def frobenius_matrix(self) -> np.ndarray:
        """Matrix M over F_p with coords(x^p) = M @ coords(x)."""
        cols = [self.pow(b, self.p) for b in self.basis()]
        return np.array(cols, dtype=np.int64).T % self.p

    def frobenius(self, x):
        m = self.frobenius_matrix
        out = []
        for r in range(self.degree):
            acc = x[0] * 0
            for c in range(self.degree):
                coef = int(m[r, c])
                if coef:
                    acc = acc + coef * x[c]
            out.append(acc % self.p)
        return tuple(out)

    def elements(self) -> tuple:
        """Every element, as a tuple of component arrays."""
        q = self.order
        idx = np.arange(q, dtype=np.int64)
        comps = []
        for _ in range(self.degree):
            comps.append(idx % self.p)
            idx = idx // self.p
        return tuple(comps)


def _zero_pair(a) -> bool:
    return type(a[0]) is int and type(a[1]) is int and a[0] == 0 and a[1] == 0


def _addz(u, v, p):
    if type(u) is int and u == 0:
        return v
    if type(v) is int and v == 0:
        return u
    return (u + v) % p


def quad_char(ctx: PrimeFieldCtx, v: int) -> int:
    return ctx.quad_char(v)


def quad_char_ext(ctx: ExtFieldCtx, v) -> int:
    return int(ctx.quad_char(v))


def nullspace_mod_p(mat: np.ndarray, p: int) -> list[np.ndarray]:
    """Basis of the right kernel of an integer matrix over F_p (Gauss-Jordan)."""
    a = [list(map(int, row)) for row in np.asarray(mat) % p]
    rows, cols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((k for k in range(r, rows) if a[k][c] % p), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], -1, p)
        a[r] = [v * inv % p for v in a[r]]
        for k in range(rows):
            if k != r and a[k][c]:
                f = a[k][c]
                a[k] = [(vk - f * vr) % p for vk, vr in zip(a[k], a[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [0] * cols
        vec[fc] = 1
        for i, pc in enumerate(pivots):
            vec[pc] = (-a[i][fc]) % p
        basis.append(np.array(vec, dtype=np.int64))
    return basis


class FrobeniusKernel:
    """The F_p-space {x in F_{p^4} : x^(p^2) + x = 0}, of dimension 2."""

    def __init__(self, ctx: ExtFieldCtx):
        if ctx.degree != 4:
            raise ValueError("the Frobenius kernel lives in F_{p^4}")
        p = ctx.p
        m = ctx.frobenius_matrix
        m2 = (m @ m) % p
        basis = nullspace_mod_p((m2 + np.eye(4, dtype=np.int64)) % p, p)
        if len(basis) != 2:
            raise ArithmeticError(
                f"kernel of x -> x^(p^2) + x has dimension {len(basis)} != 2 at p={p}"
            )
        self.ctx = ctx
        self.basis = basis

    def __len__(self) -> int:
        return self.ctx.p ** 2

    def batches(self, size: int = 1 << 18) -> Iterator[tuple]:
        """Yield the kernel elements i*b1 + j*b2 in fixed order, as component arrays."""
        p = self.ctx.p
        b1, b2 = self.basis
        total = p * p
        for start in range(0, total, size):
            k = np.arange(start, min(total, start + size), dtype=np.int64)
            i, j = k // p, k % p
            yield tuple(
                (i * int(b1[c]) + j * int(b2[c])) % p if (b1[c] or b2[c]) else 0
                for c in range(4)
            )


def frobenius_kernel(ctx: ExtFieldCtx) -> FrobeniusKernel:
    return FrobeniusKernel(ctx)
