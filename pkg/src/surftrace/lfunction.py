"""Dirichlet coefficients and partial Euler products of the degree-3 L-function."""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .extraction import EulerFactor, euler_factor
from .gaussian import ONE, ZERO, GaussianInt

POLE_EPS = 1e-12

WEIGHT_NOTE = (
    "# normalization: the roots of Q_p are taken to have absolute value p, so the Euler "
    "product converges for Re(s) > 2. In the |root| = p^(w/2) convention this is weight 2; "
    "a weight-1 normalization (|root| = sqrt(p)) is also mentioned for this system and is not used."
)


class PoleError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LSeries:
    """Euler factors at good primes; primes without a factor contribute 1."""

    factors: Mapping[int, EulerFactor]
    omitted: tuple = ()  # bad or unresolved primes, reported

    @classmethod
    def from_traces(cls, traces: Mapping[int, GaussianInt], omitted: Sequence[int] = ()) -> "LSeries":
        return cls({p: euler_factor(a, p) for p, a in sorted(traces.items())}, tuple(sorted(omitted)))

    def trace(self, p: int) -> Optional[GaussianInt]:
        f = self.factors.get(p)
        return None if f is None else f.a


def _spf_sieve(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for k in range(2, n + 1):
        if spf[k] == 0:
            spf[k::k][spf[k::k] == 0] = k
    return spf


def dirichlet_coeffs(series: LSeries, N: int) -> list[GaussianInt]:
    """Exact c_1..c_N (index 0 unused, set to 0)."""
    c = [ZERO] * (N + 1)
    if N >= 1:
        c[1] = ONE
    if N < 2:
        return c
    spf = _spf_sieve(N)
    prime_powers: dict = {}
    for n in range(2, N + 1):
        p = int(spf[n])
        m, k = n, 0
        while m % p == 0:
            m //= p
            k += 1
        if m > 1:
            c[n] = c[n // m] * c[m]
            continue
        # n = p^k
        pw = prime_powers.setdefault(p, [ONE])
        a = series.trace(p)
        if a is None:
            pw.append(ZERO)
        else:
            prev1 = pw[k - 1]
            prev2 = pw[k - 2] if k >= 2 else ZERO
            prev3 = pw[k - 3] if k >= 3 else ZERO
            pw.append(a * prev1 - a.conjugate() * p * prev2 + p**3 * prev3)
        c[n] = pw[k]
    return c


def dirichlet_sum(series: LSeries, s: complex, N: int) -> complex:
    """sum_{n <= N} c_n n^(-s)."""
    c = dirichlet_coeffs(series, N)
    return complex(sum(complex(c[n]) * n ** (-s) for n in range(1, N + 1)))


def local_factor_inverse(a: GaussianInt, p: int, s: complex) -> complex:
    """1 - a p^-s + conj(a) p^(1-2s) - p^(3-3s)."""
    t = p ** (-s)
    return 1 - complex(a) * t + complex(a.conjugate()) * p * t * t - p**3 * t**3


def partial_L(series: LSeries, s: complex, P: int) -> complex:
    """Product over primes p <= P with a factor, folded in increasing p."""
    value = 1 + 0j
    for p in sorted(series.factors):
        if p > P:
            break
        inv = local_factor_inverse(series.factors[p].a, p, s)
        if abs(inv) < POLE_EPS:
            raise PoleError(f"local factor at p={p}, s={s} is {inv!r} (within {POLE_EPS} of 0)")
        value /= inv
    return value


@dataclass(frozen=True)
class ConvergenceRow:
    s: complex
    P: int
    value: complex
    rel_diff: float  # relative change from the previous grid point


def convergence_report(series: LSeries, s: complex, P_grid: Sequence[int]) -> list[ConvergenceRow]:
    if complex(s).real <= 2:
        raise ValueError("convergence diagnostics are only meaningful for Re(s) > 2")
    grid = sorted(P_grid)
    values = [partial_L(series, s, P) for P in grid]
    return [
        ConvergenceRow(s, grid[k], values[k], abs(values[k] - values[k - 1]) / abs(values[k - 1]))
        for k in range(1, len(grid))
    ]
