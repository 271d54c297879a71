"""Structure probes on trace sequences: dihedral vanishing patterns and moments."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from sympy import primefactors

from .characters import DirichletCharacter, dirichlet_characters, fundamental_discriminants, legendre
from .gaussian import GaussianInt

FLAGGED = "flagged"
CLEAR = "clear"
INSUFFICIENT = "insufficient_data"

GROUPS = ("full_unitary_rank3", "torus_normalizer_order3", "torus_normalizer_s3", "diagonal_torus")
SUBSTREAMS = 16  # fixed, so Monte Carlo output does not depend on the worker count


# --- dihedral probe ----------------------------------------------------------


@dataclass(frozen=True)
class DihedralRow:
    d: int
    inert: int
    vanishing: int
    verdict: str

    @property
    def fraction(self) -> float:
        return self.vanishing / self.inert if self.inert else 0.0


@dataclass(frozen=True)
class DihedralReport:
    label: str
    N: int
    rows: tuple  # DihedralRow per discriminant

    @property
    def flagged(self) -> list[int]:
        return [r.d for r in self.rows if r.verdict == FLAGGED]

    def row(self, d: int) -> DihedralRow:
        return next(r for r in self.rows if r.d == d)

    def csv_rows(self) -> list[tuple]:
        return [(self.label, r.d, r.inert, r.vanishing, f"{r.fraction:.6f}", r.verdict) for r in self.rows]


def dihedral_probe(
    traces: Mapping[int, GaussianInt],
    N: int,
    disc_bound: int = 100,
    min_inert: int = 20,
    threshold: float = 0.95,
    label: str = "a_p",
) -> DihedralReport:
    """For each quadratic field ramified only over 2N, the share of inert primes with zero trace."""
    if not traces:
        raise ValueError("dihedral probe needs a nonempty trace map")
    if N == 0:
        raise ValueError("N must be nonzero")
    support = set(primefactors(2 * abs(N)))
    primes = sorted(p for p in traces if p > 2 and (2 * N) % p != 0)
    rows = []
    for d in fundamental_discriminants(disc_bound):
        if not set(primefactors(abs(d))) <= support:
            continue
        inert = [p for p in primes if legendre(d, p) == -1]
        vanish = sum(1 for p in inert if not traces[p])
        if len(inert) < min_inert:
            verdict = INSUFFICIENT
        elif vanish >= threshold * len(inert):
            verdict = FLAGGED
        else:
            verdict = CLEAR
        rows.append(DihedralRow(d, len(inert), vanish, verdict))
    return DihedralReport(label, N, tuple(rows))


@dataclass(frozen=True)
class PieceHypothesis:
    """b_p = a_p - chi(p) p, or b_p = a_p when ``character`` is None."""

    label: str
    character: Optional[DirichletCharacter]

    def apply(self, traces: Mapping[int, GaussianInt]) -> dict:
        if self.character is None:
            return dict(traces)
        m = self.character.modulus
        return {p: a - self.character(p) * p for p, a in traces.items() if math.gcd(p, m) == 1}


def character_piece_hypotheses(N: int, max_order: int = 4) -> list[PieceHypothesis]:
    """The no-split hypothesis plus one per character mod N of order dividing max_order."""
    if N < 1:
        raise ValueError("N must be positive")
    hyps = [PieceHypothesis("none", None)]
    for chi in dirichlet_characters(N, max_order):
        hyps.append(PieceHypothesis(chi.label, chi))
    return hyps


# --- Haar references -----------------------------------------------------------


@dataclass(frozen=True)
class Moments:
    """Moments of a complex sample T with standard errors."""

    n: int
    mean: complex
    abs2: float
    sq: complex
    abs4: float
    se_mean: float
    se_abs2: float
    se_sq: float
    se_abs4: float

    def vector(self) -> np.ndarray:
        return np.array([abs(self.mean), self.abs2, abs(self.sq), self.abs4])


def sample_moments(t: np.ndarray) -> Moments:
    t = np.asarray(t, dtype=complex)
    n = len(t)
    if n == 0:
        raise ValueError("no samples")
    a2 = np.abs(t) ** 2
    sq = t * t
    a4 = a2 * a2
    rt = math.sqrt(n)

    def cse(x):
        return float(np.sqrt(np.var(x.real) + np.var(x.imag)) / rt)

    return Moments(
        n,
        complex(t.mean()),
        float(a2.mean()),
        complex(sq.mean()),
        float(a4.mean()),
        cse(t),
        float(a2.std() / rt),
        cse(sq),
        float(a4.std() / rt),
    )


def _haar_traces(group_id: str, n: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    if group_id == "full_unitary_rank3":
        z = (rng.standard_normal((n, 3, 3)) + 1j * rng.standard_normal((n, 3, 3))) / math.sqrt(2)
        q, r = np.linalg.qr(z)
        d = np.diagonal(r, axis1=1, axis2=2)
        # fix the phases so q is Haar distributed
        return np.einsum("kii->k", q * (d / np.abs(d))[:, None, :])
    theta = rng.uniform(0.0, 2 * math.pi, size=(n, 3))
    eig = np.exp(1j * theta)
    torus = eig.sum(axis=1)
    if group_id == "diagonal_torus":
        return torus
    # uniform on components; only identity and transposition components have nonzero trace
    comp = rng.integers(0, 3 if group_id == "torus_normalizer_order3" else 6, size=n)
    if group_id == "torus_normalizer_order3":
        return np.where(comp == 0, torus, 0)
    if group_id == "torus_normalizer_s3":
        # components: 0 identity, 1-3 transpositions (trace = the fixed coordinate), 4-5 three-cycles
        return np.where(comp == 0, torus, np.where(comp <= 3, eig[:, 0], 0))
    raise ValueError(f"unknown group {group_id!r}")


def _substream_job(args):
    group_id, n, seed_seq = args
    return _haar_traces(group_id, n, seed_seq)


def haar_reference_moments(group_id: str, samples: int, seed: int, workers: int = 1) -> Moments:
    """Monte Carlo moments of Tr(g) under Haar measure on the named group."""
    if group_id not in GROUPS:
        raise ValueError(f"unknown group {group_id!r}; expected one of {GROUPS}")
    if samples < 10_000:
        raise ValueError("haar_reference_moments needs at least 10^4 samples")
    streams = np.random.SeedSequence(seed).spawn(SUBSTREAMS)
    sizes = [samples // SUBSTREAMS + (1 if k < samples % SUBSTREAMS else 0) for k in range(SUBSTREAMS)]
    jobs = [(group_id, n, s) for n, s in zip(sizes, streams)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_substream_job, jobs))
    else:
        parts = [_substream_job(j) for j in jobs]
    return sample_moments(np.concatenate(parts))


_CACHE_FIELDS = ("mean_re", "mean_im", "abs2", "sq_re", "sq_im", "abs4", "se_mean", "se_abs2", "se_sq", "se_abs4")


def reference_table(
    samples: int,
    seed: int,
    cache: Optional[Path] = None,
    groups: Sequence[str] = GROUPS,
    workers: int = 1,
) -> dict:
    """Reference moments per group, read from / appended to a text cache keyed by (group, samples, seed)."""
    stored = {}
    if cache is not None and Path(cache).exists():
        for line in Path(cache).read_text(encoding="utf-8").splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            g, n, s, *vals = line.split()
            v = [float(x) for x in vals]
            stored[(g, int(n), int(s))] = Moments(
                int(n), complex(v[0], v[1]), v[2], complex(v[3], v[4]), v[5], v[6], v[7], v[8], v[9]
            )
    out, new = {}, []
    for g in groups:
        key = (g, samples, seed)
        if key not in stored:
            stored[key] = haar_reference_moments(g, samples, seed, workers)
            new.append(key)
        out[g] = stored[key]
    if cache is not None and new:
        lines = ["# group samples seed " + " ".join(_CACHE_FIELDS)]
        for (g, n, s), m in sorted(stored.items()):
            vals = [m.mean.real, m.mean.imag, m.abs2, m.sq.real, m.sq.imag, m.abs4, m.se_mean, m.se_abs2, m.se_sq, m.se_abs4]
            lines.append(f"{g} {n} {s} " + " ".join(repr(float(x)) for x in vals))
        tmp = Path(cache).with_suffix(".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        tmp.replace(cache)
    return out


# --- moment diagnostics ----------------------------------------------------------


@dataclass(frozen=True)
class MomentReport:
    empirical: Moments
    distances: tuple  # ((group, L2 distance), ...) sorted ascending

    @property
    def nearest(self) -> str:
        return self.distances[0][0]


def normalized_traces(traces: Mapping[int, GaussianInt]) -> np.ndarray:
    vals = np.array([complex(a) / p for p, a in sorted(traces.items())])
    if np.any(np.abs(vals) > 3 + 1e-12):
        raise AssertionError("a normalized trace exceeds 3 in absolute value; extraction is broken")
    return vals


def moment_diagnostics(traces: Mapping[int, GaussianInt], reference: Mapping[str, Moments]) -> MomentReport:
    if not traces:
        raise ValueError("moment diagnostics need a nonempty trace map")
    emp = sample_moments(normalized_traces(traces))
    dist = sorted(
        ((g, float(np.linalg.norm(emp.vector() - m.vector()))) for g, m in reference.items()),
        key=lambda t: (t[1], t[0]),
    )
    return MomentReport(emp, tuple(dist))


def histogram(values: Sequence[float], edges: Sequence[float]) -> list[int]:
    counts, _ = np.histogram(np.asarray(values, dtype=float), bins=np.asarray(edges, dtype=float))
    return [int(c) for c in counts]
