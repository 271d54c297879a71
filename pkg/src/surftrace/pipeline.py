"""Stage orchestration over an output directory.

Every stage writes its products atomically and then a ``<stage>.done``
marker holding the fingerprint of the settings it depends on.  A stage
whose marker matches is a no-op.  Counting is chunked and resumable: rows
already in the table are kept, so an interrupted run picks up where it
stopped, and raising ``pmax`` extends the table.
"""

from __future__ import annotations

import cmath
import hashlib
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Optional

from sympy import primefactors

from .characters import DirichletCharacter
from .config import RunConfig
from .counting import SurfaceParams, count_primes, good_primes
from .extraction import (
    AmbiguousLaw,
    CorrectionLaw,
    EmptyCandidateSet,
    NoConsistentLaw,
    calibrate_law,
    resolve_trace,
)
from .gaussian import places_over
from .lfunction import WEIGHT_NOTE, LSeries, partial_L
from .probes import (
    GROUPS,
    character_piece_hypotheses,
    dihedral_probe,
    histogram,
    moment_diagnostics,
    normalized_traces,
    reference_table,
)
from .table import TableError, TraceRow, TraceTable, atomic_write
from .verification import (
    disc_census,
    ordinarity_census,
    ordinarity_classify,
    purity_check,
    residual_census,
    weil_bound_check,
)

log = logging.getLogger(__name__)

STAGES = ("count", "extract", "verify", "census", "probe", "lfunction", "report")
COUNT_CHUNK = 16
RESIDUAL_PRIMES = (13, 17)
EXIT_USAGE, EXIT_DATA, EXIT_VERSION, EXIT_COMPUTE = 2, 3, 4, 5


class PipelineError(RuntimeError):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


_STAGE_KEYS = {
    "count": ("z", "p2max", "verify_max"),
    "extract": ("z", "pmax", "p2max", "verify_max", "rmax", "cmax", "min_support", "emax", "epsilon"),
}
_STAGE_KEYS["verify"] = _STAGE_KEYS["extract"]
_STAGE_KEYS["census"] = _STAGE_KEYS["extract"]
_STAGE_KEYS["lfunction"] = _STAGE_KEYS["extract"]
_STAGE_KEYS["probe"] = _STAGE_KEYS["extract"] + (
    "seed",
    "mc_samples",
    "disc_bound",
    "min_inert",
    "vanish_threshold",
    "conductor",
)
_STAGE_KEYS["report"] = _STAGE_KEYS["probe"]


class Pipeline:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.params = SurfaceParams(cfg.z)

    # --- markers ---------------------------------------------------------
    def _stamp(self, stage: str) -> str:
        stamp = self.cfg.fingerprint(*_STAGE_KEYS[stage])
        return f"{stamp} pmax={self.cfg.pmax}\n" if stage == "count" else stamp + "\n"

    def _marker(self, stage: str) -> Path:
        return self.out / f"{stage}.done"

    def is_done(self, stage: str) -> bool:
        m = self._marker(stage)
        return m.exists() and m.read_text(encoding="utf-8") == self._stamp(stage)

    def _mark(self, stage: str) -> None:
        atomic_write(self._marker(stage), self._stamp(stage))

    def _require(self, stage: str) -> None:
        if not self.is_done(stage):
            raise PipelineError(
                f"stage '{stage}' has not been completed for this configuration in {self.out}; "
                f"run 'surftrace {stage}' first",
                EXIT_DATA,
            )

    # --- table -----------------------------------------------------------
    @property
    def table_path(self) -> Path:
        return self.out / "trace_table.csv"

    def load_table(self) -> TraceTable:
        try:
            table = TraceTable.read(self.table_path)
        except FileNotFoundError as exc:
            raise PipelineError(f"missing trace table {self.table_path}; run 'surftrace count' first", EXIT_DATA) from exc
        if table.rows and table.rows[0].z != self.cfg.z:
            raise PipelineError(f"trace table holds z={table.rows[0].z}, configuration says z={self.cfg.z}", EXIT_DATA)
        return table

    def rows(self) -> list[TraceRow]:
        return [r for r in self.load_table().rows if r.p <= self.cfg.pmax]

    def run(self, stage: str) -> bool:
        """Run one stage; returns False when it was already complete."""
        if stage not in STAGES:
            raise PipelineError(f"unknown stage {stage!r}", EXIT_USAGE)
        if self.is_done(stage):
            log.info("stage %s already complete", stage)
            return False
        getattr(self, f"_stage_{stage}")()
        self._mark(stage)
        return True

    # --- stages ----------------------------------------------------------
    def _stage_count(self) -> None:
        cfg = self.cfg
        self.out.mkdir(parents=True, exist_ok=True)
        cfg_path = self.out / "count.config"
        stamp = cfg.fingerprint(*_STAGE_KEYS["count"]) + "\n"
        if self.table_path.exists():
            if not cfg_path.exists() or cfg_path.read_text(encoding="utf-8") != stamp:
                raise PipelineError(
                    f"{self.table_path} was counted with different z/p2max/verify_max; use a fresh --out",
                    EXIT_DATA,
                )
            table = self.load_table()
        else:
            atomic_write(cfg_path, stamp)
            table = TraceTable()
        have = table.by_p()
        todo = [p for p in good_primes(self.params, cfg.pmax) if p not in have]
        log.info("count: %d primes to do, %d already in the table", len(todo), len(have))
        for start in range(0, len(todo), COUNT_CHUNK):
            chunk = todo[start : start + COUNT_CHUNK]
            for rec in count_primes(self.params, chunk, cfg.p2max, cfg.verify_max, cfg.workers):
                have[rec.p] = TraceRow.from_record(rec)
            table = TraceTable(sorted(have.values(), key=lambda r: r.p))
            table.write(self.table_path)
            log.info("count: through p=%d", chunk[-1])
        if not todo and not self.table_path.exists():
            table.write(self.table_path)

    def _epsilon(self) -> Optional[DirichletCharacter]:
        if not self.cfg.epsilon:
            return None
        try:
            return DirichletCharacter.from_text(Path(self.cfg.epsilon).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise PipelineError(f"epsilon file {self.cfg.epsilon}: {exc}", EXIT_DATA) from exc

    def _stage_extract(self) -> None:
        self._require("count")
        cfg = self.cfg
        table = self.load_table()
        rows = [r for r in table.rows if r.p <= cfg.pmax]
        try:
            law = calibrate_law(
                [r.record() for r in rows if r.p <= cfg.p2max],
                cfg.rmax,
                cfg.cmax,
                cfg.min_support,
                cfg.emax,
            )
            law_note = "unique"
        except AmbiguousLaw as exc:
            law, law_note = exc.law, "ambiguous (candidate-set mode)"
        except NoConsistentLaw as exc:
            raise PipelineError(f"calibration failed: {exc}", EXIT_COMPUTE) from exc
        eps = self._epsilon()
        quarantine = []
        new_rows = []
        for r in table.rows:
            cands = ()
            if r.p <= cfg.pmax:
                try:
                    cands = resolve_trace(r.record(), law, eps).candidates
                except EmptyCandidateSet as exc:
                    quarantine.append((r.p, str(exc)))
                except ValueError as exc:  # e.g. epsilon undefined at p
                    quarantine.append((r.p, f"p={r.p}: {exc}"))
            new_rows.append(TraceRow(r.z, r.p, r.S1, r.Sphi, r.S2, r.verified, cands))
        atomic_write(self.out / "law.txt", f"# calibration: {law_note}\n" + law.to_text())
        lines = ["p,reason"] + [f"{p},{reason.replace(',', ';')}" for p, reason in quarantine]
        atomic_write(self.out / "quarantine.csv", "\n".join(lines) + "\n")
        TraceTable(new_rows).write(self.table_path)
        log.info("extract: %d resolved, %d quarantined", len(rows) - len(quarantine), len(quarantine))

    def resolved(self) -> list[TraceRow]:
        return [r for r in self.rows() if r.cands]

    def unambiguous_traces(self) -> dict:
        return {r.p: r.cands[0] for r in self.resolved() if len(r.cands) == 1}

    def _stage_verify(self) -> None:
        self._require("extract")
        lines = ["p,candidate,norm,weil_ok,pure,ordinarity,witness"]
        for r in self.resolved():
            for a in r.cands:
                v = ordinarity_classify(r.p, a)
                wit = "|".join(f"{g}:{k}" for g, k in v.witness)
                lines.append(
                    f"{r.p},{a},{a.norm},{int(weil_bound_check(a, r.p))},{int(purity_check(a, r.p))},{v.verdict},{wit}"
                )
        atomic_write(self.out / "verification.csv", "\n".join(lines) + "\n")

    def _stage_census(self) -> None:
        self._require("extract")
        cands = self.resolved()
        if not cands:
            raise PipelineError("no resolved traces to census", EXIT_COMPUTE)
        reports = [ordinarity_census(cands), disc_census(cands, 3)]
        for l in RESIDUAL_PRIMES:
            for v in places_over(l):
                reports.append(residual_census(cands, v))
        lines = ["range,predicate,numerator,denominator"]
        for rep in reports:
            lines += [",".join(str(x) for x in row) for row in rep.csv_rows()]
        atomic_write(self.out / "census.csv", "\n".join(lines) + "\n")

    def conductor(self) -> int:
        if self.cfg.conductor:
            return self.cfg.conductor
        return math.prod(primefactors(self.params.bad_divisor))

    def _stage_probe(self) -> None:
        self._require("extract")
        cfg = self.cfg
        traces = self.unambiguous_traces()
        if not traces:
            raise PipelineError("no unambiguous traces to probe", EXIT_COMPUTE)
        N = self.conductor()
        lines = ["hypothesis,d,inert,vanishing,fraction,verdict"]
        for hyp in character_piece_hypotheses(N):
            rep = dihedral_probe(hyp.apply(traces), N, cfg.disc_bound, cfg.min_inert, cfg.vanish_threshold, hyp.label)
            lines += [",".join(str(x) for x in row) for row in rep.csv_rows()]
        atomic_write(self.out / "dihedral.csv", "\n".join(lines) + "\n")

        refs = reference_table(cfg.mc_samples, cfg.seed, self.out / "refs.txt", GROUPS, cfg.workers)
        rep = moment_diagnostics(traces, refs)
        head = "source,n,mean_re,mean_im,abs2,sq_re,sq_im,abs4,se_mean,se_abs2,se_sq,se_abs4"
        mlines = [head, _moment_row("empirical", rep.empirical)]
        mlines += [_moment_row(g, refs[g]) for g in GROUPS]
        atomic_write(self.out / "moments.csv", "\n".join(mlines) + "\n")
        dlines = ["group,distance"] + [f"{g},{_fmt(d)}" for g, d in rep.distances]
        atomic_write(self.out / "moment_distances.csv", "\n".join(dlines) + "\n")

        vals = normalized_traces(traces)
        specs = [
            ("hist_abs", "|a_p|/p", [abs(v) for v in vals], [k * 0.25 for k in range(13)]),
            ("hist_arg", "arg(a_p)", [cmath.phase(v) for v in vals], [-math.pi + k * math.pi / 6 for k in range(13)]),
        ]
        for name, title, data, edges in specs:
            counts = histogram(data, edges)
            hl = ["lo,hi,count"] + [f"{_fmt(edges[k])},{_fmt(edges[k + 1])},{c}" for k, c in enumerate(counts)]
            atomic_write(self.out / f"{name}.csv", "\n".join(hl) + "\n")
            atomic_write(self.out / f"{name}.svg", svg_bars(title, edges, counts))

    def _stage_lfunction(self) -> None:
        self._require("extract")
        cfg = self.cfg
        traces = self.unambiguous_traces()
        all_primes = good_primes(self.params, cfg.pmax)
        omitted = sorted(set(primefactors(self.params.bad_divisor)) | (set(all_primes) - set(traces)))
        series = LSeries.from_traces(traces, omitted)
        grid = sorted({P for P in (50, 100, 200, 500, 1000, 2000, 5000, 10000) if P <= cfg.pmax} | {cfg.pmax})
        lines = [WEIGHT_NOTE, "# omitted primes: " + " ".join(map(str, omitted)), "s,P,value_re,value_im,rel_diff"]
        for s in (3, 4):
            prev = None
            for P in grid:
                val = partial_L(series, s, P)
                diff = "" if prev is None else _fmt(abs(val - prev) / abs(prev))
                lines.append(f"{s},{P},{_fmt(val.real)},{_fmt(val.imag)},{diff}")
                prev = val
        atomic_write(self.out / "lfunction.csv", "\n".join(lines) + "\n")

    def _stage_report(self) -> None:
        for stage in STAGES[:-1]:
            self.run(stage)
        atomic_write(self.out / "summary.txt", self.summary())
        files = sorted(
            f for f in self.out.iterdir() if f.is_file() and f.suffix in (".csv", ".txt", ".svg") and f.name != "MANIFEST.txt"
        )
        manifest = [f"{hashlib.sha256(f.read_bytes()).hexdigest()}  {f.name}" for f in files]
        atomic_write(self.out / "MANIFEST.txt", "\n".join(manifest) + "\n")

    def summary(self) -> str:
        cfg = self.cfg
        rows = self.rows()
        resolved = [r for r in rows if r.cands]
        ambiguous = [r for r in resolved if len(r.cands) > 1]
        law = CorrectionLaw.from_text((self.out / "law.txt").read_text(encoding="utf-8"))
        amb = Fraction(len(ambiguous), len(resolved)) if resolved else Fraction(0)
        out = ["surftrace report", ""]
        out.append("[configuration]")
        for k in ("z", "pmax", "p2max", "rmax", "cmax", "min_support", "emax", "verify_max", "seed", "mc_samples"):
            out.append(f"{k} = {getattr(cfg, k)}")
        out.append(f"epsilon = {'calibrated unit' if not cfg.epsilon else Path(cfg.epsilon).name}")
        out.append("")
        out.append("[traces]")
        out.append(f"good primes counted = {len(rows)}")
        out.append(f"oracle verified = {sum(r.verified for r in rows)}")
        out.append(f"resolved = {len(resolved)}")
        out.append(f"quarantined = {len(rows) - len(resolved)}")
        out.append(f"ambiguous = {len(ambiguous)} (rate {amb} = {float(amb):.6f})")
        out.append("")
        out.append("[law]")
        out += [l for l in law.to_text().splitlines() if not l.startswith("#")]
        out.append("")
        out.append("[verification]")
        vlines = (self.out / "verification.csv").read_text(encoding="utf-8").splitlines()[1:]
        weil_bad = sum(1 for l in vlines if l.split(",")[3] != "1")
        pure_bad = sum(1 for l in vlines if l.split(",")[4] != "1")
        out.append(f"candidates checked = {len(vlines)}")
        out.append(f"weil bound failures = {weil_bad}")
        out.append(f"purity failures = {pure_bad}")
        out.append("")
        out.append("[census]")
        for l in (self.out / "census.csv").read_text(encoding="utf-8").splitlines()[1:]:
            rng, pred, num, den = l.split(",")
            if not pred.endswith(":possible"):
                out.append(f"{pred} over {rng}: {Fraction(int(num), int(den))} ({num}/{den})")
        out.append("")
        out.append("[probes]")
        flagged = [l for l in (self.out / "dihedral.csv").read_text(encoding="utf-8").splitlines()[1:] if l.endswith(",flagged")]
        out.append(f"dihedral flags = {len(flagged)}")
        out += [f"  {l}" for l in flagged]
        dist = (self.out / "moment_distances.csv").read_text(encoding="utf-8").splitlines()[1:]
        out.append(f"nearest moment reference = {dist[0].split(',')[0]}")
        out.append("")
        out.append("[lfunction]")
        out.append(WEIGHT_NOTE.lstrip("# "))
        for l in (self.out / "lfunction.csv").read_text(encoding="utf-8").splitlines():
            if l and l[0].isdigit():
                out.append("  " + l)
        out.append("")
        out.append("Censuses are finite counts over the stated ranges; they estimate, and do not establish, densities.")
        return "\n".join(out) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _moment_row(name: str, m) -> str:
    vals = [m.mean.real, m.mean.imag, m.abs2, m.sq.real, m.sq.imag, m.abs4, m.se_mean, m.se_abs2, m.se_sq, m.se_abs4]
    return f"{name},{m.n}," + ",".join(_fmt(v) for v in vals)


def svg_bars(title: str, edges, counts, width: int = 480, height: int = 240) -> str:
    """A minimal bar chart as SVG text."""
    pad = 30
    n = len(counts)
    top = max(counts) if counts and max(counts) > 0 else 1
    bw = (width - 2 * pad) / max(n, 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{pad}" y="18" font-family="monospace" font-size="12">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
    ]
    for k, c in enumerate(counts):
        h = (height - 2 * pad - 10) * c / top
        x = pad + k * bw
        y = height - pad - h
        parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{bw * 0.9:.2f}" height="{h:.2f}" fill="steelblue">'
            f"<title>[{edges[k]:.3f}, {edges[k + 1]:.3f}): {c}</title></rect>"
        )
    parts.append(f'<text x="{pad}" y="{height - 10}" font-family="monospace" font-size="10">{edges[0]:.2f}</text>')
    parts.append(
        f'<text x="{width - pad}" y="{height - 10}" font-family="monospace" font-size="10" text-anchor="end">{edges[-1]:.2f}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def map_exception(exc: BaseException) -> Optional[int]:
    """Exit code for a known failure, or None."""
    from .config import ConfigError
    from .table import TableVersionError

    if isinstance(exc, PipelineError):
        return exc.code
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, TableVersionError):
        return EXIT_VERSION
    if isinstance(exc, TableError):
        return EXIT_DATA
    if isinstance(exc, (NoConsistentLaw, ArithmeticError)):
        return EXIT_COMPUTE
    return None
