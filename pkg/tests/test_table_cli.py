from __future__ import annotations

import random

import pytest
from sympy import primerange

import surftrace.pipeline as pipeline_mod
from surftrace.cli import main
from surftrace.config import ConfigError, RunConfig, build_config, parse_config_text
from surftrace.gaussian import GaussianInt
from surftrace.pipeline import Pipeline
from surftrace.table import HEADER, TableError, TableVersionError, TraceRow, TraceTable

SMALL = ["--z", "2", "--pmax", "60", "--p2max", "40", "--verify-max", "20"]


def random_table(n, seed=0):
    rng = random.Random(seed)
    rows = []
    for p in list(primerange(3, 10**5))[:n]:
        p = int(p)
        s2 = rng.randint(-p * p, p * p) if rng.random() < 0.5 else None
        cands = tuple(GaussianInt(rng.randint(-p, p), rng.randint(-p, p)) for _ in range(rng.randint(0, 2)))
        rows.append(TraceRow(2, p, rng.randint(-9 * p, 9 * p), rng.randint(-9 * p, 9 * p), s2, rng.random() < 0.5, cands))
    return TraceTable(rows)


def test_table_round_trip_1000_rows(tmp_path):
    t = random_table(1000)
    text = t.to_text()
    assert TraceTable.from_text(text) == t
    t.write(tmp_path / "t.csv")
    assert (tmp_path / "t.csv").read_text() == text
    assert TraceTable.read(tmp_path / "t.csv").to_text() == text


def _line(cands="3+1i", version="1", p="7", split="i", s1="4"):
    return f"{HEADER}\n{version},2,{p},{split},{s1},-8,44,1,1,{cands}\n"


def test_good_line_parses():
    row = TraceTable.from_text(_line()).rows[0]
    assert row.cands == (GaussianInt(3, 1),) and row.S2 == 44 and row.verified


@pytest.mark.parametrize("text,col", [
    (_line(cands="3--2i"), "cands"),
    (_line(cands="03+1i"), "cands"),
    (_line(s1="4.0"), "S1"),
    (_line(s1="-0"), "S1"),
    (_line(split="s"), "split"),
    (_line(p="9"), "p"),
])
def test_malformed_rows_name_row_and_column(text, col):
    with pytest.raises(TableError) as err:
        TraceTable.from_text(text)
    assert err.value.row == 2 and err.value.col == col


def test_structural_errors():
    with pytest.raises(TableError):
        TraceTable.from_text("z,p\n")
    with pytest.raises(TableError):
        TraceTable.from_text(HEADER + "\n1,2,7,i,4\n")
    two = _line() + "1,2,7,i,4,-8,44,1,1,\n"
    with pytest.raises(TableError):
        TraceTable.from_text(two)
    with pytest.raises(TableVersionError):
        TraceTable.from_text(_line(version="2"))


def test_config_precedence(tmp_path):
    vals = parse_config_text("# comment\npmax = 80\nmin-support = 4\nepsilon = auto\n")
    cfg = build_config(vals, {"pmax": 190, "seed": None})
    assert cfg.pmax == 190 and cfg.min_support == 4 and cfg.epsilon is None and cfg.seed == RunConfig().seed
    with pytest.raises(ConfigError):
        parse_config_text("colour = red\n")
    with pytest.raises(ConfigError):
        parse_config_text("pmax = many\n")
    with pytest.raises(ConfigError):
        RunConfig(z=0)
    assert RunConfig(workers=1).fingerprint() == RunConfig(workers=3, out="x").fingerprint()


def test_cli_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2
    assert main(["count", "--z", "0", "--out", str(tmp_path)]) == 2
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    assert main(["count", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_cli_stage_order_and_version(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert main(["extract", *SMALL, "--out", out]) == 3
    assert "count" in capsys.readouterr().err
    assert main(["count", *SMALL, "--out", out]) == 0
    table = tmp_path / "run" / "trace_table.csv"
    lines = table.read_text().splitlines()
    lines[1] = "2" + lines[1][1:]
    table.write_text("\n".join(lines) + "\n")
    assert main(["extract", *SMALL, "--out", out]) == 4
    lines[1] = "1" + lines[1][1:].replace(",", ",x", 1)
    table.write_text("\n".join(lines) + "\n")
    assert main(["extract", *SMALL, "--out", out]) == 3


def test_count_is_idempotent(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert main(["count", *SMALL, "--out", out]) == 0
    table = tmp_path / "run" / "trace_table.csv"
    before = table.read_bytes()
    mtime = table.stat().st_mtime_ns
    assert main(["count", *SMALL, "--out", out]) == 0
    assert "already complete" in capsys.readouterr().out
    assert table.read_bytes() == before and table.stat().st_mtime_ns == mtime
    # a different p2max must not silently mix into the same table
    assert main(["count", "--z", "2", "--pmax", "60", "--p2max", "30", "--verify-max", "20", "--out", out]) == 3


def test_count_resumes_after_crash(tmp_path, monkeypatch):
    ref_dir, crash_dir = tmp_path / "ref", tmp_path / "crash"
    cfg = RunConfig(z=2, pmax=150, p2max=40, verify_max=20)
    Pipeline(RunConfig(**{**cfg.__dict__, "out": str(ref_dir)})).run("count")
    reference = (ref_dir / "trace_table.csv").read_bytes()

    real = pipeline_mod.count_primes
    calls = {"n": 0}

    def flaky(*args, **kw):
        calls["n"] += 1
        if calls["n"] == 2:
            raise KeyboardInterrupt
        return real(*args, **kw)

    monkeypatch.setattr(pipeline_mod, "count_primes", flaky)
    pipe = Pipeline(RunConfig(**{**cfg.__dict__, "out": str(crash_dir)}))
    with pytest.raises(KeyboardInterrupt):
        pipe.run("count")
    partial = TraceTable.read(crash_dir / "trace_table.csv")
    assert len(partial.rows) == pipeline_mod.COUNT_CHUNK
    assert not pipe.is_done("count")

    seen = []
    monkeypatch.setattr(pipeline_mod, "count_primes", lambda params, ps, *a, **k: seen.extend(ps) or real(params, ps, *a, **k))
    assert pipe.run("count")
    assert not set(seen) & {r.p for r in partial.rows}
    assert (crash_dir / "trace_table.csv").read_bytes() == reference


def test_raising_pmax_extends_table(tmp_path):
    out = str(tmp_path / "run")
    small = Pipeline(RunConfig(z=2, pmax=60, p2max=40, verify_max=20, out=out))
    small.run("count")
    rows60 = small.load_table().rows
    big = Pipeline(RunConfig(z=2, pmax=120, p2max=40, verify_max=20, out=out))
    assert not big.is_done("count")
    big.run("count")
    rows120 = big.load_table().rows
    assert rows120[: len(rows60)] == rows60 and rows120[-1].p > 100
