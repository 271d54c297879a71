from __future__ import annotations

import shutil
import time

import pytest

from surftrace.config import RunConfig
from surftrace.pipeline import Pipeline


@pytest.fixture(scope="session")
def z2_run(tmp_path_factory):
    """The z=2 pipeline through pmax=500, timed."""
    out = tmp_path_factory.mktemp("z2_500")
    cfg = RunConfig(z=2, pmax=500, out=str(out))
    t0 = time.perf_counter()
    Pipeline(cfg).run("report")
    elapsed = time.perf_counter() - t0
    return Pipeline(cfg), elapsed


@pytest.fixture(scope="session")
def z2_run_2000(z2_run, tmp_path_factory):
    """The same run extended to pmax=2000 in a copy of the output directory."""
    small, _ = z2_run
    out = tmp_path_factory.mktemp("z2_2000") / "out"
    shutil.copytree(small.out, out)
    cfg = RunConfig(z=2, pmax=2000, out=str(out))
    Pipeline(cfg).run("report")
    return Pipeline(cfg)


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion(request):
    """Record a PASS/FAIL line for an acceptance criterion; call with the number and detail."""
    state = {}

    def record(number: int, detail: str) -> None:
        state["key"] = number
        state["detail"] = detail

    yield record
    if "key" in state:
        rep = getattr(request.node, "rep_call", None)
        ok = rep is not None and rep.passed
        line = f"criterion {state['key']:>2}: {'PASS' if ok else 'FAIL'}  {state['detail']}"
        ACCEPTANCE[state["key"]] = line
        print("\n" + line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
