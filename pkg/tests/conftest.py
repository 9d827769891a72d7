import os
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spherical4r import cli  # noqa: E402
from spherical4r.designs import bundled_design, design_from_dict  # noqa: E402
from spherical4r.objectives import table1  # noqa: E402

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_collection_modifyitems(config, items):
    if os.environ.get("SPHERICAL4R_LONG") == "1":
        return
    skip = pytest.mark.skip(reason="long run; set SPHERICAL4R_LONG=1")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def path():
    return table1()


@pytest.fixture(scope="session")
def table2(path):
    return bundled_design("table2", path)


@pytest.fixture(scope="session")
def unconstrained(path):
    return bundled_design("unconstrained", path)


class DeskRun:
    def __init__(self, extensions: bool, threads: int = 1):
        cfg = cli.RunConfig(extensions=extensions)
        cfg.validate()
        old = os.environ.get("SPHERICAL4R_THREADS")
        os.environ["SPHERICAL4R_THREADS"] = str(threads)
        try:
            t0 = time.perf_counter()
            self.doc, self.records = cli.synthesise(cfg)
            self.seconds = time.perf_counter() - t0
        finally:
            if old is None:
                os.environ.pop("SPHERICAL4R_THREADS")
            else:
                os.environ["SPHERICAL4R_THREADS"] = old
        self.cfg = cfg
        self.design = design_from_dict(self.doc["design"])


@pytest.fixture(scope="session")
def desk_ext():
    """Default synthesis (with extensions) at the desk-scale profile, seed 1."""
    return DeskRun(extensions=True)


@pytest.fixture(scope="session")
def desk_noext():
    return DeskRun(extensions=False)
