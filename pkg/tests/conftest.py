import os
from pathlib import Path

import numpy as np
import pytest

from tgocr.synthetic import write_dataset

ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    """300 synthetic glyph bitmaps in the per-class directory layout."""
    return write_dataset(tmp_path_factory.mktemp("syn") / "db", per_class=30, seed=7)


@pytest.fixture(scope="session")
def cmaterdb_root():
    root = Path(os.environ.get("TGOCR_CMATERDB", "data/cmaterdb"))
    return root if root.is_dir() else None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
