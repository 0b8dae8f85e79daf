import json
from pathlib import Path

import pytest

from expfunctional import LevyModel, NoJumps, exponential_two_sided

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())

# filled in by test_acceptance.py: criterion -> list of (label, passed, detail)
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@pytest.fixture
def drift_model():
    return LevyModel(1.0, 0.0, NoJumps(), 1.0)


@pytest.fixture
def brownian_killed():
    return LevyModel(-1.0, 1.0, NoJumps(), 1.0)


@pytest.fixture
def two_sided_model():
    return LevyModel(0.5, 1.0, exponential_two_sided(1.0, 3.0, 1.0, 2.0), 1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[crit]
        ok = all(p for _, p, _ in checks)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
        for label, p, detail in checks:
            tr.write_line(f"    [{'ok' if p else 'FAIL'}] {label}: {detail}")
