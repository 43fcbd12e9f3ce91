import pytest

from rulestrata.marginals import LIGHTING, study_database
from rulestrata.miner import MiningParams, mine_frequent
from rulestrata.rules import generate_rules

CASE1 = dict(min_support=0.001, min_confidence=0.5, min_lift=1.1, max_len=4)


@pytest.fixture(scope="session")
def study_db():
    return study_database()


@pytest.fixture(scope="session")
def case1_rules(study_db):
    rhs = study_db.dictionary.id_of(LIGHTING, "daylight")
    params = MiningParams(CASE1["min_support"], CASE1["max_len"], rhs,
                          CASE1["min_confidence"], CASE1["min_lift"])
    freq = mine_frequent(study_db, params)
    return generate_rules(freq, study_db, rhs, CASE1["min_confidence"], CASE1["min_lift"])


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
