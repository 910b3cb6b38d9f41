import re

import pytest

from ppdef.age import builtin

ACCEPTANCE: dict = {}


def record(criterion: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[criterion] = (passed, detail)


@pytest.fixture(scope="session")
def dlo():
    return builtin("dense_linear_order")


@pytest.fixture(scope="session")
def org():
    return builtin("ordered_random_graph")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(re.match(r"\d+", k).group()), k)):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"CRITERION {key}: {'PASS' if passed else 'FAIL'}" + (f"  {detail}" if detail else ""))
