import pytest
from hypothesis import HealthCheck, settings

from xhaulopt.fixtures import infeasible_fixture, tiny_fixtures
from xhaulopt.scenario_io import load_scenario

settings.register_profile("repo", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

FIXTURE_NAMES = sorted(tiny_fixtures())


@pytest.fixture(scope="session")
def scenarios():
    return {name: load_scenario(doc) for name, doc in tiny_fixtures().items()}


@pytest.fixture(scope="session")
def infeasible():
    return load_scenario(infeasible_fixture())


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{verdict}] {n:2d}. {title}: {detail}")
