import pytest
from hypothesis import HealthCheck, settings

from flsim.atoms import LaserParams, mhz
from flsim.dissipation import DecayParams

settings.register_profile(
    "flsim",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("flsim")


@pytest.fixture
def laser():
    return LaserParams(mhz(4.0), mhz(0.04), mhz(200.0))


@pytest.fixture
def decay():
    return DecayParams()


def pytest_terminal_summary(terminalreporter):
    """Print one verdict line per acceptance criterion that ran."""
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        title = mod.TITLES[number]
        terminalreporter.write_line(f"AC{number:<2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
