import math

import pytest

from oscbath.model import CavityConfig, PhysParams

REF = PhysParams(omega_bar=1.0, g=0.1, beta=2.0, n0_init=1.0)


@pytest.fixture
def ref():
    return REF


@pytest.fixture(scope="session")
def cavity128():
    from oscbath.spectrum import solve_spectrum

    return solve_spectrum(CavityConfig(R=40 * math.pi, N=128), REF)


def pytest_terminal_summary(terminalreporter):
    reports = [r for key in ("passed", "failed") for r in terminalreporter.stats.get(key, [])
               if r.when == "call" and "test_acceptance" in r.nodeid]
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    for rep in sorted(reports, key=lambda r: int(r.nodeid.rsplit("_", 1)[1].rstrip("]"))):
        text = dict(rep.user_properties).get("acceptance", rep.nodeid)
        terminalreporter.write_line(text)
