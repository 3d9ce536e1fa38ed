import pytest

from yukawa_mc.domains import Ball
from yukawa_mc.oracles import oracle_walk

PSI_3_1 = 0.8509181282393214  # 1 / sinh(1)
PSI_2_1 = 0.7898483148251121  # 1 / I_0(1)


@pytest.fixture
def unit_ball3():
    return Ball((0.0, 0.0, 0.0), 1.0)


@pytest.fixture
def coarse_walk():
    return oracle_walk


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for line in REPORT:
        terminalreporter.write_line(line)
