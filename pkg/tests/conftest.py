import numpy as np
import pytest

from cfrelay.closed_form import PowerAllocation, full_power_downlink
from cfrelay.config import SystemConfig
from cfrelay.model import LargeScaleFading


def random_fading(rng, M, W, tau_p=10, p_p=1.0, low=0.05, high=2.0):
    a = rng.uniform(low, high, size=(M, W))
    b = rng.uniform(low, high, size=(M, W))
    return LargeScaleFading.from_gains(a, b, tau_p, p_p)


def random_allocation(rng, ls, N, p_u=3.0, p_r=20.0, p_p=1.0):
    W = ls.num_pairs
    eta_A, eta_B = full_power_downlink(ls, N)
    return PowerAllocation(rng.uniform(0.2, 1.0, W), rng.uniform(0.2, 1.0, W),
                           eta_A, eta_B, p_p, p_u, p_r)


@pytest.fixture
def small_cfg():
    return SystemConfig(num_aps=20, antennas_per_ap=2, num_pairs=2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for the acceptance summary, then assert."""
    def record(name: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
