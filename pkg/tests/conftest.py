from pathlib import Path

import pytest

from noma_aoii.config import load_config
from noma_aoii.queueing import QueueParams
from noma_aoii.semantic import PLACEHOLDER_LOGISTIC, NomaScenario, UserChannel, dbm_to_watts, linear_amplitudes

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG = ROOT / "configs" / "default.yaml"
EXPERIMENTS = ROOT / "configs" / "experiments"


@pytest.fixture
def default_config():
    return load_config(DEFAULT_CONFIG)


@pytest.fixture
def base_qp():
    return QueueParams(lambda0=10.0, mu0=20.0, mu1=15.0, mu2=10.0, a=0.5, theta=0.1)


@pytest.fixture
def lp():
    return PLACEHOLDER_LOGISTIC


def six_user_scenario(power_dbm=10.0, s_th=1000.0, xi_th=0.3) -> NomaScenario:
    p = dbm_to_watts(power_dbm)
    gains = [h * h for h in linear_amplitudes(0.8, 0.9, 6)]
    return NomaScenario(
        users=tuple(UserChannel(g, p) for g in gains),
        noise_power=dbm_to_watts(-30.0),
        bandwidth=200_000.0,
        info_per_word=1.0,
        symbols_per_word=20,
        max_symbols=20,
        p_max=p,
        s_th=s_th,
        xi_th=xi_th,
        xi_hat=max(xi_th, 0.6),
    )


@pytest.fixture
def scenario6():
    return six_user_scenario()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
