import pytest

from stable_em import OddPower, SdeProblem, Zero

BETA = 4.0 / 9.0
ALPHA = 1.8


@pytest.fixture
def scenario():
    """dx = sign(x)|x|^(4/9) dt + dL, x0 = 1, alpha = 1.8, T = 2."""
    return SdeProblem(OddPower(1.0, BETA), 1.0, ALPHA, 2.0)


@pytest.fixture
def zero_problem():
    return SdeProblem(Zero(), 1.0, ALPHA, 2.0)
