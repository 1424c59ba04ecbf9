import numpy as np
import pytest

from momdp_front.estimation import build_momdp, eta_table, pendubot_system, scalar_system, steady_state_covariance
from momdp_front.front import front_dichotomy_2d
from momdp_front.model import toy_model

_PENDUBOT = {}


def case_model(sys):
    filt = steady_state_covariance(sys)
    return build_momdp(sys, eta_table(sys, filt))


def pendubot(p_s, x_max=50):
    """Pendubot model and its dichotomy front, cached across the session (about 2 s each)."""
    key = (p_s, x_max)
    if key not in _PENDUBOT:
        model = case_model(pendubot_system(p_s, x_max))
        _PENDUBOT[key] = (model, front_dichotomy_2d(model))
    return _PENDUBOT[key]


@pytest.fixture
def t2():
    return toy_model()


@pytest.fixture(scope="session")
def t2_front():
    return front_dichotomy_2d(toy_model())


@pytest.fixture(scope="session")
def scalar_case():
    """Scalar ``A=0`` estimation model with ``x_max=3`` and ``p_s=0.8``."""
    return case_model(scalar_system(p_s=0.8, x_max=3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
