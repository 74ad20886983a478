import numpy as np
import pytest

from config_generator import EXAMPLE_MODELS
from models import build_model


def curie_weiss_spec(beta: float) -> dict:
    return {"variant": "GibbsAffine", "V": [0.0, 0.0], "W": [[0.0, 1.0], [1.0, 0.0]], "beta": beta}


def bisect(f, low: float, high: float, tolerance: float = 1e-14) -> float:
    f_low = f(low)
    while high - low > tolerance:
        middle = 0.5 * (low + high)
        if np.sign(f(middle)) == np.sign(f_low):
            low, f_low = middle, f(middle)
        else:
            high = middle
    return 0.5 * (low + high)


def x_beta(beta: float) -> float:
    """Smaller root of log(x/(1-x)) + 2 beta - 4 beta x = 0"""
    return bisect(lambda x: np.log(x / (1 - x)) + 2 * beta - 4 * beta * x, 1e-9, 0.5 - 1e-9)


@pytest.fixture
def curie_weiss():
    return lambda beta: build_model(curie_weiss_spec(beta))


@pytest.fixture(scope="session")
def catalog():
    """One built model per locally Gibbs catalog variant"""
    specs = dict(EXAMPLE_MODELS)
    specs.pop("SlowAdaptation")
    specs["GibbsAffine3"] = {
        "variant": "GibbsAffine",
        "V": [0.2, -0.1, 0.0],
        "W": [[0.0, 1.0, -0.5], [1.0, 0.0, 0.3], [-0.5, 0.3, 0.0]],
        "beta": 0.7,
    }
    return {name: build_model(spec) for name, spec in specs.items()}


@pytest.fixture
def two_state_walk():
    return np.array([[-1.0, 1.0], [1.0, -1.0]])
