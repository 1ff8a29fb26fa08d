import math

import numpy as np
import pytest

from gfock.dynamics import Model
from gfock.field import make_field_config
from gfock.hamiltonian import Interaction, quadrature_for


@pytest.fixture(scope="session")
def cfg():
    """Default desk-scale model in the plateau regime: 5 modes, 126 states."""
    return make_field_config(eps=0.3)


@pytest.fixture(scope="session")
def model(cfg):
    inter = Interaction(0.3, 3)
    return Model(cfg, inter, quadrature_for(cfg, inter))


@pytest.fixture(scope="session")
def free_model(model):
    return model.with_coupling(0.0)


@pytest.fixture(scope="session")
def deep_model():
    """Six-particle truncation, so that margin N + 2 = 5 leaves a non-empty safe subspace."""
    cfg = make_field_config(eps=0.3, N_max=6)
    inter = Interaction(0.3, 3)
    return Model(cfg, inter, quadrature_for(cfg, inter))


@pytest.fixture(scope="session")
def xi():
    L = 2 * math.pi
    return lambda p: np.exp(np.cos(2 * math.pi * p[:, 0] / L) - 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
