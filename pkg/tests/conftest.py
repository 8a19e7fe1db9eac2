import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from maghelm.model import ProblemSpec, build_mesh
from maghelm.potentials import build_example
from maghelm.sources import as_rhs, source_from_config

settings.register_profile(
    "suite", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture(scope="session")
def free_pot():
    return build_example("free", d=3)


@pytest.fixture(scope="session")
def free_problem():
    return ProblemSpec(d=3, lam=1.0, eps=0.1, sign="plus")


@pytest.fixture(scope="session")
def annulus_f():
    return as_rhs([source_from_config(
        {"kind": "smooth_annulus", "r_inner": 1.0, "r_outer": 2.0})])


@pytest.fixture(scope="session")
def mesh_2048(free_problem):
    return build_mesh(free_problem, 2048)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
