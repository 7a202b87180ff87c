import numpy as np
import pytest

from leobeam.scenario import NetworkConfig, build_scenario


def desk_config(**overrides) -> NetworkConfig:
    """The small reference instance every heavier test runs on."""
    return NetworkConfig(**overrides)


@pytest.fixture(scope="session")
def desk_scenario():
    return build_scenario(desk_config())


@pytest.fixture(scope="session")
def alg1_design(desk_scenario):
    from leobeam.robust_avg import design_avg_sinr

    return design_avg_sinr(desk_scenario)


@pytest.fixture(scope="session")
def alg2_design(desk_scenario):
    from leobeam.robust_outage import design_outage

    return design_outage(desk_scenario.with_outage(0.05))


def rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
