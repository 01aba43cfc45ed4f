import numpy as np
import pytest

from condobs import (
    GainSchedule,
    IntegratorConfig,
    NoiseConfig,
    gain_preset,
    hh2_initial_state,
    hh2_observer_init,
    hh_two_neuron_preset,
    input_preset,
    run_experiment,
)


@pytest.fixture(scope="session")
def hh2():
    return hh_two_neuron_preset()


@pytest.fixture(scope="session")
def hh2_x0():
    return hh2_initial_state()


@pytest.fixture(scope="session")
def hh2_obs():
    return hh2_observer_init()


@pytest.fixture(scope="session")
def short_scalar_trace(hh2, hh2_x0, hh2_obs):
    """50 ms noiseless distributed-scalar run, shared by invariant tests."""
    return run_experiment(
        hh2, "distributed-scalar", gain_preset("A"),
        IntegratorConfig(t_end=50.0), NoiseConfig(False), input_preset("hh2"),
        x0=hh2_x0, observer_init=hh2_obs)
