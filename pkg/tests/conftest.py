import numpy as np
import pytest

from etcsim.presets import no_blackout_scenario, sec6_plant, sec6_scenario
from etcsim.sim import run
from etcsim.triggers import TriggerConfig, TriggerSuite, resolve_lookahead


@pytest.fixture(scope="session")
def ref_plant():
    """Reference 2x2 plant with vd0 for x0 = (6, -4)."""
    return sec6_plant()


@pytest.fixture(scope="session")
def ref_config(ref_plant):
    return TriggerConfig(lookahead=resolve_lookahead(ref_plant, 0.1),
                         sigma=0.06, sigma1=0.8)


@pytest.fixture(scope="session")
def ref_suite(ref_plant, ref_config):
    return TriggerSuite(ref_plant, ref_config)


@pytest.fixture(scope="session")
def blackout_scn():
    return sec6_scenario()


@pytest.fixture(scope="session")
def blackout_trace(blackout_scn):
    return run(blackout_scn)


@pytest.fixture(scope="session")
def clear_channel_scn():
    return no_blackout_scenario()


@pytest.fixture(scope="session")
def clear_channel_trace(clear_channel_scn):
    return run(clear_channel_scn)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
