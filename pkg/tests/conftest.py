import warnings

import pytest
from hypothesis import settings

from gravent.params import RegimeWarning

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def quiet_regime():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        yield
