import os

import pytest
from hypothesis import HealthCheck, settings

from ri3bp.verification import Suite

settings.register_profile("ri3bp", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ri3bp"))


@pytest.fixture(scope="session")
def suite():
    """Shared G = 2 table, homoclinic and Newton refinements (built lazily once)."""
    return Suite(seed=0)
