import os

import hypothesis
import numpy as np
import pytest

from scripts._plateau.core import RandomSource

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng() -> RandomSource:
    return RandomSource(20240917)


@pytest.fixture
def fixture_population():
    return (7, 5, 5, 1)
