import os
import sys

import hypothesis
import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: seeded statistical checks (deselect with -m 'not slow')")
