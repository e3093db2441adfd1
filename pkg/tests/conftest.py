import os
import sys
import warnings

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from radialdwd import TrainingSet, rdwd  # noqa: E402

TOY_X = np.array([(0.4, 0.5), (0.6, 0.5), (0.5, 0.4), (0.5, 0.6),
                  (1.0, 0.0), (0.0, 1.0), (0.05, 0.05)])
TOY_Y = np.array([1, 1, 1, 1, -1, -1, -1], dtype=float)
# 10 / (squared distance from the +1 mean to the nearest negative, (0.05, 0.05))
TOY_C = 10.0 / (2 * 0.45 ** 2)


@pytest.fixture(scope="session")
def toy():
    return TrainingSet(TOY_X, TOY_Y)


@pytest.fixture(scope="session")
def toy_fit(toy):
    with warnings.catch_warnings():
        warnings.simplefilter("error", rdwd.MaxItersExceeded)
        return rdwd.fit(toy, rdwd.RdwdConfig(penalty=TOY_C, weights=(1.0, 1.0)))


@pytest.fixture(scope="session")
def toy_fit_default(toy):
    return rdwd.fit(toy)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
