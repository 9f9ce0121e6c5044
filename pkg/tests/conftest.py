import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cbf_split():
    from mascots.dataset_io import train_test_split
    from mascots.synth import cylinder_bell_funnel

    data = cylinder_bell_funnel(90, 128, seed=42)
    return train_test_split(data, 30 / 90, 42)


@pytest.fixture(scope="session")
def cbf_model(cbf_split):
    from mascots.pipeline import fit_model

    return fit_model(cbf_split[0], "knn1", seed=42)
