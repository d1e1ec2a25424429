import numpy as np
import pytest

from irisbench.synth import SynthEyeParams
from irisbench.workflows import generate_corpus

_criteria = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _criteria.append((value, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_criteria):
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture(scope="session")
def clean_params():
    """Synthetic eye without capture variation."""
    return SynthEyeParams(
        center_jitter=0.0,
        dilation_jitter=0.0,
        noise_std=0.0,
        gamma_jitter=0.0,
        rotation_jitter=0.0,
        specular_spots=(0, 0),
        eyelid_fraction=(0.0, 0.0),
    )


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("small_corpus")
    generate_corpus(root, identities=4, captures=4, seed=3)
    return root

