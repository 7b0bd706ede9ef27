import numpy as np
import pytest

from msbench.dataset import SyntheticSpec, gen_synthetic_dataset
from msbench.harness import TimingRecord
from msbench.imaging import Image

# criterion number -> (passed, description); filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, text = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {number}: {text}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_image(rng):
    def make(width, height):
        return Image(rng.random((height, width, 3), dtype=np.float32))

    return make


@pytest.fixture
def small_dataset(tmp_path):
    """Two categories of three 48x40 PPM images."""
    root = tmp_path / "data"
    gen_synthetic_dataset(SyntheticSpec(2, 3, 48, 40), seed=7, out_root=root)
    return root


def make_records(times, directory="d"):
    return [TimingRecord(f"{directory}/{i}.ppm", directory, i, t, 1) for i, t in enumerate(times)]
