import numpy as np
import pytest

from povmremap import kernels
from povmremap.image_core import GrayImage, four_mode_fixture, synth_mixture_image


@pytest.fixture(params=kernels.BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def bimodal_image():
    return synth_mixture_image(256, 256, [(60, 5, 0.5), (200, 5, 0.5)], seed=42)


@pytest.fixture(scope="session")
def four_mode_image():
    return four_mode_fixture()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def image_of(values, width=None):
    values = np.asarray(values)
    if values.ndim == 1:
        width = width or values.size
        values = values.reshape(-1, width)
    return GrayImage(values)


def pytest_configure(config):
    config._criteria = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        status, desc, detail = results[num]
        line = f"criterion {num}: {status} - {desc}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
