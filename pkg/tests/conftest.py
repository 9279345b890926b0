import io

import numpy as np
import pytest
from PIL import Image

from blightscan.synthetic import make_stripes_dataset


def png_bytes(arr, mode=None):
    buf = io.BytesIO()
    im = Image.fromarray(np.asarray(arr, dtype=np.uint8))
    if mode is not None:
        im = im.convert(mode)
    im.save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="session")
def stripes_root(tmp_path_factory):
    """A small seeded stripes dataset (30 images per class, 64x64)."""
    root = tmp_path_factory.mktemp("stripes")
    return make_stripes_dataset(root, n_per_class=30, size=64, seed=7)


@pytest.fixture(scope="session")
def stripes_200(tmp_path_factory):
    """The 200-image, 128x128 dataset used by the end-to-end study."""
    root = tmp_path_factory.mktemp("stripes200")
    return make_stripes_dataset(root, n_per_class=100, size=128, seed=0)


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    outcome = "PASS" if call.excinfo is None else ("SKIP" if call.excinfo.errisinstance(pytest.skip.Exception) else "FAIL")
    _CRITERIA.setdefault(number, (title, []))[1].append(outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcomes = _CRITERIA[number]
        if "FAIL" in outcomes:
            status = "FAIL"
        elif all(o == "SKIP" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
