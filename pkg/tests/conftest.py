import pytest

from stratabc.config import get_settings
from stratabc.streams import make_stream


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long sampler checks")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return make_stream(12345)


@pytest.fixture
def isolated_settings(tmp_path, monkeypatch):
    """Settings pointing every output and cache at ``tmp_path``."""
    monkeypatch.setenv("STRATABC_OUTPUT_ROOT", str(tmp_path / "runs"))
    monkeypatch.setenv("STRATABC_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.setenv("STRATABC_CACHE_ENABLED", "false")
    get_settings.cache_clear()
    yield get_settings()
    get_settings.cache_clear()
