from pathlib import Path

import pytest

import blockqueue


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return Path(blockqueue.__file__).parent / "data"
