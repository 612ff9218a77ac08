import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def fake_time(monkeypatch):
    monkeypatch.setenv("ATRIUM_FAKE_TIME", "1")


@pytest.fixture
def toy():
    from helpers import toy_engine
    return toy_engine()
