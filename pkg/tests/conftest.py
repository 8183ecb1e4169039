from __future__ import annotations

import pytest

from tagcraft import MockBackend


@pytest.fixture
def mock_backend() -> MockBackend:
    return MockBackend(seed=0)
