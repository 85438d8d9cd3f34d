from __future__ import annotations

import pytest

from metasecure.clock import ManualClock
from metasecure.service import MetasecureService


@pytest.fixture
def clock() -> ManualClock:
    return ManualClock(1_700_000_000_000)


@pytest.fixture
def service(clock) -> MetasecureService:
    return MetasecureService.create(rp_id="meta.example", clock=clock)
