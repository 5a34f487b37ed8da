from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from portalplan.scenarios import build_fig1_micro
from portalplan.strips import ground


@pytest.fixture(scope="session")
def micro_spec():
    return build_fig1_micro()


@pytest.fixture(scope="session")
def micro_actions(micro_spec):
    return ground(micro_spec)
