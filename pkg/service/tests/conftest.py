"""Shared fixtures: a dev-backed config and one live server per session."""

from __future__ import annotations

import pytest

from pointzero_service import DEV_ID, ServiceConfig, create_app
from pointzero_service.testing import serve


@pytest.fixture(scope="session")
def dev_config() -> ServiceConfig:
    return ServiceConfig(encoder_id=DEV_ID, diffusion_id=DEV_ID, dev_dim=64, steps=6)


@pytest.fixture(scope="session")
def live_service(dev_config):
    """(base_url, app) for a server running on an ephemeral loopback port."""
    app = create_app(dev_config)
    with serve(app) as url:
        yield url, app
