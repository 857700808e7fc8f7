"""Shared fixtures for the pointzero test suite."""

from __future__ import annotations

import pytest


@pytest.fixture
def tmp_dataset(tmp_path):
    from pointzero.synth import make_blocks_dataset

    root = tmp_path / "blocks"
    make_blocks_dataset(root, n_classes=3, per_class=2, seed=11)
    return root
