"""Shared fixtures.

Generated instances are deterministic, so the expensive ones are built once
per session and shared across test modules.  Tests that need to *time* a
build do their own fresh builds instead of using these.
"""

from __future__ import annotations

import numpy as np
import pytest

from minoritysim import Graph, build_adversarial, build_benevolent


@pytest.fixture(scope="session")
def bene2():
    return build_benevolent(2)


@pytest.fixture(scope="session")
def bene4():
    return build_benevolent(4)


@pytest.fixture(scope="session")
def adv3():
    return build_adversarial(3)


@pytest.fixture()
def mono_pair() -> Graph:
    """Two adjacent white nodes: the canonical period-2 oscillator."""
    return Graph.from_edges(2, [0], [1], np.array([0, 0], dtype=np.uint8))


@pytest.fixture()
def make_path():
    """Path graph on the given node colors."""

    def make(colors) -> Graph:
        colors = np.asarray(colors, dtype=np.uint8)
        n = colors.shape[0]
        return Graph.from_edges(
            n, np.arange(n - 1, dtype=np.int64), np.arange(1, n, dtype=np.int64), colors
        )

    return make
