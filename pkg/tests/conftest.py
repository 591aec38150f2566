import numpy as np
import pytest

import hscrf


def random_topology(rng, max_depth=3, max_size=3, allow_moving_root=True):
    depth = int(rng.integers(2, max_depth + 1))
    sizes = tuple(int(rng.integers(1, max_size + 1)) for _ in range(depth))
    root_persists = True if not allow_moving_root else bool(rng.random() < 0.7)
    return hscrf.fully_connected_topology(sizes, root_persists)


def random_instance(rng, max_depth=3, max_size=3, max_length=5, alphabet=2, scale=1.0):
    """One random tiny model plus an observation sequence."""
    topo = random_topology(rng, max_depth, max_size)
    length = int(rng.integers(2, max_length + 1))
    params = hscrf.ModelParams.random(topo, alphabet, rng, scale=scale)
    obs = hscrf.ObservationSequence(
        rng.integers(0, alphabet, size=length), alphabet
    )
    return topo, params, obs


def count_configurations(topo, length):
    """Closed-form configuration count for fully connected topologies.

    Independent of the enumerator: per transition-level row, each level
    contributes sizes[d] choices per segment, and the segment count is one
    plus the number of boundaries at or above that level.
    """
    total = 0
    lo = topo.min_transition_level
    rows = [[]]
    for _ in range(length - 1):
        rows = [r + [v] for r in rows for v in range(lo, topo.depth)]
    for row in rows:
        grids = 1
        for lev, size in enumerate(topo.sizes):
            segments = 1 + sum(1 for v in row if v <= lev)
            grids *= size**segments
        total += grids
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
