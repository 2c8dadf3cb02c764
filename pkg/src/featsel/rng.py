"""Deterministic random-stream derivation.

Every random draw in the package flows from one master seed through
``derive_rng(master_seed, component, *indices)``. Streams depend only on the
component name and indices, never on scheduling or worker count, so results
are reproducible bit-for-bit regardless of parallelism.
"""

import numpy as np

# Stable component tags; never renumber, only append.
_COMPONENTS = {
    "split": 1,
    "synth": 2,
    "tree-bag": 3,
    "tree-nodes": 4,
    "perm-importance": 5,
    "bootstrap": 6,
    "bench-forest": 7,
    "rfe": 8,
    "bench-split": 9,
}


def derive_rng(master_seed, component, *indices):
    """Return a ``numpy.random.Generator`` unique to (seed, component, indices)."""
    if master_seed < 0:
        raise ValueError("master seed must be non-negative")
    tag = _COMPONENTS[component]
    return np.random.default_rng([int(master_seed), tag, *map(int, indices)])


def derive_uint64(master_seed, component, *indices):
    """A single 63-bit integer from the derived stream (seeds numba kernels)."""
    return int(derive_rng(master_seed, component, *indices).integers(2**63))
