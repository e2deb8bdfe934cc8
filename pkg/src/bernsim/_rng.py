"""Counter-based normal variates for reproducible path simulation.

Each time step gets its own Philox stream keyed by (seed, step), so the
normal used for (path i, step k) is a pure function of (seed, k, i).  Output
is therefore bit-identical however paths are scheduled or batched, and two
simulations with the same seed share their noise exactly, which is what the
pathwise-comparison contracts rely on.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def normals_for_step(seed: int, step: int, n_paths: int) -> np.ndarray:
    """Standard normals for one time step, indexed by path."""
    key = (int(seed) & _MASK64, int(step) & _MASK64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal(n_paths)
