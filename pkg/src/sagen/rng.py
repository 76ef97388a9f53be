"""Counter-based child streams so every chain or draw has its own reproducible generator."""

from __future__ import annotations

import numpy as np

from sagen.errors import ParameterError

# Stream namespaces keep SA chains, MVN draws and bootstrap loops from sharing streams.
SA_CHAINS = 0
MVN_DRAWS = 1
BOOTSTRAP = 2
DIAGNOSTIC_CHAINS = 3


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ParameterError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for ``(seed, key...)``; independent of how many other streams exist."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(check_seed(seed), spawn_key=key)))
