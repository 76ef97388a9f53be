"""Ground-truth cohorts from a known low-rank latent factor model."""

from __future__ import annotations

import numpy as np

from sagen.cohort_io import ProfileMatrix, SubgroupLabels
from sagen.rng import stream


def latent_factor_cohort(
    K: int = 23,
    n: int = 72,
    V: int = 3,
    rank: int = 18,
    seed: int = 0,
    cv: float = 0.15,
    decay: float = 0.85,
) -> ProfileMatrix:
    """Profiles ``x = mu + L f`` with ``rank`` latent factors.

    Feature means are positive (so relative errors are defined) and each
    column's coefficient of variation is about ``cv``. Factor variances decay
    geometrically by ``decay`` so the spectrum is not flat.
    """
    rng = stream(seed, 99)
    d = n * V
    mu = rng.uniform(20.0, 200.0, size=d)
    loadings = rng.standard_normal((d, rank)) * decay ** (np.arange(rank) / 2.0)
    loadings *= (cv * mu / np.linalg.norm(loadings, axis=1))[:, None]
    factors = rng.standard_normal((K, rank))
    x = mu + factors @ loadings.T
    names = tuple(f"f{j:02d}" for j in range(n))
    return ProfileMatrix(tuple(f"P{k + 1:02d}" for k in range(K)), x, names, V)


def subgroup_labels(profiles: ProfileMatrix, sizes: dict[str, int], seed: int = 0) -> SubgroupLabels:
    """Assign each tag to a random subset of the given size; tags may overlap."""
    rng = stream(seed, 98)
    tags: dict[str, set[str]] = {}
    for tag, size in sorted(sizes.items()):
        for k in rng.choice(profiles.K, size=size, replace=False):
            tags.setdefault(profiles.patient_ids[k], set()).add(tag)
    return SubgroupLabels({pid: frozenset(t) for pid, t in tags.items()})
