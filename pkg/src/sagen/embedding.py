"""Standardization, variance-thresholded PCA and the direction/magnitude memory bank."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from sagen.cohort_io import ProfileMatrix
from sagen.errors import DimensionError, NumericError, ParameterError

# Singular values below this fraction of the largest are treated as zero.
RANK_RTOL = 1e-10


class DegenerateColumnError(NumericError):
    pass


class DegeneratePatternError(NumericError):
    pass


@dataclass(frozen=True)
class Standardizer:
    mu: np.ndarray
    sigma: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.mu.shape[0]:
            raise DimensionError(f"expected {self.mu.shape[0]} columns, got {x.shape[-1]}")
        return (x - self.mu) / self.sigma

    def inverse(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.mu.shape[0]:
            raise DimensionError(f"expected {self.mu.shape[0]} columns, got {z.shape[-1]}")
        return self.sigma * z + self.mu


@dataclass(frozen=True)
class PcaModel:
    """Orthonormal loadings ``W`` (``d_concat x d_pca``) and the retained spectrum.

    ``explained_variance`` and ``explained_fraction`` cover every nonzero
    component of the fit, not only the retained prefix, so the spectrum can be
    inspected after truncation.
    """

    loadings: np.ndarray
    z_bar: np.ndarray
    explained_variance: np.ndarray
    explained_fraction: np.ndarray
    threshold: float

    @property
    def d_pca(self) -> int:
        return self.loadings.shape[1]

    @property
    def d_concat(self) -> int:
        return self.loadings.shape[0]

    @property
    def cumulative_fraction(self) -> float:
        return float(self.explained_fraction[: self.d_pca].sum())


@dataclass(frozen=True)
class MemoryBank:
    """Unit-norm stored patterns (columns) with their original magnitudes.

    ``weights`` are the per-pattern multiplicities; all ones when unconditioned.
    """

    unit_patterns: np.ndarray
    magnitudes: np.ndarray
    pattern_ids: tuple[str, ...]
    weights: np.ndarray

    @property
    def K(self) -> int:
        return self.unit_patterns.shape[1]

    @property
    def d(self) -> int:
        return self.unit_patterns.shape[0]

    def with_weights(self, weights) -> MemoryBank:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (self.K,):
            raise DimensionError(f"expected {self.K} weights, got shape {weights.shape}")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ParameterError("multiplicity weights must be finite and positive")
        return replace(self, weights=weights)

    def index_of(self, pattern_ids: Sequence[str]) -> np.ndarray:
        lookup = {pid: i for i, pid in enumerate(self.pattern_ids)}
        return np.array([lookup[pid] for pid in pattern_ids], dtype=int)


def _as_matrix(profiles) -> np.ndarray:
    if isinstance(profiles, ProfileMatrix):
        return profiles.matrix
    return np.asarray(profiles, dtype=float)


def fit_standardizer(profiles, column_names: Sequence[str] | None = None) -> Standardizer:
    """Per-column mean and sample standard deviation (divisor ``K - 1``)."""
    x = _as_matrix(profiles)
    if isinstance(profiles, ProfileMatrix) and column_names is None:
        column_names = profiles.column_names
    if x.ndim != 2 or x.shape[0] < 2:
        raise ParameterError("standardizer needs at least two rows")
    mu = x.mean(axis=0)
    sigma = x.std(axis=0, ddof=1)
    flat = np.flatnonzero(sigma <= 1e-12 * np.maximum(1.0, np.abs(mu)))
    if flat.size:
        names = [column_names[j] if column_names is not None else str(j) for j in flat]
        raise DegenerateColumnError(f"constant columns cannot be standardized: {names}")
    return Standardizer(mu, sigma)


def fit_pca(standardized, variance_threshold: float = 0.95) -> PcaModel:
    """PCA by SVD of the centered matrix, keeping the smallest prefix whose
    cumulative explained fraction reaches ``variance_threshold``.

    Each loading column is sign-flipped so its largest-magnitude entry is
    positive.
    """
    if not 0.0 < variance_threshold <= 1.0:
        raise ParameterError(f"variance_threshold must lie in (0, 1], got {variance_threshold}")
    z = np.asarray(standardized, dtype=float)
    if z.ndim != 2 or z.shape[0] < 2:
        raise ParameterError("PCA needs at least two rows")
    z_bar = z.mean(axis=0)
    _, s, vt = np.linalg.svd(z - z_bar, full_matrices=False)
    if s[0] <= 0:
        raise NumericError("centered matrix is identically zero")
    rank = int(np.sum(s > RANK_RTOL * s[0]))
    s, vt = s[:rank], vt[:rank]
    variance = s**2 / (z.shape[0] - 1)
    fraction = variance / variance.sum()
    cumulative = np.cumsum(fraction)
    # Tolerance keeps threshold 1.0 from overshooting the numerical rank.
    d_pca = min(int(np.searchsorted(cumulative, variance_threshold - 1e-12)) + 1, rank)

    w = vt[:d_pca].T.copy()
    pivots = np.argmax(np.abs(w), axis=0)
    signs = np.sign(w[pivots, np.arange(d_pca)])
    w *= signs
    return PcaModel(w, z_bar, variance, fraction, float(variance_threshold))


def project(model: PcaModel, standardizer: Standardizer, profiles) -> np.ndarray:
    """PCA scores as columns, ``d_pca x K``."""
    x = np.atleast_2d(_as_matrix(profiles))
    if x.shape[1] != model.d_concat:
        raise DimensionError(f"expected {model.d_concat} columns, got {x.shape[1]}")
    z = standardizer.transform(x)
    return model.loadings.T @ (z - model.z_bar).T


def reconstruct(model: PcaModel, standardizer: Standardizer, pca_vector) -> np.ndarray:
    """Map PCA coordinates back to feature units.

    Accepts a single ``d_pca`` vector or an ``N x d_pca`` batch.
    """
    m = np.asarray(pca_vector, dtype=float)
    if m.shape[-1] != model.d_pca:
        raise DimensionError(f"expected PCA vectors of length {model.d_pca}, got {m.shape[-1]}")
    return standardizer.inverse(m @ model.loadings.T + model.z_bar)


def build_memory_bank(raw_patterns, pattern_ids: Sequence[str]) -> MemoryBank:
    raw = np.asarray(raw_patterns, dtype=float)
    if raw.ndim != 2 or raw.shape[1] != len(pattern_ids):
        raise DimensionError(f"raw patterns {raw.shape} do not match {len(pattern_ids)} ids")
    norms = np.linalg.norm(raw, axis=0)
    degenerate = [pid for pid, r in zip(pattern_ids, norms) if not r > 1e-12]
    if degenerate:
        raise DegeneratePatternError(f"zero-norm patterns cannot be normalized: {degenerate}")
    return MemoryBank(raw / norms, norms, tuple(pattern_ids), np.ones(raw.shape[1]))
