"""Multivariate-normal baseline with Ledoit-Wolf shrinkage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sagen import rng as rngs
from sagen.embedding import Standardizer
from sagen.errors import NumericError, ParameterError
from sagen.pipeline import PipelineModel
from sagen.samplers import SyntheticCohort, cohort_from_profiles


@dataclass(frozen=True)
class MvnModel:
    mean: np.ndarray
    covariance: np.ndarray
    shrinkage_intensity: float
    standardizer: Standardizer | None = None
    n_visits: int = 1
    feature_names: tuple[str, ...] | None = None

    @property
    def d(self) -> int:
        return self.mean.shape[0]


def ledoit_wolf_intensity(x: np.ndarray) -> float:
    """Optimal shrinkage toward ``(tr S / d) I`` (Ledoit & Wolf, 2004), clipped to [0, 1].

    ``S`` is the maximum-likelihood covariance of the centered rows.
    """
    n, d = x.shape
    xc = x - x.mean(axis=0)
    S = xc.T @ xc / n
    mu = np.trace(S) / d
    delta2 = np.sum((S - mu * np.eye(d)) ** 2) / d
    if delta2 <= 0:
        return 0.0
    # Average squared distance of the rank-one terms from S.
    beta2 = sum(np.sum((np.outer(row, row) - S) ** 2) for row in xc) / (n**2 * d)
    return float(np.clip(min(beta2, delta2) / delta2, 0.0, 1.0))


def fit_ledoit_wolf(standardized, shrinkage: float | None = None) -> MvnModel:
    """Mean and shrunk covariance ``(1 - lam) S + lam (tr S / d) I``.

    ``shrinkage`` overrides the estimated intensity.
    """
    x = np.asarray(standardized, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ParameterError("Ledoit-Wolf needs at least two rows")
    n, d = x.shape
    lam = ledoit_wolf_intensity(x) if shrinkage is None else float(shrinkage)
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"shrinkage must lie in [0, 1], got {lam}")
    mean = x.mean(axis=0)
    xc = x - mean
    S = xc.T @ xc / n
    cov = (1.0 - lam) * S + lam * (np.trace(S) / d) * np.eye(d)
    cov = (cov + cov.T) / 2
    return MvnModel(mean, cov, lam)


def mvn_baseline(pipeline: PipelineModel) -> MvnModel:
    """Fit on the pipeline's standardized training profiles."""
    profiles = pipeline.profiles
    model = fit_ledoit_wolf(pipeline.standardizer.transform(profiles.matrix))
    return MvnModel(
        model.mean,
        model.covariance,
        model.shrinkage_intensity,
        pipeline.standardizer,
        profiles.n_visits,
        profiles.feature_names,
    )


def mvn_sample(model: MvnModel, N: int, seed: int = 42) -> SyntheticCohort:
    """Draw ``N`` records; draw ``i`` uses its own stream from ``(seed, i)``."""
    if int(N) != N or N < 0:
        raise ParameterError(f"N must be a non-negative integer, got {N}")
    try:
        chol = np.linalg.cholesky(model.covariance)
    except np.linalg.LinAlgError as exc:
        raise NumericError("covariance is not positive definite") from exc
    z = np.array([rngs.stream(seed, rngs.MVN_DRAWS, i).standard_normal(model.d) for i in range(N)]).reshape(N, model.d)
    draws = model.mean + z @ chol.T
    if model.standardizer is not None:
        draws = model.standardizer.inverse(draws)
    names = model.feature_names or tuple(f"x{j}" for j in range(model.d // model.n_visits))
    provenance = {"method": "mvn", "seed": int(seed), "N": int(N), "shrinkage_intensity": model.shrinkage_intensity}
    return cohort_from_profiles(draws, model.n_visits, names, provenance, "MVN-")
