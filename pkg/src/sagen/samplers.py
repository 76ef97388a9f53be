"""Langevin chains on the Hopfield energy, chain diagnostics and cohort generation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from sagen import rng as rngs
from sagen.cohort_io import CohortTable, ProfileMatrix, profiles_to_table
from sagen.embedding import MemoryBank, reconstruct
from sagen.errors import DivergenceError, NumericError, ParameterError
from sagen.hopfield import (
    EnergyParams,
    energy,
    energy_gradient,
    entropy_curve,
    multiplicity_for_fraction,
    participation_ratio,
    subgroup_weights,
)
from sagen.pipeline import PipelineModel

logger = logging.getLogger(__name__)

MAX_STATE_NORM = 1e6


@dataclass(frozen=True)
class ChainConfig:
    alpha: float = 0.01
    T: int = 2000
    burn_in: int = 0
    seed: int = 42
    record_trace: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if int(self.T) != self.T or self.T <= 0:
            raise ParameterError(f"T must be a positive integer, got {self.T}")
        if int(self.burn_in) != self.burn_in or not 0 <= self.burn_in < self.T:
            raise ParameterError(f"burn_in must lie in [0, T), got {self.burn_in}")
        rngs.check_seed(self.seed)


@dataclass(frozen=True)
class ChainResult:
    final_state: np.ndarray
    trace: np.ndarray | None = None
    energies: np.ndarray | None = None
    acceptance_rate: float | None = None


@dataclass(frozen=True)
class Diagnostics:
    tau_int: float
    ess: float
    mean_energy: float
    sd_energy: float


def noise_scale(alpha: float, beta: float) -> float:
    return float(np.sqrt(2.0 * alpha / beta))


def random_unit_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _diverged(xi: np.ndarray) -> bool:
    # NaN fails the comparison as well.
    return not (xi @ xi < MAX_STATE_NORM**2)


def ula_chain(
    bank: MemoryBank,
    params: EnergyParams,
    config: ChainConfig,
    rng: np.random.Generator | None = None,
    initial=None,
    noise: bool = True,
) -> ChainResult:
    """Unadjusted Langevin chain started uniformly on the unit sphere.

    Each step is ``xi <- (1 - a) xi + a M softmax(beta M.T xi + log r) + sqrt(2a/beta) eps``.
    ``noise=False`` drops the stochastic term.
    """
    if params.weights.shape != (bank.K,):
        raise ParameterError(f"expected {bank.K} weights, got {params.weights.shape[0]}")
    rng = rngs.stream(config.seed) if rng is None else rng
    M = bank.unit_patterns
    Mt = np.ascontiguousarray(M.T)
    beta, alpha = params.beta, config.alpha
    log_r = params.log_weights
    xi = random_unit_vector(rng, bank.d) if initial is None else np.array(initial, dtype=float)
    eps = rng.standard_normal((config.T, bank.d)) * noise_scale(alpha, beta)
    if not noise:
        eps[:] = 0.0

    trace = np.empty((config.T, bank.d)) if config.record_trace else None
    energies = np.empty(config.T) if config.record_trace else None
    for t in range(config.T):
        a = beta * (Mt @ xi) + log_r
        a -= a.max()
        e = np.exp(a)
        xi = (1.0 - alpha) * xi + (alpha / e.sum()) * (M @ e) + eps[t]
        if _diverged(xi):
            raise DivergenceError(f"chain diverged at iteration {t + 1}", iteration=t + 1)
        if trace is not None:
            trace[t] = xi
            energies[t] = energy(xi, bank, params)
    return ChainResult(xi, trace, energies)


def mala_chain(
    bank: MemoryBank,
    params: EnergyParams,
    config: ChainConfig,
    rng: np.random.Generator | None = None,
    initial=None,
) -> ChainResult:
    """Metropolis-adjusted Langevin chain targeting ``exp(-beta * E)``.

    Proposals are ULA steps: mean ``xi - alpha * grad E``, covariance ``(2 alpha / beta) I``.
    """
    rng = rngs.stream(config.seed) if rng is None else rng
    beta, alpha = params.beta, config.alpha
    var = 2.0 * alpha / beta
    xi = random_unit_vector(rng, bank.d) if initial is None else np.array(initial, dtype=float)
    eps = rng.standard_normal((config.T, bank.d)) * np.sqrt(var)
    log_u = np.log(rng.random(config.T))

    e_x = energy(xi, bank, params)
    g_x = energy_gradient(xi, bank, params)
    accepted = 0
    trace = np.empty((config.T, bank.d)) if config.record_trace else None
    energies = np.empty(config.T) if config.record_trace else None
    for t in range(config.T):
        y = xi - alpha * g_x + eps[t]
        if _diverged(y):
            raise DivergenceError(f"proposal diverged at iteration {t + 1}", iteration=t + 1)
        e_y = energy(y, bank, params)
        g_y = energy_gradient(y, bank, params)
        fwd = y - xi + alpha * g_x
        bwd = xi - y + alpha * g_y
        log_ratio = -beta * (e_y - e_x) - (bwd @ bwd - fwd @ fwd) / (2.0 * var)
        if log_u[t] < log_ratio:
            xi, e_x, g_x = y, e_y, g_y
            accepted += 1
        if trace is not None:
            trace[t] = xi
            energies[t] = e_x
    return ChainResult(xi, trace, energies, accepted / config.T)


def autocorrelation(x) -> np.ndarray:
    """Normalized autocorrelation (biased estimator) at lags ``0..n-1`` via FFT."""
    x = np.asarray(x, dtype=float)
    n = x.size
    centered = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n]
    if acov[0] <= 0:
        raise NumericError("constant series has no autocorrelation")
    return acov / acov[0]


def integrated_autocorrelation_time(x, threshold: float = 0.05) -> float:
    """``1 + 2 * sum rho(t)`` over lags before the first one with ``rho < threshold``."""
    rho = autocorrelation(x)
    below = np.flatnonzero(rho[1:] < threshold)
    window = below[0] + 1 if below.size else rho.size
    return float(1.0 + 2.0 * rho[1:window].sum())


def chain_diagnostics(energies, burn_in: int = 0, threshold: float = 0.05) -> Diagnostics:
    energies = np.asarray(energies, dtype=float)
    if energies.ndim != 1:
        raise ParameterError("energies must be a one-dimensional trace")
    kept = energies[burn_in:]
    if kept.size < 100:
        raise ParameterError(f"need at least 100 post-burn-in samples, got {kept.size}")
    tau = integrated_autocorrelation_time(kept, threshold)
    return Diagnostics(tau, kept.size / tau, float(kept.mean()), float(kept.std(ddof=1)))


def novelty_of(sample_direction, bank: MemoryBank) -> float:
    """``1 - max_k cos(sample, m_k)``; 0 for an exact copy of a stored direction."""
    v = np.asarray(sample_direction, dtype=float)
    norm = np.linalg.norm(v)
    if not norm > 0:
        raise ParameterError("novelty of a zero vector is undefined")
    cos = bank.unit_patterns.T @ (v / norm)
    return float(np.clip(1.0 - cos.max(), 0.0, 2.0))


@dataclass(frozen=True)
class SyntheticCohort:
    """Generated profiles, ``records`` shaped ``N x V x n``, feature units."""

    records: np.ndarray
    patient_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    provenance: dict = field(default_factory=dict)
    directions: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.records.shape[0]

    @property
    def n_visits(self) -> int:
        return self.records.shape[1]

    def profile_matrix(self) -> ProfileMatrix:
        flat = self.records.reshape(self.N, -1)
        return ProfileMatrix(self.patient_ids, flat, self.feature_names, self.n_visits)

    def to_table(self) -> CohortTable:
        return profiles_to_table(self.profile_matrix())

    @property
    def condition(self) -> str:
        return self.provenance.get("condition") or "all"


def cohort_from_profiles(
    flat: np.ndarray,
    n_visits: int,
    feature_names,
    provenance: dict,
    prefix: str,
    directions=None,
) -> SyntheticCohort:
    flat = np.asarray(flat, dtype=float).reshape(-1, n_visits * len(feature_names))
    if not np.all(np.isfinite(flat)):
        raise NumericError("generated records contain non-finite values")
    ids = tuple(f"{prefix}{i + 1:04d}" for i in range(flat.shape[0]))
    records = flat.reshape(flat.shape[0], n_visits, len(feature_names))
    return SyntheticCohort(records, ids, tuple(feature_names), provenance, directions)


def conditioning(pipeline: PipelineModel, condition: str | None, f_target: float) -> dict:
    """Multiplicity weights and bookkeeping for an (optional) subgroup."""
    bank = pipeline.bank
    if condition is None:
        return {"weights": np.ones(bank.K), "members": list(bank.pattern_ids), "rho": 1.0, "K_des": bank.K, "K_bg": 0}
    members = pipeline.members(condition)
    K_des, K_bg = len(members), bank.K - len(members)
    if K_bg == 0:
        raise ParameterError(f"condition {condition!r} covers every stored pattern; nothing to reweight")
    rho = multiplicity_for_fraction(f_target, K_des, K_bg)
    return {
        "weights": subgroup_weights(bank, members, rho),
        "members": members,
        "rho": rho,
        "K_des": K_des,
        "K_bg": K_bg,
    }


def generate_cohort(
    pipeline: PipelineModel,
    N: int,
    condition: str | None = None,
    f_target: float = 0.80,
    config: ChainConfig | None = None,
    beta: float | None = None,
) -> SyntheticCohort:
    """Draw ``N`` synthetic patients, one independent ULA chain each.

    Chain ``i`` uses its own stream derived from ``(config.seed, i)``: it sets
    the start point, the Langevin noise and the magnitude draw. When
    conditioned, magnitudes come from the subgroup's own norms and, unless
    ``beta`` is given, the inverse temperature is re-derived under the
    subgroup weights.
    """
    config = config or ChainConfig()
    if int(N) != N or N < 0:
        raise ParameterError(f"N must be a non-negative integer, got {N}")
    cond = conditioning(pipeline, condition, f_target)
    bank = pipeline.bank.with_weights(cond["weights"])
    if beta is None:
        beta = pipeline.beta_star if condition is None else entropy_curve(bank, pipeline.curve.betas).beta_star
    params = EnergyParams.for_bank(bank, beta)
    norm_bank = bank.magnitudes[bank.index_of(cond["members"])]

    directions = np.empty((N, bank.d))
    scaled = np.empty((N, bank.d))
    for i in range(N):
        rng = rngs.stream(config.seed, rngs.SA_CHAINS, i)
        try:
            xi = ula_chain(bank, params, config, rng=rng).final_state
        except DivergenceError as exc:
            raise DivergenceError(f"sample {i}: {exc}", exc.iteration, i) from exc
        norm = np.linalg.norm(xi)
        if not norm > 0:
            raise DivergenceError(f"sample {i}: chain ended at the origin", config.T, i)
        directions[i] = xi / norm
        scaled[i] = rng.choice(norm_bank) * directions[i]

    flat = reconstruct(pipeline.pca, pipeline.standardizer, scaled) if N else np.empty((0, pipeline.profiles.d_concat))
    provenance = {
        "method": "sa",
        "seed": int(config.seed),
        "beta": float(beta),
        "alpha": float(config.alpha),
        "T": int(config.T),
        "N": int(N),
        "condition": condition,
        "f_target": float(f_target) if condition else None,
        "rho": float(cond["rho"]),
        "K_des": cond["K_des"],
        "K_bg": cond["K_bg"],
        "K_eff": participation_ratio(cond["weights"]),
        "pipeline_sha256": pipeline.fingerprint(),
    }
    prefix = f"SA-{condition}-" if condition else "SA-"
    return cohort_from_profiles(flat, pipeline.profiles.n_visits, pipeline.profiles.feature_names, provenance, prefix, directions)
