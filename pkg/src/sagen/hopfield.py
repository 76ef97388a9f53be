"""Weighted modern Hopfield energy, attention, and inverse-temperature selection.

With stored unit patterns ``M`` (``d x K``), multiplicities ``r`` and inverse
temperature ``beta``::

    E(xi) = 0.5 * |xi|^2 - (1 / beta) * log sum_k r_k exp(beta * m_k . xi)
    grad E(xi) = xi - M @ softmax(beta * M.T @ xi + log r)

Multiplicities enter only through ``log r`` in the logits, so conditioning on
a subgroup is an inference-time reweighting of the same landscape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sagen.embedding import MemoryBank
from sagen.errors import NumericError, ParameterError


@dataclass(frozen=True)
class EnergyParams:
    beta: float
    weights: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.beta) and self.beta > 0):
            raise ParameterError(f"beta must be positive, got {self.beta}")
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ParameterError("weights must be a nonempty vector of positive reals")
        object.__setattr__(self, "weights", w)

    @classmethod
    def for_bank(cls, bank: MemoryBank, beta: float) -> EnergyParams:
        return cls(float(beta), bank.weights)

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)


def _check(xi, bank: MemoryBank, params: EnergyParams) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (bank.d,):
        raise ParameterError(f"state must have shape ({bank.d},), got {xi.shape}")
    if params.weights.shape != (bank.K,):
        raise ParameterError(f"expected {bank.K} weights, got {params.weights.shape[0]}")
    if not np.all(np.isfinite(xi)):
        raise NumericError("state has non-finite components")
    return xi


def logits(xi, bank: MemoryBank, params: EnergyParams) -> np.ndarray:
    xi = _check(xi, bank, params)
    return params.beta * (bank.unit_patterns.T @ xi) + params.log_weights


def _softmax(a: np.ndarray, axis: int = -1) -> np.ndarray:
    a = a - a.max(axis=axis, keepdims=True)
    e = np.exp(a)
    return e / e.sum(axis=axis, keepdims=True)


def _logsumexp(a: np.ndarray) -> float:
    top = a.max()
    return float(top + np.log(np.exp(a - top).sum()))


def energy(xi, bank: MemoryBank, params: EnergyParams) -> float:
    xi = _check(xi, bank, params)
    lse = _logsumexp(params.beta * (bank.unit_patterns.T @ xi) + params.log_weights)
    return float(0.5 * xi @ xi - lse / params.beta)


def attention(xi, bank: MemoryBank, params: EnergyParams) -> np.ndarray:
    return _softmax(logits(xi, bank, params))


def energy_gradient(xi, bank: MemoryBank, params: EnergyParams) -> np.ndarray:
    xi = _check(xi, bank, params)
    p = _softmax(params.beta * (bank.unit_patterns.T @ xi) + params.log_weights)
    return xi - bank.unit_patterns @ p


def normalized_entropy(p: np.ndarray, axis: int = -1) -> np.ndarray:
    """Shannon entropy divided by ``log K``; 0 log 0 taken as 0."""
    K = p.shape[axis]
    if K < 2:
        return np.zeros(np.delete(p.shape, axis))
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return -terms.sum(axis=axis) / np.log(K)


@dataclass(frozen=True)
class EntropyCurve:
    betas: np.ndarray
    entropies: np.ndarray
    beta_star: float | None = None


def default_beta_grid(n: int = 80, lo: float = 0.1, hi: float = 1000.0) -> np.ndarray:
    return np.logspace(np.log10(lo), np.log10(hi), n)


def entropy_curve(bank: MemoryBank, beta_grid=None, weights=None) -> EntropyCurve:
    """Mean normalized attention entropy over probes at each stored pattern.

    ``weights`` default to the bank's multiplicities; they bias the logits the
    same way they do during sampling.
    """
    betas = default_beta_grid() if beta_grid is None else np.asarray(beta_grid, dtype=float)
    if betas.ndim != 1 or betas.size < 8:
        raise ParameterError("beta grid needs at least 8 points")
    if np.any(betas <= 0) or np.any(np.diff(betas) <= 0):
        raise ParameterError("beta grid must be positive and strictly increasing")
    w = bank.weights if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (bank.K,) or np.any(w <= 0):
        raise ParameterError(f"expected {bank.K} positive weights")
    gram = bank.unit_patterns.T @ bank.unit_patterns  # probe j in column j
    log_w = np.log(w)[:, None]
    entropies = np.array(
        [normalized_entropy(_softmax(b * gram + log_w, axis=0), axis=0).mean() for b in betas]
    )
    entropies = np.clip(entropies, 0.0, 1.0)
    curve = EntropyCurve(betas, entropies)
    return EntropyCurve(betas, entropies, find_beta_star(curve))


def find_beta_star(curve: EntropyCurve) -> float:
    """Grid beta where the entropy curve bends down most sharply in log-beta.

    Second derivative by central differences on the (uniform) log grid; the
    first and last two grid points are never selected.
    """
    u = np.log(curve.betas)
    h = curve.entropies
    if u.size < 8:
        raise ParameterError("entropy curve needs at least 8 points")
    step = np.diff(u)
    if not np.allclose(step, step[0], rtol=1e-6):
        raise ParameterError("beta grid must be log-uniform")
    second = (h[2:] - 2 * h[1:-1] + h[:-2]) / step[0] ** 2  # second[i] is at grid index i + 1
    interior = second[1:-1]  # grid indices 2 .. B - 3
    if np.max(np.abs(interior)) < 1e-12:
        raise NumericError("entropy curve is flat; no inflection found")
    return float(curve.betas[2 + int(np.argmax(-interior))])


def multiplicity_for_fraction(f_target: float, K_des: int, K_bg: int) -> float:
    """Multiplicity putting attention mass ``f_target`` on the designated subset
    (for a probe equidistant from all patterns)."""
    if not 0.0 < f_target < 1.0:
        raise ParameterError(f"f_target must lie in (0, 1), got {f_target}")
    if K_des < 1 or K_bg < 1:
        raise ParameterError("need at least one designated and one background pattern")
    return f_target * K_bg / (K_des * (1.0 - f_target))


def designated_fraction(rho: float, K_des: int, K_bg: int) -> float:
    return K_des * rho / (K_des * rho + K_bg)


def participation_ratio(weights) -> float:
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise ParameterError("participation ratio of an empty weight vector")
    if np.any(w <= 0):
        raise ParameterError("weights must be positive")
    return float(w.sum() ** 2 / (w**2).sum())


def subgroup_weights(bank: MemoryBank, members, rho: float) -> np.ndarray:
    """Weight ``rho`` on the listed pattern ids, 1 elsewhere."""
    w = np.ones(bank.K)
    w[bank.index_of(members)] = rho
    return w
