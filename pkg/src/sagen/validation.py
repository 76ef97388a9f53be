"""Statistical comparison of real and synthetic cohorts.

Marginal fidelity (relative error of means, per-feature KS), joint structure
(correlation residuals, covariance spectra), conditional equivalence
(bootstrapped Mann-Whitney), memorization checks, and ratio-distribution
statistics for externally computed predicted/measured pairs.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from sagen import rng as rngs
from sagen.cohort_io import ProfileMatrix, SubgroupLabels
from sagen.errors import DimensionError, ParameterError

RANK_RTOL = 1e-8


def _sample(x, name: str = "sample") -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError(f"{name} is empty")
    return x


def midranks(x) -> np.ndarray:
    """1-based ranks with ties given their average rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    starts = np.flatnonzero(np.r_[True, sorted_x[1:] != sorted_x[:-1]])
    ends = np.r_[starts[1:], x.size]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(x.size)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """Survival function of the Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        # Dual (theta-function) form; the alternating series converges slowly here.
        j = np.arange(1, terms + 1)
        s = np.exp(-((2 * j - 1) ** 2) * math.pi**2 / (8 * lam**2)).sum()
        return float(min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * s)))
    j = np.arange(1, terms + 1)
    s = 2.0 * np.sum((-1.0) ** (j - 1) * np.exp(-2.0 * j**2 * lam**2))
    return float(min(1.0, max(0.0, s)))


def ks_two_sample(x, y) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic two-sided p-value."""
    x, y = np.sort(_sample(x, "x")), np.sort(_sample(y, "y"))
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    D = float(np.max(np.abs(fx - fy)))
    en = x.size * y.size / (x.size + y.size)
    return D, kolmogorov_sf(math.sqrt(en) * D)


def mann_whitney_u(x, y) -> tuple[float, float]:
    """U statistic of ``x`` (pairs with x > y, ties counted 1/2) and a
    two-sided normal-approximation p-value with tie and continuity corrections."""
    x, y = _sample(x, "x"), _sample(y, "y")
    n1, n2 = x.size, y.size
    ranks = midranks(np.concatenate([x, y]))
    U = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    n = n1 + n2
    _, counts = np.unique(np.concatenate([x, y]), return_counts=True)
    tie_term = float((counts**3 - counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return U, 1.0
    z = (abs(U - n1 * n2 / 2.0) - 0.5) / math.sqrt(var)
    return U, float(min(1.0, math.erfc(z / math.sqrt(2))))


def spearman(x, y) -> float:
    """Rank correlation; NaN when either input is constant."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"spearman needs equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 3:
        raise ParameterError("spearman needs at least 3 pairs")
    rx, ry = midranks(x), midranks(y)
    rx, ry = rx - rx.mean(), ry - ry.mean()
    denom = math.sqrt((rx @ rx) * (ry @ ry))
    return float(rx @ ry / denom) if denom > 0 else float("nan")


def bootstrap_ci(
    values,
    statistic: Callable[[np.ndarray], np.ndarray] = np.median,
    B: int = 10_000,
    seed: int = 42,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile-method bootstrap interval. ``statistic`` must accept ``axis=1``."""
    values = _sample(values, "values")
    if values.size < 2:
        raise ParameterError("bootstrap needs at least 2 values")
    if B < 100:
        raise ParameterError("bootstrap needs at least 100 resamples")
    rng = rngs.stream(seed, rngs.BOOTSTRAP)
    idx = rng.integers(0, values.size, size=(B, values.size))
    stats = statistic(values[idx], axis=1)
    tail = 100 * (1 - level) / 2
    lo, hi = np.percentile(stats, [tail, 100 - tail])
    return float(lo), float(hi)


def bootstrap_mw_equivalence(real_values, synth_values, B: int = 1000, seed: int = 42, alpha: float = 0.05) -> float:
    """Fraction of replicates where a Mann-Whitney test cannot tell real from
    a size-matched synthetic subsample (``p > alpha``)."""
    real = _sample(real_values, "real")
    synth = _sample(synth_values, "synth")
    if real.size < 2 or synth.size < real.size:
        raise ParameterError(f"need synth size >= real size >= 2, got {synth.size} and {real.size}")
    passed = 0
    for b in range(B):
        sub = rngs.stream(seed, rngs.BOOTSTRAP, b).choice(synth, size=real.size, replace=False)
        passed += mann_whitney_u(real, sub)[1] > alpha
    return passed / B


def _check_schema(real: ProfileMatrix, synth: ProfileMatrix) -> None:
    if real.feature_names != synth.feature_names or real.n_visits != synth.n_visits:
        raise DimensionError("real and synthetic cohorts have different feature/visit schemas")


@dataclass(frozen=True)
class MreEntry:
    feature: str
    visit: int
    real_mean: float
    synth_mean: float
    mre: float
    real_sd: float
    synth_sd: float
    ks_D: float
    ks_p: float


@dataclass(frozen=True)
class MreSummary:
    median: float
    mean: float
    q25: float
    q75: float
    max: float
    n_below: int
    n_total: int

    @property
    def frac_below(self) -> float:
        return self.n_below / self.n_total if self.n_total else float("nan")

    @classmethod
    def of(cls, mres, cutoff: float = 0.05) -> MreSummary:
        m = np.asarray(mres, dtype=float)
        if m.size == 0:
            nan = float("nan")
            return cls(nan, nan, nan, nan, nan, 0, 0)
        q25, q50, q75 = np.percentile(m, [25, 50, 75])
        return cls(float(q50), float(m.mean()), float(q25), float(q75), float(m.max()), int((m < cutoff).sum()), m.size)


@dataclass(frozen=True)
class MreReport:
    entries: list[MreEntry]
    per_visit: dict[int, MreSummary]
    pooled: MreSummary
    pooled_median_ci: tuple[float, float] | None
    undefined: list[tuple[str, int]] = field(default_factory=list)


def mre_table(real: ProfileMatrix, synth: ProfileMatrix, B: int = 10_000, seed: int = 42) -> MreReport:
    """Relative error of synthetic feature means per (feature, visit).

    Entries whose real mean is zero are listed under ``undefined`` and left out
    of the summaries.
    """
    _check_schema(real, synth)
    if synth.K == 0:
        raise ParameterError("synthetic cohort is empty")
    entries, undefined = [], []
    real_mean, synth_mean = real.matrix.mean(axis=0), synth.matrix.mean(axis=0)
    real_sd = real.matrix.std(axis=0, ddof=1) if real.K > 1 else np.full(real.d_concat, np.nan)
    synth_sd = synth.matrix.std(axis=0, ddof=1) if synth.K > 1 else np.full(synth.d_concat, np.nan)
    for j in range(real.d_concat):
        visit, name = real.column_map(j)
        if real_mean[j] == 0:
            undefined.append((name, visit))
            continue
        D, p = ks_two_sample(real.matrix[:, j], synth.matrix[:, j])
        entries.append(
            MreEntry(
                name,
                visit,
                float(real_mean[j]),
                float(synth_mean[j]),
                float(abs(synth_mean[j] - real_mean[j]) / abs(real_mean[j])),
                float(real_sd[j]),
                float(synth_sd[j]),
                D,
                p,
            )
        )
    per_visit = {v: MreSummary.of([e.mre for e in entries if e.visit == v]) for v in range(1, real.n_visits + 1)}
    pooled_values = [e.mre for e in entries]
    pooled = MreSummary.of(pooled_values)
    ci = bootstrap_ci(pooled_values, np.median, B, seed) if len(pooled_values) >= 2 else None
    return MreReport(entries, per_visit, pooled, ci, undefined)


def pearson_matrix(x: np.ndarray) -> np.ndarray:
    """Column correlations; rows/columns of constant columns are NaN."""
    x = np.asarray(x, dtype=float)
    c = x - x.mean(axis=0)
    norms = np.sqrt((c**2).sum(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        u = c / np.where(norms > 0, norms, np.nan)
    corr = u.T @ u
    corr = np.clip((corr + corr.T) / 2, -1.0, 1.0)
    ok = norms > 0
    corr[np.ix_(ok, ok)] = np.where(np.eye(ok.sum(), dtype=bool), 1.0, corr[np.ix_(ok, ok)])
    return corr


def frobenius(residual: np.ndarray) -> float:
    return float(np.sqrt(np.nansum(residual**2)))


def covariance_spectrum(x: np.ndarray) -> np.ndarray:
    if x.shape[0] < 2:
        return np.zeros(0)
    eig = np.linalg.eigvalsh(np.cov(x, rowvar=False, ddof=1))
    return np.clip(eig[::-1], 0.0, None)


def effective_rank(eigenvalues, rtol: float = RANK_RTOL) -> int:
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.size == 0 or eigenvalues.max() <= 0:
        return 0
    return int(np.sum(eigenvalues > rtol * eigenvalues.max()))


@dataclass(frozen=True)
class StructureReport:
    correlations: dict[str, np.ndarray]
    residuals: dict[str, np.ndarray]
    frobenius_norms: dict[str, float]
    block_frobenius: dict[str, dict[tuple[int, int], float]]
    corr_mae: dict[str, float]
    eigenvalues: dict[str, np.ndarray]
    effective_ranks: dict[str, int]


def correlation_structure(
    real: ProfileMatrix,
    synth_a: ProfileMatrix,
    synth_b: ProfileMatrix | None = None,
    names: tuple[str, str] = ("sa", "mvn"),
) -> StructureReport:
    """Correlation residuals between cohorts and their covariance spectra.

    Spectra are computed after scaling every cohort by the real cohort's
    column means and standard deviations, so they share units.
    """
    cohorts = {"real": real, names[0]: synth_a}
    if synth_b is not None:
        cohorts[names[1]] = synth_b
    for c in cohorts.values():
        _check_schema(real, c)
    corr = {label: pearson_matrix(c.matrix) for label, c in cohorts.items()}
    labels = list(cohorts)
    pairs = [(a, "real") for a in labels[1:]]
    if synth_b is not None:
        pairs.append((labels[1], labels[2]))
    residuals = {f"{a}-{b}": corr[a] - corr[b] for a, b in pairs}

    n, V = real.n, real.n_visits
    block_norms, mae = {}, {}
    off_diag = ~np.eye(real.d_concat, dtype=bool)
    for key, r in residuals.items():
        block_norms[key] = {
            (i + 1, j + 1): frobenius(r[i * n : (i + 1) * n, j * n : (j + 1) * n]) for i in range(V) for j in range(V)
        }
        vals = np.abs(r[off_diag])
        mae[key] = float(np.nanmean(vals)) if np.isfinite(vals).any() else float("nan")

    mu = real.matrix.mean(axis=0)
    sd = real.matrix.std(axis=0, ddof=1) if real.K > 1 else np.ones(real.d_concat)
    sd = np.where(sd > 0, sd, 1.0)
    eig = {label: covariance_spectrum((c.matrix - mu) / sd) for label, c in cohorts.items()}
    return StructureReport(
        corr,
        residuals,
        {k: frobenius(r) for k, r in residuals.items()},
        block_norms,
        mae,
        eig,
        {k: effective_rank(e) for k, e in eig.items()},
    )


@dataclass(frozen=True)
class NearestNeighborReport:
    median_synth_to_real: float
    median_real_to_real: float
    ratio: float


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq = (a**2).sum(axis=1)[:, None] + (b**2).sum(axis=1)[None, :] - 2 * a @ b.T
    return np.sqrt(np.clip(sq, 0.0, None))


def nearest_neighbor_report(real: ProfileMatrix, synth: ProfileMatrix) -> NearestNeighborReport:
    """Median Euclidean nearest-neighbor distances in per-visit standardized space.

    Each visit's records are scaled by that visit's real column statistics;
    synthetic records are matched to real records of the same visit, and the
    real-to-real distances leave the record itself out.
    """
    _check_schema(real, synth)
    if real.K < 2:
        raise ParameterError("need at least 2 real records")
    s2r, r2r = [], []
    for v in range(1, real.n_visits + 1):
        rv, sv = real.visit_block(v), synth.visit_block(v)
        mu, sd = rv.mean(axis=0), rv.std(axis=0, ddof=1)
        keep = sd > 0
        rz = (rv[:, keep] - mu[keep]) / sd[keep]
        sz = (sv[:, keep] - mu[keep]) / sd[keep]
        if sz.shape[0]:
            # Exact copies must read as distance 0, not sqrt of rounding noise.
            d = _pairwise(sz, rz)
            d[np.isclose(d, 0.0, atol=1e-6)] = 0.0
            s2r.append(d.min(axis=1))
        rr = _pairwise(rz, rz)
        np.fill_diagonal(rr, np.inf)
        r2r.append(rr.min(axis=1))
    if not s2r:
        raise ParameterError("synthetic cohort is empty")
    med_s = float(np.median(np.concatenate(s2r)))
    med_r = float(np.median(np.concatenate(r2r)))
    return NearestNeighborReport(med_s, med_r, med_s / med_r if med_r > 0 else float("nan"))


def cloud_overlap(real_ratios, synth_ratios, lo_pct: float = 5.0, hi_pct: float = 95.0) -> float:
    """Fraction of synthetic values inside the real ``[lo_pct, hi_pct]`` percentile band."""
    real = _sample(real_ratios, "real ratios")
    synth = _sample(synth_ratios, "synth ratios")
    lo, hi = np.percentile(real, [lo_pct, hi_pct])
    return float(np.mean((synth >= lo) & (synth <= hi)))


@dataclass(frozen=True)
class RatioStats:
    group: str
    n_real: int
    n_synth: int
    cloud_overlap: float
    ks_D: float
    ks_p: float


def ratio_report(pairs: Sequence[tuple[str, str, float, float]]) -> list[RatioStats]:
    """Per-group ratio statistics from ``(group, source, predicted, measured)``
    rows, ``source`` being ``real`` or ``synth``."""
    ratios: dict[str, dict[str, list[float]]] = {}
    for group, source, predicted, measured in pairs:
        source = source.strip().lower()
        if source not in ("real", "synth"):
            raise ParameterError(f"ratio source must be 'real' or 'synth', got {source!r}")
        if measured == 0 or not (np.isfinite(predicted) and np.isfinite(measured)):
            continue
        ratios.setdefault(group, {"real": [], "synth": []})[source].append(predicted / measured)
    out = []
    for group in sorted(ratios):
        real, synth = ratios[group]["real"], ratios[group]["synth"]
        if not real or not synth:
            raise ParameterError(f"ratio group {group!r} needs both real and synthetic pairs")
        D, p = ks_two_sample(real, synth)
        out.append(RatioStats(group, len(real), len(synth), cloud_overlap(real, synth), D, p))
    return out


@dataclass(frozen=True)
class EquivalenceEntry:
    condition: str
    feature: str
    n_real: int
    n_synth: int
    mre: float
    frac_nonsignificant: float
    passed: bool


def equivalence_report(
    real: ProfileMatrix,
    labels: SubgroupLabels,
    synth_by_condition: Mapping[str, ProfileMatrix],
    features: Sequence[str] | None = None,
    B: int = 1000,
    seed: int = 42,
    pass_fraction: float = 0.90,
) -> list[EquivalenceEntry]:
    """Bootstrapped Mann-Whitney equivalence per (condition, feature).

    Values are pooled across visits for both the real subgroup and the
    synthetic cohort generated for that condition.
    """
    features = list(real.feature_names if features is None else features)
    unknown = [f for f in features if f not in real.feature_names]
    if unknown:
        raise DimensionError(f"unknown features: {unknown}")
    out = []
    for condition in sorted(synth_by_condition):
        synth = synth_by_condition[condition]
        _check_schema(real, synth)
        members = labels.members(condition)
        if not members:
            raise ParameterError(f"no real patients carry condition {condition!r}")
        sub = real.subset(members)
        for name in features:
            j = real.feature_names.index(name)
            cols = [j + v * real.n for v in range(real.n_visits)]
            r = sub.matrix[:, cols].ravel()
            s = synth.matrix[:, cols].ravel()
            rm = r.mean()
            mre = abs(s.mean() - rm) / abs(rm) if rm != 0 else float("nan")
            frac = bootstrap_mw_equivalence(r, s, B, seed)
            out.append(EquivalenceEntry(condition, name, r.size, s.size, float(mre), frac, frac >= pass_fraction))
    return out
