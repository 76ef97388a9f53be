"""Fitted pipeline: standardizer, PCA, memory bank and inverse temperature.

The model file is JSON with sorted keys and round-trip float formatting, so
refitting the same inputs yields a byte-identical file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sagen import __version__
from sagen.cohort_io import ProfileMatrix, SubgroupLabels
from sagen.embedding import (
    MemoryBank,
    PcaModel,
    Standardizer,
    build_memory_bank,
    fit_pca,
    fit_standardizer,
    project,
)
from sagen.errors import ParameterError, SchemaError
from sagen.hopfield import EntropyCurve, default_beta_grid, entropy_curve

FORMAT_VERSION = 1


@dataclass(frozen=True)
class PipelineModel:
    standardizer: Standardizer
    pca: PcaModel
    bank: MemoryBank
    profiles: ProfileMatrix
    curve: EntropyCurve
    labels: SubgroupLabels = field(default_factory=SubgroupLabels)
    missing_threshold: float = 0.30

    @property
    def beta_star(self) -> float:
        return self.curve.beta_star

    @property
    def d_pca(self) -> int:
        return self.pca.d_pca

    def members(self, condition: str) -> list[str]:
        members = self.labels.members(condition.lower())
        if not members:
            raise ParameterError(f"no stored pattern carries condition {condition!r}")
        return members

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "tool_version": __version__,
            "config": {
                "variance_threshold": self.pca.threshold,
                "missing_threshold": self.missing_threshold,
            },
            "profiles": {
                "patient_ids": list(self.profiles.patient_ids),
                "feature_names": list(self.profiles.feature_names),
                "n_visits": self.profiles.n_visits,
                "matrix": self.profiles.matrix.tolist(),
            },
            "standardizer": {"mu": self.standardizer.mu.tolist(), "sigma": self.standardizer.sigma.tolist()},
            "pca": {
                "d_pca": self.pca.d_pca,
                "loadings": self.pca.loadings.tolist(),
                "z_bar": self.pca.z_bar.tolist(),
                "explained_variance": self.pca.explained_variance.tolist(),
                "explained_fraction": self.pca.explained_fraction.tolist(),
                "cumulative_fraction": self.pca.cumulative_fraction,
            },
            "memory_bank": {
                "pattern_ids": list(self.bank.pattern_ids),
                "unit_patterns": self.bank.unit_patterns.tolist(),
                "magnitudes": self.bank.magnitudes.tolist(),
            },
            "entropy_curve": {
                "betas": self.curve.betas.tolist(),
                "entropies": self.curve.entropies.tolist(),
                "beta_star": self.curve.beta_star,
            },
            "labels": {pid: sorted(tags) for pid, tags in sorted(self.labels.tags.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> PipelineModel:
        if data.get("format_version") != FORMAT_VERSION:
            raise SchemaError(f"unsupported model format version {data.get('format_version')!r}")
        try:
            prof = data["profiles"]
            profiles = ProfileMatrix(
                tuple(prof["patient_ids"]),
                np.asarray(prof["matrix"], dtype=float),
                tuple(prof["feature_names"]),
                int(prof["n_visits"]),
            )
            std = Standardizer(np.asarray(data["standardizer"]["mu"]), np.asarray(data["standardizer"]["sigma"]))
            p = data["pca"]
            pca = PcaModel(
                np.asarray(p["loadings"], dtype=float).reshape(profiles.d_concat, p["d_pca"]),
                np.asarray(p["z_bar"], dtype=float),
                np.asarray(p["explained_variance"], dtype=float),
                np.asarray(p["explained_fraction"], dtype=float),
                float(data["config"]["variance_threshold"]),
            )
            b = data["memory_bank"]
            bank = MemoryBank(
                np.asarray(b["unit_patterns"], dtype=float).reshape(pca.d_pca, len(b["pattern_ids"])),
                np.asarray(b["magnitudes"], dtype=float),
                tuple(b["pattern_ids"]),
                np.ones(len(b["pattern_ids"])),
            )
            c = data["entropy_curve"]
            curve = EntropyCurve(np.asarray(c["betas"]), np.asarray(c["entropies"]), float(c["beta_star"]))
            labels = SubgroupLabels({pid: frozenset(t) for pid, t in data["labels"].items()})
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed model file: {exc}") from exc
        return cls(std, pca, bank, profiles, curve, labels, float(data["config"]["missing_threshold"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> PipelineModel:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not a model file ({exc})") from exc
        return cls.from_dict(data)


def fit_pipeline(
    profiles: ProfileMatrix,
    labels: SubgroupLabels | None = None,
    variance_threshold: float = 0.95,
    beta_grid=None,
    missing_threshold: float = 0.30,
) -> PipelineModel:
    """Standardize, project, normalize the patterns and locate the entropy inflection."""
    labels = (labels or SubgroupLabels()).restrict_to(profiles.patient_ids)
    labels.check_against(profiles)
    std = fit_standardizer(profiles)
    pca = fit_pca(std.transform(profiles.matrix), variance_threshold)
    bank = build_memory_bank(project(pca, std, profiles), profiles.patient_ids)
    curve = entropy_curve(bank, default_beta_grid() if beta_grid is None else beta_grid)
    return PipelineModel(std, pca, bank, profiles, curve, labels, missing_threshold)
