"""Command-line front end: fit, generate, validate, beta-sweep, pca-sweep, diagnostics.

Every command writes a JSON run manifest next to its outputs. Manifests hold
the resolved configuration and SHA-256 hashes of inputs and outputs, and no
timestamps, so identical runs give identical manifests.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import os
import sys
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sagen import __version__
from sagen import rng as rngs
from sagen.baselines import mvn_baseline, mvn_sample
from sagen.cohort_io import (
    CohortSchema,
    ProfileMatrix,
    concatenate_visits,
    filter_missing,
    load_cohort,
    load_grouped_cohorts,
    load_labels,
    write_long,
    write_profiles,
)
from sagen.embedding import project
from sagen.errors import ParameterError, SagenError, SchemaError
from sagen.hopfield import EnergyParams
from sagen.pipeline import PipelineModel, fit_pipeline
from sagen.samplers import (
    ChainConfig,
    SyntheticCohort,
    chain_diagnostics,
    generate_cohort,
    mala_chain,
    noise_scale,
    novelty_of,
    ula_chain,
)
from sagen.validation import (
    correlation_structure,
    equivalence_report,
    mre_table,
    nearest_neighbor_report,
    ratio_report,
)

logger = logging.getLogger("sagen")

OUTPUT_DIR_ENV = "SAGEN_OUTPUT_DIR"


@dataclass
class RunConfig:
    input: str | None = None
    labels: str | None = None
    model: str | None = None
    real: str | None = None
    synth: str | None = None
    synth_b: str | None = None
    conditioned: tuple[str, ...] = ()
    ratios: str | None = None
    output: str = "cohort.csv"
    out_dir: str | None = None
    id_column: str = "patient_id"
    visit_column: str = "visit"
    label_column: str = "condition"
    delimiter: str = ","
    variance_threshold: float = 0.95
    missing_threshold: float = 0.30
    alpha: float = 0.01
    T: int = 2000
    N: int = 100
    seed: int = 42
    f_target: float = 0.80
    method: str = "sa"
    condition: str | None = None
    beta: float | None = None
    features: tuple[str, ...] | None = None
    bootstrap: int = 10_000
    mw_bootstrap: int = 1000
    beta_ratios: tuple[float, ...] = (0.1, 0.3, 0.5, 1.0, 1.5, 2.0, 3.0)
    thresholds: tuple[float, ...] = (0.85, 0.90, 0.95, 0.975, 0.99)
    chains: int = 10
    iterations: int = 5000
    burn_in: int = 1000

    @classmethod
    def resolve(cls, file_values: dict, flag_values: dict) -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(file_values) - names)
        if unknown:
            raise ParameterError(f"unknown config keys: {unknown}")
        merged = {**file_values, **flag_values}
        for key in ("conditioned", "features", "beta_ratios", "thresholds"):
            if merged.get(key) is not None:
                merged[key] = tuple(merged[key])
        cfg = cls(**merged)
        if cfg.out_dir is None:
            cfg.out_dir = os.environ.get(OUTPUT_DIR_ENV, "sagen_out")
        if cfg.method not in ("sa", "mvn"):
            raise ParameterError(f"method must be 'sa' or 'mvn', got {cfg.method!r}")
        return cfg

    @property
    def schema(self) -> CohortSchema:
        return CohortSchema(self.id_column, self.visit_column, self.delimiter)

    def as_manifest(self, keys: Sequence[str]) -> dict:
        return {k: _jsonable(getattr(self, k)) for k in keys}


def _jsonable(value):
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, np.generic):
        return value.item()
    return value


def sha256_of(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, sort_keys=True, indent=1, default=_jsonable) + "\n", encoding="utf-8")


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_manifest(
    out_dir: Path, command: str, config: dict, inputs: dict, outputs: Sequence[Path], results=None, name: str | None = None
) -> Path:
    manifest = {
        "tool": "sagen",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {key: {"path": str(p), "sha256": sha256_of(p)} for key, p in inputs.items() if p},
        "outputs": {p.name: sha256_of(p) for p in outputs},
        "results": results or {},
    }
    path = out_dir / (name or f"{command}_manifest.json")
    write_json(path, manifest)
    return path


def _require(value, flag: str):
    if value is None:
        raise ParameterError(f"{flag} is required")
    return value


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model_path(cfg: RunConfig) -> Path:
    return Path(cfg.model) if cfg.model else Path(cfg.out_dir) / "model.json"


def _load_model(cfg: RunConfig) -> tuple[PipelineModel, Path]:
    path = _model_path(cfg)
    if not path.exists():
        raise ParameterError(f"model file {path} not found; run `sagen fit` first")
    return PipelineModel.load(path), path


def load_profiles(path: str, cfg: RunConfig) -> ProfileMatrix:
    return concatenate_visits(filter_missing(load_cohort(path, cfg.schema), cfg.missing_threshold))


def cmd_fit(cfg: RunConfig) -> dict:
    _require(cfg.input, "--input")
    out = _out_dir(cfg)
    profiles = load_profiles(cfg.input, cfg)
    labels = load_labels(cfg.labels, cfg.id_column, cfg.label_column, cfg.delimiter) if cfg.labels else None
    model = fit_pipeline(profiles, labels, cfg.variance_threshold, missing_threshold=cfg.missing_threshold)
    model_path = out / "model.json"
    model.save(model_path)
    profiles_path = out / "profiles.csv"
    write_profiles(profiles_path, profiles, cfg.delimiter, cfg.id_column)
    report = {
        "K": profiles.K,
        "n_features": profiles.n,
        "n_visits": profiles.n_visits,
        "d_concat": profiles.d_concat,
        "d_pca": model.d_pca,
        "cumulative_variance": model.pca.cumulative_fraction,
        "memory_to_dimension": profiles.K / model.d_pca,
        "beta_star": model.beta_star,
        "sqrt_d_pca": float(np.sqrt(model.d_pca)),
        "feature_names": list(profiles.feature_names),
        "column_map": profiles.column_names,
        "conditions": {tag: len(model.labels.members(tag)) for tag in model.labels.all_tags},
    }
    report_path = out / "fit_report.json"
    write_json(report_path, report)
    keys = ["id_column", "visit_column", "label_column", "delimiter", "variance_threshold", "missing_threshold"]
    write_manifest(out, "fit", cfg.as_manifest(keys), {"input": cfg.input, "labels": cfg.labels},
                   [model_path, profiles_path, report_path], {"d_pca": model.d_pca, "beta_star": model.beta_star})
    logger.info("fitted K=%d, d_pca=%d, beta*=%.4g", profiles.K, model.d_pca, model.beta_star)
    return report


def write_cohort(path: Path, cohort: SyntheticCohort, cfg: RunConfig) -> None:
    table = cohort.to_table()
    write_long(path, table, cfg.schema, {"condition": [cohort.condition] * table.n_records})


def cmd_generate(cfg: RunConfig) -> dict:
    model, model_path = _load_model(cfg)
    out = _out_dir(cfg)
    if cfg.method == "mvn":
        if cfg.condition:
            raise ParameterError("the MVN baseline does not support conditional generation")
        cohort = mvn_sample(mvn_baseline(model), cfg.N, cfg.seed)
    else:
        chain = ChainConfig(alpha=cfg.alpha, T=cfg.T, seed=cfg.seed)
        cohort = generate_cohort(model, cfg.N, cfg.condition, cfg.f_target, chain, cfg.beta)
    cohort_path = out / cfg.output
    write_cohort(cohort_path, cohort, cfg)
    results = dict(cohort.provenance)
    if cohort.directions is not None and cohort.N:
        results["mean_novelty"] = float(np.mean([novelty_of(d, model.bank) for d in cohort.directions]))
    keys = ["method", "N", "seed", "alpha", "T", "beta", "condition", "f_target", "output", "id_column", "visit_column", "delimiter"]
    write_manifest(out, "generate", cfg.as_manifest(keys), {"model": model_path}, [cohort_path], results,
                   name=f"{cohort_path.stem}_manifest.json")
    return results


def _grouped_profiles(path: str, cfg: RunConfig, features) -> dict[str, ProfileMatrix]:
    schema = dataclasses.replace(cfg.schema, feature_columns=tuple(features))
    return {g: concatenate_visits(t) for g, t in load_grouped_cohorts(path, schema, cfg.label_column).items()}


def cmd_validate(cfg: RunConfig) -> dict:
    _require(cfg.real, "--real")
    _require(cfg.synth, "--synth")
    out = _out_dir(cfg) / "validation"
    out.mkdir(exist_ok=True)
    real = load_profiles(cfg.real, cfg)
    synth_groups = _grouped_profiles(cfg.synth, cfg, real.feature_names)
    for extra in cfg.conditioned:
        for group, prof in _grouped_profiles(extra, cfg, real.feature_names).items():
            if group in synth_groups:
                raise SchemaError(f"condition {group!r} appears in more than one synthetic file")
            synth_groups[group] = prof
    summary: dict = {"real": {"K": real.K, "d_concat": real.d_concat}, "notices": []}
    outputs: list[Path] = []

    synth = synth_groups.get("all")
    if synth is not None:
        mre = mre_table(real, synth, cfg.bootstrap, cfg.seed)
        p = out / "mre_entries.csv"
        write_csv(p, ["feature", "visit", "real_mean", "synth_mean", "mre", "real_sd", "synth_sd", "ks_D", "ks_p"],
                  ([e.feature, e.visit, e.real_mean, e.synth_mean, e.mre, e.real_sd, e.synth_sd, e.ks_D, e.ks_p] for e in mre.entries))
        outputs.append(p)
        rows = [(f"visit{v}", s) for v, s in mre.per_visit.items()] + [("pooled", mre.pooled)]
        p = out / "mre_summary.csv"
        write_csv(p, ["scope", "median", "mean", "q25", "q75", "max", "n_below_5pct", "n_total"],
                  ([k, s.median, s.mean, s.q25, s.q75, s.max, s.n_below, s.n_total] for k, s in rows))
        outputs.append(p)
        summary["level1"] = {
            "pooled": dataclasses.asdict(mre.pooled),
            "pooled_median_ci": mre.pooled_median_ci,
            "per_visit": {str(v): dataclasses.asdict(s) for v, s in mre.per_visit.items()},
            "median_ks_D": float(np.median([e.ks_D for e in mre.entries])) if mre.entries else None,
            "undefined_entries": mre.undefined,
        }

        synth_b = _grouped_profiles(cfg.synth_b, cfg, real.feature_names).get("all") if cfg.synth_b else None
        st = correlation_structure(real, synth, synth_b)
        p = out / "frobenius.csv"
        write_csv(p, ["residual", "block", "frobenius"],
                  [(k, "full", v) for k, v in st.frobenius_norms.items()]
                  + [(k, f"V{i}-V{j}", v) for k, blocks in st.block_frobenius.items() for (i, j), v in blocks.items()])
        outputs.append(p)
        p = out / "eigenvalues.csv"
        labels = list(st.eigenvalues)
        width = max(len(e) for e in st.eigenvalues.values())
        write_csv(p, ["component", *labels],
                  ([i + 1, *(float(st.eigenvalues[l][i]) if i < len(st.eigenvalues[l]) else "" for l in labels)] for i in range(width)))
        outputs.append(p)
        summary["level2"] = {"frobenius": st.frobenius_norms, "corr_mae": st.corr_mae, "effective_ranks": st.effective_ranks}

        nn = nearest_neighbor_report(real, synth)
        summary["memorization"] = dataclasses.asdict(nn)
        if cfg.model:
            model, _ = _load_model(cfg)
            scores = project(model.pca, model.standardizer, synth.matrix).T
            summary["memorization"]["mean_novelty"] = float(np.mean([novelty_of(s, model.bank) for s in scores]))
    else:
        summary["notices"].append("no unconditioned synthetic records; Levels 1-2 skipped")

    conditioned = {g: p for g, p in synth_groups.items() if g != "all"}
    if conditioned and cfg.labels:
        labels = load_labels(cfg.labels, cfg.id_column, cfg.label_column, cfg.delimiter).restrict_to(real.patient_ids)
        eq = equivalence_report(real, labels, conditioned, cfg.features, cfg.mw_bootstrap, cfg.seed)
        p = out / "equivalence.csv"
        write_csv(p, ["condition", "feature", "n_real", "n_synth", "mre", "frac_p_gt_0.05", "pass"],
                  ([e.condition, e.feature, e.n_real, e.n_synth, e.mre, e.frac_nonsignificant, int(e.passed)] for e in eq))
        outputs.append(p)
        fracs = [e.frac_nonsignificant for e in eq]
        summary["level3"] = {
            "pairs": len(eq),
            "passed": sum(e.passed for e in eq),
            "median_fraction": float(np.median(fracs)) if fracs else None,
            "failing": [f"{e.condition}:{e.feature}" for e in eq if not e.passed],
        }
    elif not cfg.labels:
        summary["notices"].append("no labels file; Level 3 skipped")
    else:
        summary["notices"].append("no conditioned synthetic records; Level 3 skipped")

    if cfg.ratios:
        stats = ratio_report(read_ratio_pairs(cfg.ratios, cfg.delimiter))
        p = out / "ratio_stats.csv"
        write_csv(p, ["group", "n_real", "n_synth", "cloud_overlap", "ks_D", "ks_p"],
                  ([s.group, s.n_real, s.n_synth, s.cloud_overlap, s.ks_D, s.ks_p] for s in stats))
        outputs.append(p)
        summary["ratios"] = [dataclasses.asdict(s) for s in stats]

    p = out / "summary.json"
    write_json(p, summary)
    outputs.append(p)
    keys = ["missing_threshold", "bootstrap", "mw_bootstrap", "seed", "features", "delimiter"]
    inputs = {"real": cfg.real, "synth": cfg.synth, "synth_b": cfg.synth_b, "labels": cfg.labels, "ratios": cfg.ratios, "model": cfg.model}
    inputs.update({f"conditioned_{i}": c for i, c in enumerate(cfg.conditioned)})
    write_manifest(out, "validate", cfg.as_manifest(keys), inputs, outputs)
    for notice in summary["notices"]:
        logger.warning(notice)
    return summary


def read_ratio_pairs(path: str, delimiter: str = ",") -> list[tuple[str, str, float, float]]:
    """Rows of ``group, source, predicted, measured``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        need = {"group", "source", "predicted", "measured"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise SchemaError(f"{path}: ratio file needs columns {sorted(need)}")
        rows = []
        for row in reader:
            try:
                rows.append((row["group"], row["source"], float(row["predicted"]), float(row["measured"])))
            except ValueError:
                continue
    return rows


def _fidelity(model: PipelineModel, cohort: SyntheticCohort) -> dict:
    real = model.profiles
    synth = cohort.profile_matrix()
    mre = mre_table(real, synth, B=100)
    novelty = float(np.mean([novelty_of(d, model.bank) for d in cohort.directions]))
    real_scores = project(model.pca, model.standardizer, real.matrix)
    synth_scores = project(model.pca, model.standardizer, synth.matrix)
    pc1 = float(synth_scores[0].std(ddof=1) / real_scores[0].std(ddof=1))
    return {"novelty": novelty, "median_mre": mre.pooled.median, "pc1_std_ratio": pc1, "synth": synth}


def cmd_beta_sweep(cfg: RunConfig) -> list[dict]:
    model, model_path = _load_model(cfg)
    out = _out_dir(cfg)
    beta_star = model.beta_star if cfg.beta is None else cfg.beta
    rows = []
    for ratio in cfg.beta_ratios:
        beta = ratio * beta_star
        cohort = generate_cohort(model, cfg.N, None, cfg.f_target, ChainConfig(alpha=cfg.alpha, T=cfg.T, seed=cfg.seed), beta)
        fid = _fidelity(model, cohort)
        rows.append({"beta_ratio": ratio, "beta": beta, "noise_scale": noise_scale(cfg.alpha, beta),
                     "pc1_std_ratio": fid["pc1_std_ratio"], "novelty": fid["novelty"], "median_mre": fid["median_mre"]})
    sweep_path = out / "beta_sweep.csv"
    write_csv(sweep_path, list(rows[0]) if rows else ["beta_ratio"], (list(r.values()) for r in rows))
    curve_path = out / "entropy_curve.csv"
    write_csv(curve_path, ["beta", "normalized_entropy"], zip(model.curve.betas, model.curve.entropies))
    keys = ["N", "seed", "alpha", "T", "beta", "beta_ratios"]
    write_manifest(out, "beta-sweep", cfg.as_manifest(keys), {"model": model_path}, [sweep_path, curve_path],
                   {"beta_star": model.beta_star, "reference_beta": beta_star})
    return rows


def cmd_pca_sweep(cfg: RunConfig) -> list[dict]:
    model, model_path = _load_model(cfg)
    out = _out_dir(cfg)
    rows = []
    for threshold in cfg.thresholds:
        refit = fit_pipeline(model.profiles, model.labels, threshold, model.curve.betas, model.missing_threshold)
        cohort = generate_cohort(refit, cfg.N, None, cfg.f_target, ChainConfig(alpha=cfg.alpha, T=cfg.T, seed=cfg.seed))
        fid = _fidelity(refit, cohort)
        corr_mae = correlation_structure(model.profiles, fid["synth"]).corr_mae["sa-real"]
        rows.append({"threshold": threshold, "d_pca": refit.d_pca, "K_over_d": refit.profiles.K / refit.d_pca,
                     "beta_star": refit.beta_star, "novelty": fid["novelty"], "median_mre": fid["median_mre"],
                     "corr_mae": corr_mae})
    path = out / "pca_sweep.csv"
    write_csv(path, list(rows[0]) if rows else ["threshold"], (list(r.values()) for r in rows))
    keys = ["N", "seed", "alpha", "T", "thresholds"]
    write_manifest(out, "pca-sweep", cfg.as_manifest(keys), {"model": model_path}, [path])
    return rows


def run_diagnostics(bank, beta: float, alpha: float, chains: int, iterations: int, burn_in: int, seed: int) -> dict:
    """ULA and MALA side by side; chain ``c`` of each sampler has its own stream."""
    params = EnergyParams.for_bank(bank, beta)
    config = ChainConfig(alpha=alpha, T=iterations, burn_in=burn_in, seed=seed, record_trace=True)
    per_chain = {"ula": [], "mala": []}
    for c in range(chains):
        for k, (name, sampler) in enumerate((("ula", ula_chain), ("mala", mala_chain))):
            result = sampler(bank, params, config, rng=rngs.stream(seed, rngs.DIAGNOSTIC_CHAINS, c, k))
            diag = chain_diagnostics(result.energies, burn_in)
            row = {"chain": c, **dataclasses.asdict(diag)}
            if result.acceptance_rate is not None:
                row["acceptance_rate"] = result.acceptance_rate
            per_chain[name].append(row)
    summary = {}
    for name, rows in per_chain.items():
        summary[name] = {}
        for key in ("acceptance_rate", "mean_energy", "tau_int", "ess"):
            vals = [r[key] for r in rows if key in r]
            if vals:
                summary[name][key] = {"mean": float(np.mean(vals)), "sd": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0}
    return {"per_chain": per_chain, "summary": summary}


def cmd_diagnostics(cfg: RunConfig) -> dict:
    model, model_path = _load_model(cfg)
    out = _out_dir(cfg)
    beta = model.beta_star if cfg.beta is None else cfg.beta
    if cfg.chains < 1:
        raise ParameterError("need at least one chain")
    result = run_diagnostics(model.bank, beta, cfg.alpha, cfg.chains, cfg.iterations, cfg.burn_in, cfg.seed)
    path = out / "diagnostics.csv"
    write_csv(path, ["sampler", "chain", "acceptance_rate", "mean_energy", "sd_energy", "tau_int", "ess"],
              ([name, r["chain"], r.get("acceptance_rate", ""), r["mean_energy"], r["sd_energy"], r["tau_int"], r["ess"]]
               for name, rows in result["per_chain"].items() for r in rows))
    keys = ["alpha", "beta", "chains", "iterations", "burn_in", "seed"]
    write_manifest(out, "diagnostics", cfg.as_manifest(keys), {"model": model_path}, [path],
                   {"beta": beta, **result["summary"]})
    return result["summary"]


COMMANDS = {
    "fit": cmd_fit,
    "generate": cmd_generate,
    "validate": cmd_validate,
    "beta-sweep": cmd_beta_sweep,
    "pca-sweep": cmd_pca_sweep,
    "diagnostics": cmd_diagnostics,
}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _strings(text: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file of option values; flags override it")
    common.add_argument("--out-dir", dest="out_dir", help=f"output directory (default ${OUTPUT_DIR_ENV} or ./sagen_out)")
    common.add_argument("--model", help="model file (default OUT_DIR/model.json)")
    common.add_argument("--id-column", dest="id_column")
    common.add_argument("--visit-column", dest="visit_column")
    common.add_argument("--label-column", dest="label_column")
    common.add_argument("--delimiter")
    common.add_argument("--seed", type=int)
    common.add_argument("--missing-threshold", dest="missing_threshold", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    chain = argparse.ArgumentParser(add_help=False, argument_default=S)
    chain.add_argument("--alpha", type=float, help="Langevin step size")
    chain.add_argument("--T", "--iterations-per-sample", dest="T", type=int, help="Langevin iterations per sample")
    chain.add_argument("--beta", type=float, help="inverse temperature (default: entropy inflection)")
    chain.add_argument("--N", "-n", dest="N", type=int, help="synthetic patients")
    chain.add_argument("--f-target", dest="f_target", type=float)

    parser = argparse.ArgumentParser(prog="sagen", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sagen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], argument_default=S, help="fit the embedding and memory bank")
    p.add_argument("--input", help="long-format cohort file")
    p.add_argument("--labels", help="patient_id,condition file")
    p.add_argument("--variance-threshold", dest="variance_threshold", type=float)

    p = sub.add_parser("generate", parents=[common, chain], argument_default=S, help="generate a synthetic cohort")
    p.add_argument("--method", choices=["sa", "mvn"])
    p.add_argument("--condition")
    p.add_argument("--output", help="cohort file name inside OUT_DIR")

    p = sub.add_parser("validate", parents=[common], argument_default=S, help="compare synthetic and real cohorts")
    p.add_argument("--real")
    p.add_argument("--synth")
    p.add_argument("--synth-b", dest="synth_b", help="second synthetic cohort, e.g. the MVN baseline")
    p.add_argument("--conditioned", nargs="+", help="extra cohort files with conditioned records")
    p.add_argument("--labels")
    p.add_argument("--ratios", help="group,source,predicted,measured file")
    p.add_argument("--features", type=_strings, help="comma-separated features for Level 3")
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--mw-bootstrap", dest="mw_bootstrap", type=int)

    p = sub.add_parser("beta-sweep", parents=[common, chain], argument_default=S, help="generation quality versus beta")
    p.add_argument("--beta-ratios", dest="beta_ratios", type=_floats, help="comma-separated beta/beta* values")

    p = sub.add_parser("pca-sweep", parents=[common, chain], argument_default=S, help="generation quality versus PCA threshold")
    p.add_argument("--thresholds", type=_floats)

    p = sub.add_parser("diagnostics", parents=[common, chain], argument_default=S, help="ULA versus MALA chain diagnostics")
    p.add_argument("--chains", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    verbose = args.pop("verbose", False)
    config_path = args.pop("config", None)
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = json.loads(Path(config_path).read_text(encoding="utf-8")) if config_path else {}
        if not isinstance(file_values, dict):
            raise ParameterError("config file must hold a JSON object")
        cfg = RunConfig.resolve(file_values, args)
        result = COMMANDS[command](cfg)
    except (json.JSONDecodeError, OSError) as exc:
        print(f"sagen {command}: {exc}", file=sys.stderr)
        return SchemaError.exit_code
    except SagenError as exc:
        print(f"sagen {command}: {exc}", file=sys.stderr)
        return exc.exit_code
    json.dump(result, sys.stdout, indent=1, sort_keys=True, default=_jsonable)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
