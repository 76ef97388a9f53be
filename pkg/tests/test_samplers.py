import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_bank
from sagen import rng as rngs
from sagen.embedding import project
from sagen.errors import DivergenceError, NumericError, ParameterError
from sagen.hopfield import EnergyParams
from sagen.samplers import (
    ChainConfig,
    autocorrelation,
    chain_diagnostics,
    generate_cohort,
    integrated_autocorrelation_time,
    mala_chain,
    noise_scale,
    novelty_of,
    ula_chain,
)
from sagen.validation import covariance_spectrum, effective_rank


def ar1(phi, n, seed=0):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - phi**2)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


@pytest.mark.parametrize("ratio,expected", [(0.1, 0.261), (1.0, 0.082), (3.0, 0.048)])
def test_noise_scale_rows(ratio, expected):
    # Sweep rows are multiples of beta* = 2.94; the tabulated beta 0.29 is 0.294 rounded.
    assert noise_scale(0.01, ratio * 2.94) == pytest.approx(expected, abs=1e-3)


def test_noise_scale_at_rounded_beta():
    assert noise_scale(0.01, 0.29) == pytest.approx(0.2626, abs=1e-4)


def test_noiseless_step_halves_distance():
    bank = random_bank(1, 6)
    m = bank.unit_patterns[:, 0]
    params = EnergyParams.for_bank(bank, 2.0)
    start = np.random.default_rng(1).standard_normal(6)
    err = np.linalg.norm(start - m)
    for T in range(1, 6):
        xi = ula_chain(bank, params, ChainConfig(alpha=0.5, T=T), initial=start, noise=False).final_state
        assert np.linalg.norm(xi - m) == pytest.approx(err * 0.5**T, rel=1e-12)


def test_noiseless_chain_converges_to_stored_pattern():
    bank = random_bank(5, 18, seed=3)
    params = EnergyParams.for_bank(bank, 50.0)
    start = bank.unit_patterns[:, 2] + 0.05 * np.random.default_rng(0).standard_normal(18)
    xi = ula_chain(bank, params, ChainConfig(alpha=0.1, T=400), initial=start, noise=False).final_state
    assert np.linalg.norm(xi - bank.unit_patterns[:, 2]) < 1e-6


def test_ula_deterministic_given_seed():
    bank = random_bank(23, 18)
    params = EnergyParams.for_bank(bank, 2.94)
    cfg = ChainConfig(T=300, seed=7, record_trace=True)
    a = ula_chain(bank, params, cfg)
    b = ula_chain(bank, params, cfg)
    np.testing.assert_array_equal(a.trace, b.trace)
    c = ula_chain(bank, params, ChainConfig(T=300, seed=8))
    assert not np.array_equal(a.final_state, c.final_state)


def test_ula_trace_energies_finite():
    bank = random_bank(23, 18)
    res = ula_chain(bank, EnergyParams.for_bank(bank, 2.94), ChainConfig(T=200, record_trace=True))
    assert res.trace.shape == (200, 18)
    assert np.all(np.isfinite(res.energies))
    np.testing.assert_array_equal(res.trace[-1], res.final_state)


def test_mala_small_step_accepts_nearly_everything():
    bank = random_bank(23, 18)
    params = EnergyParams.for_bank(bank, 2.94)
    rates = [mala_chain(bank, params, ChainConfig(alpha=a, T=500)).acceptance_rate for a in (1e-2, 1e-4, 1e-6)]
    assert rates[-1] > 0.999
    assert rates[0] <= rates[-1] + 1e-12


def test_mala_reproducible_accept_sequence():
    bank = random_bank(10, 8)
    params = EnergyParams.for_bank(bank, 2.94)
    cfg = ChainConfig(alpha=0.5, T=300, seed=3, record_trace=True)
    a = mala_chain(bank, params, cfg)
    b = mala_chain(bank, params, cfg)
    assert a.acceptance_rate == b.acceptance_rate
    np.testing.assert_array_equal(a.trace, b.trace)
    assert 0 < a.acceptance_rate < 1


def test_divergence_detected():
    bank = random_bank(3, 4)
    with pytest.raises(DivergenceError) as info:
        ula_chain(bank, EnergyParams.for_bank(bank, 1.0), ChainConfig(alpha=1e4, T=100))
    assert info.value.iteration is not None


@pytest.mark.parametrize("kwargs", [{"alpha": 0.0}, {"alpha": -1.0}, {"T": 0}, {"T": 10, "burn_in": 10}, {"seed": -1}])
def test_chain_config_validation(kwargs):
    with pytest.raises(ParameterError):
        ChainConfig(**kwargs)


def test_autocorrelation_lag_zero():
    rho = autocorrelation(np.random.default_rng(0).standard_normal(1000))
    assert rho[0] == pytest.approx(1.0)
    with pytest.raises(NumericError):
        autocorrelation(np.ones(200))


def test_autocorrelation_matches_direct_sum():
    x = np.random.default_rng(1).standard_normal(64)
    c = x - x.mean()
    direct = np.array([c[: 64 - k] @ c[k:] for k in range(64)]) / (c @ c)
    np.testing.assert_allclose(autocorrelation(x), direct, atol=1e-12)


def test_tau_ar1():
    tau = integrated_autocorrelation_time(ar1(0.9, 200_000))
    assert abs(tau - 19.0) <= 0.3 * 19.0


def test_tau_white_noise():
    tau = integrated_autocorrelation_time(np.random.default_rng(4).standard_normal(100_000))
    assert abs(tau - 1.0) <= 0.2


def test_diagnostics_ess_and_short_trace():
    x = ar1(0.5, 5000)
    diag = chain_diagnostics(x, burn_in=1000)
    assert diag.ess == pytest.approx(4000 / diag.tau_int)
    with pytest.raises(ParameterError):
        chain_diagnostics(x[:150], burn_in=60)


def test_novelty_examples():
    bank = random_bank(4, 6)
    assert novelty_of(3.0 * bank.unit_patterns[:, 1], bank) == pytest.approx(0.0, abs=1e-12)
    E = np.eye(6)
    ortho = random_bank(1, 6)
    ortho = type(ortho)(E[:, :1], np.ones(1), ("a",), np.ones(1))
    assert novelty_of(E[:, 3], ortho) == pytest.approx(1.0)
    assert novelty_of(-E[:, 0], ortho) == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        novelty_of(np.zeros(6), bank)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_novelty_range(seed):
    bank = random_bank(7, 5, seed)
    v = np.random.default_rng(seed).standard_normal(5)
    assert 0.0 <= novelty_of(v, bank) <= 2.0


FAST = ChainConfig(T=300)


def test_generate_zero_samples(pipeline):
    cohort = generate_cohort(pipeline, 0, config=FAST)
    assert cohort.records.shape == (0, 3, 72)


def test_generate_shape_ids_and_provenance(pipeline):
    cohort = generate_cohort(pipeline, 5, config=FAST)
    assert cohort.records.shape == (5, 3, 72)
    assert cohort.patient_ids[0] == "SA-0001"
    assert cohort.provenance["beta"] == pytest.approx(pipeline.beta_star)
    assert cohort.provenance["K_eff"] == pytest.approx(23.0)
    assert cohort.provenance["pipeline_sha256"] == pipeline.fingerprint()


def test_generate_samples_are_independent_of_batch(pipeline):
    # Sample i depends only on (seed, i), not on how many others are drawn.
    big = generate_cohort(pipeline, 6, config=FAST)
    small = generate_cohort(pipeline, 3, config=FAST)
    np.testing.assert_array_equal(big.records[:3], small.records)


def test_generate_deterministic(pipeline):
    a = generate_cohort(pipeline, 4, config=FAST)
    b = generate_cohort(pipeline, 4, config=FAST)
    np.testing.assert_array_equal(a.records, b.records)
    c = generate_cohort(pipeline, 4, config=ChainConfig(T=300, seed=43))
    assert not np.array_equal(a.records, c.records)


def test_generated_magnitudes_come_from_norm_bank(pipeline):
    cohort = generate_cohort(pipeline, 8, config=FAST)
    m = project(pipeline.pca, pipeline.standardizer, cohort.records.reshape(8, -1))
    norms = np.linalg.norm(m, axis=0)
    bank = pipeline.bank.magnitudes
    assert all(np.min(np.abs(bank - r)) < 1e-8 * r for r in norms)
    np.testing.assert_allclose(m / norms, cohort.directions.T, atol=1e-9)


def test_conditioned_magnitudes_restricted_to_subgroup(pipeline):
    cohort = generate_cohort(pipeline, 8, condition="pcos", config=FAST)
    idx = pipeline.bank.index_of(pipeline.members("pcos"))
    allowed = pipeline.bank.magnitudes[idx]
    m = project(pipeline.pca, pipeline.standardizer, cohort.records.reshape(8, -1))
    for r in np.linalg.norm(m, axis=0):
        assert np.min(np.abs(allowed - r)) < 1e-8 * r
    prov = cohort.provenance
    assert prov["rho"] == pytest.approx(26.67, abs=0.01)
    assert prov["K_eff"] == pytest.approx(4.64, abs=0.01)
    assert prov["beta"] != pytest.approx(pipeline.beta_star)
    assert cohort.patient_ids[0] == "SA-pcos-0001"


def test_unknown_condition(pipeline):
    with pytest.raises(ParameterError):
        generate_cohort(pipeline, 2, condition="no_such_group", config=FAST)


def test_generated_rank_bounded_by_dpca(pipeline):
    cohort = generate_cohort(pipeline, 40, config=FAST)
    flat = cohort.records.reshape(40, -1)
    z = pipeline.standardizer.transform(flat)
    assert effective_rank(covariance_spectrum(z)) <= pipeline.d_pca


def test_stream_namespaces_differ():
    a = rngs.stream(42, rngs.SA_CHAINS, 0).standard_normal(4)
    b = rngs.stream(42, rngs.MVN_DRAWS, 0).standard_normal(4)
    c = rngs.stream(42, rngs.SA_CHAINS, 0).standard_normal(4)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, c)
