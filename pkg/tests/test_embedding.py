import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sagen.embedding import (
    DegenerateColumnError,
    DegeneratePatternError,
    build_memory_bank,
    fit_pca,
    fit_standardizer,
    project,
    reconstruct,
)
from sagen.errors import DimensionError, ParameterError
from sagen.pipeline import PipelineModel, fit_pipeline


def test_standardizer_two_values():
    std = fit_standardizer(np.array([[1.0], [3.0]]))
    assert std.mu[0] == 2.0
    assert std.sigma[0] == pytest.approx(np.sqrt(2.0))


def test_standardized_moments(surrogate):
    std = fit_standardizer(surrogate)
    z = std.transform(surrogate.matrix)
    np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose(z.std(axis=0, ddof=1), 1, atol=1e-10)


def test_standardizer_near_identity_on_gaussian():
    z = np.random.default_rng(0).standard_normal((5000, 3))
    std = fit_standardizer(z)
    np.testing.assert_allclose(std.mu, 0, atol=0.05)
    np.testing.assert_allclose(std.sigma, 1, atol=0.05)


def test_constant_column_named():
    x = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    with pytest.raises(DegenerateColumnError, match="b"):
        fit_standardizer(x, column_names=["a", "b"])


def rank2_data(K=15, d=10, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((K, 2)) @ rng.standard_normal((2, d)) + rng.uniform(1, 5, d)


def test_rank2_full_threshold():
    z = fit_standardizer(rank2_data()).transform(rank2_data())
    # oracle: numerical rank of the centered matrix
    s = np.linalg.svd(z - z.mean(axis=0), compute_uv=False)
    assert np.sum(s > 1e-10 * s[0]) == 2
    assert fit_pca(z, 1.0).d_pca == 2


def test_pca_contract(surrogate):
    z = fit_standardizer(surrogate).transform(surrogate.matrix)
    for threshold in (0.5, 0.85, 0.95, 0.99, 1.0):
        pca = fit_pca(z, threshold)
        np.testing.assert_allclose(pca.loadings.T @ pca.loadings, np.eye(pca.d_pca), atol=1e-10)
        assert np.all(np.diff(pca.explained_variance) <= 1e-12)
        assert pca.cumulative_fraction >= threshold - 1e-12
        assert pca.d_pca == 1 or pca.explained_fraction[: pca.d_pca - 1].sum() < threshold
        assert pca.d_pca <= surrogate.K - 1
        assert pca.explained_fraction.sum() <= 1 + 1e-12
        pivots = np.argmax(np.abs(pca.loadings), axis=0)
        assert np.all(pca.loadings[pivots, np.arange(pca.d_pca)] > 0)


def test_pca_sign_determinism(surrogate):
    z = fit_standardizer(surrogate).transform(surrogate.matrix)
    a = fit_pca(z, 0.95)
    b = fit_pca(z[::-1], 0.95)
    np.testing.assert_allclose(a.loadings, b.loadings, atol=1e-10)


@pytest.mark.parametrize("threshold", [0.0, -0.1, 1.01])
def test_pca_threshold_range(threshold):
    with pytest.raises(ParameterError):
        fit_pca(np.eye(3), threshold)


def fitted(profiles, threshold):
    std = fit_standardizer(profiles)
    return std, fit_pca(std.transform(profiles.matrix), threshold)


def test_project_reconstruct_lossless_at_full_rank(surrogate):
    std, pca = fitted(surrogate, 1.0)
    scores = project(pca, std, surrogate)
    back = reconstruct(pca, std, scores.T)
    np.testing.assert_allclose(back, surrogate.matrix, atol=1e-8, rtol=0)


def test_truncated_reconstruction_error_matches_dropped_variance(surrogate):
    std, pca = fitted(surrogate, 0.9)
    back = reconstruct(pca, std, project(pca, std, surrogate).T)
    resid = std.transform(back) - std.transform(surrogate.matrix)
    lost = pca.explained_variance[pca.d_pca :].sum() * (surrogate.K - 1)
    assert np.sum(resid**2) == pytest.approx(lost, rel=1e-8)


def test_project_mean_and_zero(surrogate):
    std, pca = fitted(surrogate, 0.95)
    np.testing.assert_allclose(project(pca, std, std.mu[None, :]).ravel(), -pca.loadings.T @ pca.z_bar, atol=1e-12)
    np.testing.assert_allclose(project(pca, std, std.mu[None, :]).ravel(), 0, atol=1e-10)
    np.testing.assert_allclose(reconstruct(pca, std, np.zeros(pca.d_pca)), std.mu, atol=1e-8)


def test_reconstruct_affine(surrogate):
    std, pca = fitted(surrogate, 0.95)
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, pca.d_pca))
    r0 = reconstruct(pca, std, np.zeros(pca.d_pca))
    lhs = reconstruct(pca, std, a + b) - r0
    rhs = (reconstruct(pca, std, a) - r0) + (reconstruct(pca, std, b) - r0)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_dimension_errors(surrogate):
    std, pca = fitted(surrogate, 0.95)
    with pytest.raises(DimensionError):
        project(pca, std, np.zeros((1, 5)))
    with pytest.raises(DimensionError):
        reconstruct(pca, std, np.zeros(pca.d_pca + 1))


def test_memory_bank_arithmetic():
    bank = build_memory_bank(np.array([[3.0], [4.0]]), ["a"])
    np.testing.assert_allclose(bank.unit_patterns[:, 0], [0.6, 0.8])
    assert bank.magnitudes[0] == 5.0
    assert bank.weights.tolist() == [1.0]
    with pytest.raises(DegeneratePatternError):
        build_memory_bank(np.zeros((2, 1)), ["z"])


@settings(max_examples=30)
@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_memory_bank_recovers_raw(d, K, seed):
    raw = np.random.default_rng(seed).standard_normal((d, K)) + 0.1
    bank = build_memory_bank(raw, [str(k) for k in range(K)])
    np.testing.assert_allclose(np.linalg.norm(bank.unit_patterns, axis=0), 1, atol=1e-12)
    np.testing.assert_allclose(bank.unit_patterns * bank.magnitudes, raw, atol=1e-12)


def test_pipeline_geometry(pipeline, surrogate):
    assert pipeline.bank.K == 23
    assert pipeline.d_pca <= 18  # generating model has rank 18
    assert pipeline.bank.K / pipeline.d_pca > 1


def test_pipeline_serialization_roundtrip(tmp_path, pipeline, surrogate, surrogate_labels):
    path = tmp_path / "m.json"
    pipeline.save(path)
    back = PipelineModel.load(path)
    np.testing.assert_array_equal(back.pca.loadings, pipeline.pca.loadings)
    np.testing.assert_array_equal(back.bank.unit_patterns, pipeline.bank.unit_patterns)
    assert back.beta_star == pipeline.beta_star
    assert back.labels.tags == pipeline.labels.tags
    assert back.dumps() == pipeline.dumps()
    again = fit_pipeline(surrogate, surrogate_labels)
    assert again.dumps() == pipeline.dumps()
