import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sagen.baselines import MvnModel, fit_ledoit_wolf, ledoit_wolf_intensity, mvn_baseline, mvn_sample
from sagen.errors import NumericError, ParameterError

sklearn_cov = pytest.importorskip("sklearn.covariance")


@pytest.mark.parametrize("n,d,seed", [(10, 3, 0), (3, 216, 1), (50, 20, 2), (1000, 5, 3)])
def test_matches_reference_estimator(n, d, seed):
    x = np.random.default_rng(seed).standard_normal((n, d)) * np.linspace(1, 4, d)
    ref_cov, ref_lam = sklearn_cov.ledoit_wolf(x)
    model = fit_ledoit_wolf(x)
    assert model.shrinkage_intensity == pytest.approx(ref_lam, abs=1e-10)
    np.testing.assert_allclose(model.covariance, ref_cov, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 30), st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_intensity_in_unit_interval(n, d, seed):
    x = np.random.default_rng(seed).standard_normal((n, d))
    assert 0.0 <= ledoit_wolf_intensity(x) <= 1.0


def test_zero_shrinkage_is_sample_covariance():
    x = np.random.default_rng(0).standard_normal((40, 6))
    model = fit_ledoit_wolf(x, shrinkage=0.0)
    np.testing.assert_allclose(model.covariance, np.cov(x, rowvar=False, ddof=0), atol=1e-12)
    with pytest.raises(ParameterError):
        fit_ledoit_wolf(x, shrinkage=1.5)


def test_identity_recovered_for_iid_normal():
    x = np.random.default_rng(0).standard_normal((1000, 5))
    cov = fit_ledoit_wolf(x).covariance
    assert np.linalg.norm(cov - np.eye(5)) / np.linalg.norm(np.eye(5)) < 0.05


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 12), st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_eigenvalues_bounded_by_sample_spectrum(n, d, seed):
    x = np.random.default_rng(seed).standard_normal((n, d)) * np.linspace(0.5, 3, d)
    model = fit_ledoit_wolf(x)
    S = np.cov(x, rowvar=False, ddof=0)
    ev, evs = np.linalg.eigvalsh(model.covariance), np.linalg.eigvalsh(S)
    scale = evs.max()
    assert evs.min() - 1e-9 * scale <= ev.min() and ev.max() <= evs.max() + 1e-9 * scale


def test_full_rank_when_n_below_p():
    x = np.random.default_rng(0).standard_normal((3, 216))
    model = fit_ledoit_wolf(x)
    assert model.shrinkage_intensity > 0
    assert np.linalg.matrix_rank(model.covariance) == 216
    assert np.linalg.eigvalsh(model.covariance).min() > 0


def test_too_few_rows():
    with pytest.raises(ParameterError):
        fit_ledoit_wolf(np.ones((1, 4)))


def test_sample_moments():
    cov = np.array([[2.0, 0.6], [0.6, 1.0]])
    model = MvnModel(np.array([1.0, -3.0]), cov, 0.0)
    draws = mvn_sample(model, 4000, seed=5).records.reshape(4000, 2)
    np.testing.assert_allclose(draws.mean(axis=0), model.mean, atol=0.1)
    np.testing.assert_allclose(np.cov(draws, rowvar=False), cov, atol=0.15)


def test_sampling_deterministic_and_prefix_stable():
    model = MvnModel(np.zeros(3), np.eye(3), 0.0)
    a = mvn_sample(model, 10, seed=1)
    b = mvn_sample(model, 4, seed=1)
    np.testing.assert_array_equal(a.records[:4], b.records)
    assert a.patient_ids[0] == "MVN-0001"
    assert not np.array_equal(a.records, mvn_sample(model, 10, seed=2).records)


def test_bad_covariance():
    model = MvnModel(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]), 0.0)
    with pytest.raises(NumericError):
        mvn_sample(model, 3)


def test_baseline_on_pipeline(pipeline):
    model = mvn_baseline(pipeline)
    assert model.d == 216
    assert np.linalg.eigvalsh(model.covariance).min() > 0
    cohort = mvn_sample(model, 20)
    assert cohort.records.shape == (20, 3, 72)
    assert cohort.provenance["method"] == "mvn"


def test_iid_identity_data_shrinks_heavily():
    # For identity-covariance data the target already equals the truth, so the
    # optimal intensity is large, not small.
    x = np.random.default_rng(0).standard_normal((1000, 5))
    lam = ledoit_wolf_intensity(x)
    assert lam == pytest.approx(sklearn_cov.ledoit_wolf(x)[1], abs=1e-10)
    assert lam > 0.5


def test_identity_model_sample_covariance():
    model = MvnModel(np.zeros(4), np.eye(4), 0.0)
    draws = mvn_sample(model, 20_000, seed=3).records.reshape(20_000, 4)
    assert np.abs(draws.mean(axis=0)).max() < 0.03
    cov = np.cov(draws, rowvar=False)
    assert np.linalg.norm(cov - np.eye(4)) / np.linalg.norm(np.eye(4)) < 0.05
