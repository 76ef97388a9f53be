import numpy as np
import pytest

from sagen.cohort_io import profiles_to_table, write_long
from sagen.embedding import build_memory_bank
from sagen.pipeline import fit_pipeline
from sagen.surrogate import latent_factor_cohort, subgroup_labels


def random_bank(K, d, seed=0):
    rng = np.random.default_rng(seed)
    return build_memory_bank(rng.standard_normal((d, K)), [f"p{k}" for k in range(K)])


@pytest.fixture(scope="session")
def surrogate():
    return latent_factor_cohort(seed=0)


@pytest.fixture(scope="session")
def surrogate_labels(surrogate):
    return subgroup_labels(surrogate, {"pcos": 3, "developed_pe": 5})


@pytest.fixture(scope="session")
def pipeline(surrogate, surrogate_labels):
    return fit_pipeline(surrogate, surrogate_labels)


@pytest.fixture
def cohort_files(tmp_path, surrogate, surrogate_labels):
    cohort = tmp_path / "cohort.csv"
    write_long(cohort, profiles_to_table(surrogate))
    labels = tmp_path / "labels.csv"
    with open(labels, "w") as fh:
        fh.write("patient_id,condition\n")
        for pid, tags in sorted(surrogate_labels.tags.items()):
            fh.write(f"{pid},{';'.join(sorted(tags))}\n")
    return cohort, labels


ACCEPTANCE_RESULTS = {}


def record_criterion(number, passed, detail):
    """Store and print one acceptance line; the summary hook repeats them at the end."""
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_RESULTS[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
