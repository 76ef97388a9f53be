"""Loading, cleaning and reshaping long-format longitudinal tables.

A cohort file holds one row per (patient, visit) with one column per assay.
Generation works on per-patient profiles: all visit-1 features, then all
visit-2 features, and so on (visit-major concatenation).
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sagen.errors import DimensionError, IntegrityError, ParameterError, SchemaError

logger = logging.getLogger(__name__)

MISSING_TOKENS = frozenset({"", "na", "nan", "n/a", "null", "none"})


class EmptyCohortError(SchemaError):
    """Cleaning removed every feature column or every patient."""


@dataclass(frozen=True)
class CohortSchema:
    id_column: str = "patient_id"
    visit_column: str = "visit"
    delimiter: str = ","
    feature_columns: tuple[str, ...] | None = None
    n_visits: int | None = None


@dataclass(frozen=True)
class CohortTable:
    """Long-format records: one row per (patient, visit).

    ``values`` is ``(n_records, n_features)`` with NaN marking missing cells.
    Row order follows the input file.
    """

    patient_ids: tuple[str, ...]
    visits: np.ndarray
    values: np.ndarray
    feature_names: tuple[str, ...]
    n_visits: int

    def __post_init__(self):
        if self.values.shape != (len(self.patient_ids), len(self.feature_names)):
            raise DimensionError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.patient_ids)} records x {len(self.feature_names)} features"
            )
        seen = set()
        for pid, visit in zip(self.patient_ids, self.visits):
            key = (pid, int(visit))
            if key in seen:
                raise IntegrityError(f"duplicate record for patient {pid!r}, visit {int(visit)}")
            seen.add(key)
        if len(self.visits) and (self.visits.min() < 1 or self.visits.max() > self.n_visits):
            raise IntegrityError(f"visit indices must lie in 1..{self.n_visits}")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_records(self) -> int:
        return len(self.patient_ids)

    @property
    def records(self) -> Iterator[tuple[str, int, dict[str, float | None]]]:
        for pid, visit, row in zip(self.patient_ids, self.visits, self.values):
            cells = {
                name: (None if np.isnan(v) else float(v)) for name, v in zip(self.feature_names, row)
            }
            yield pid, int(visit), cells

    def missing_fraction(self) -> np.ndarray:
        if self.n_records == 0:
            return np.zeros(self.n_features)
        return np.isnan(self.values).mean(axis=0)


@dataclass(frozen=True)
class ProfileMatrix:
    """Complete-case per-patient profiles in visit-major layout.

    Column ``j`` (0-based) holds feature ``j % n`` at visit ``j // n + 1``.
    """

    patient_ids: tuple[str, ...]
    matrix: np.ndarray
    feature_names: tuple[str, ...]
    n_visits: int

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise DimensionError("profile matrix must be two-dimensional")
        if self.matrix.shape != (len(self.patient_ids), self.n_visits * len(self.feature_names)):
            raise DimensionError(
                f"profile matrix shape {self.matrix.shape} does not match "
                f"{len(self.patient_ids)} patients x {self.n_visits}*{len(self.feature_names)} columns"
            )
        if np.isnan(self.matrix).any():
            raise IntegrityError("profile matrix contains missing cells")

    @property
    def n(self) -> int:
        return len(self.feature_names)

    @property
    def K(self) -> int:
        return len(self.patient_ids)

    @property
    def d_concat(self) -> int:
        return self.n_visits * self.n

    @property
    def column_names(self) -> list[str]:
        return [f"visit{v}_{name}" for v in range(1, self.n_visits + 1) for name in self.feature_names]

    def column_map(self, j: int) -> tuple[int, str]:
        """Return ``(visit, feature_name)`` for 0-based column ``j``."""
        if not 0 <= j < self.d_concat:
            raise DimensionError(f"column {j} out of range for {self.d_concat} columns")
        return j // self.n + 1, self.feature_names[j % self.n]

    def visit_block(self, visit: int) -> np.ndarray:
        """``K x n`` slice of features recorded at ``visit`` (1-based)."""
        if not 1 <= visit <= self.n_visits:
            raise DimensionError(f"visit {visit} out of range 1..{self.n_visits}")
        start = (visit - 1) * self.n
        return self.matrix[:, start : start + self.n]

    def subset(self, patient_ids: Sequence[str]) -> ProfileMatrix:
        index = {pid: i for i, pid in enumerate(self.patient_ids)}
        missing = [pid for pid in patient_ids if pid not in index]
        if missing:
            raise IntegrityError(f"unknown patient ids: {missing}")
        rows = [index[pid] for pid in patient_ids]
        return ProfileMatrix(tuple(patient_ids), self.matrix[rows], self.feature_names, self.n_visits)


@dataclass(frozen=True)
class SubgroupLabels:
    """Patient id to condition tags; tags may overlap."""

    tags: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def members(self, tag: str) -> list[str]:
        tag = tag.lower()
        return sorted(pid for pid, t in self.tags.items() if tag in t)

    @property
    def all_tags(self) -> list[str]:
        return sorted(set().union(*self.tags.values())) if self.tags else []

    def restrict_to(self, patient_ids: Sequence[str]) -> SubgroupLabels:
        keep = set(patient_ids)
        dropped = sorted(set(self.tags) - keep)
        if dropped:
            logger.info("dropping labels for %d patients not in the profile matrix", len(dropped))
        return SubgroupLabels({pid: t for pid, t in self.tags.items() if pid in keep})

    def check_against(self, profiles: ProfileMatrix) -> None:
        known = set(profiles.patient_ids)
        unknown = sorted(pid for pid in self.tags if pid not in known)
        if unknown:
            raise IntegrityError(f"labeled patients absent from the cohort: {unknown}")


def parse_value(token: str) -> float:
    token = token.strip()
    if token.lower() in MISSING_TOKENS:
        return np.nan
    try:
        value = float(token)
    except ValueError:
        return np.nan
    return value if np.isfinite(value) else np.nan


def _parse_visit(token: str, line: int) -> int:
    try:
        as_float = float(token)
    except ValueError:
        raise SchemaError(f"line {line}: visit index {token!r} is not an integer") from None
    if not as_float.is_integer() or as_float < 1:
        raise SchemaError(f"line {line}: visit index {token!r} is not a positive integer")
    return int(as_float)


def load_cohort(path: str | Path, schema: CohortSchema | None = None) -> CohortTable:
    """Read a delimited long-format cohort file.

    Unparseable or missing-token cells become NaN. Visits must be coded as
    positive integers.
    """
    schema = schema or CohortSchema()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        for col in (schema.id_column, schema.visit_column):
            if col not in header:
                raise SchemaError(f"{path}: missing mandatory column {col!r}")
        if schema.feature_columns is not None:
            absent = [c for c in schema.feature_columns if c not in header]
            if absent:
                raise SchemaError(f"{path}: missing feature columns {absent}")
            features = list(schema.feature_columns)
        else:
            features = [h for h in header if h not in (schema.id_column, schema.visit_column)]
        if not features:
            raise SchemaError(f"{path}: no feature columns")
        id_at = header.index(schema.id_column)
        visit_at = header.index(schema.visit_column)
        feat_at = [header.index(f) for f in features]

        ids, visits, rows = [], [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}: line {line} has {len(row)} fields, expected {len(header)}")
            ids.append(row[id_at].strip())
            visits.append(_parse_visit(row[visit_at], line))
            rows.append([parse_value(row[i]) for i in feat_at])

    visits_arr = np.asarray(visits, dtype=int)
    n_visits = schema.n_visits or (int(visits_arr.max()) if len(visits_arr) else 1)
    values = np.asarray(rows, dtype=float).reshape(len(ids), len(features))
    return CohortTable(tuple(ids), visits_arr, values, tuple(features), n_visits)


def filter_missing(table: CohortTable, col_threshold: float = 0.30) -> CohortTable:
    """Drop sparse columns, then patients without a complete record at every visit."""
    if not 0.0 <= col_threshold <= 1.0:
        raise ParameterError(f"col_threshold must lie in [0, 1], got {col_threshold}")
    keep_cols = table.missing_fraction() <= col_threshold
    if not keep_cols.any():
        raise EmptyCohortError("every feature column exceeds the missingness threshold")
    dropped = [f for f, k in zip(table.feature_names, keep_cols) if not k]
    if dropped:
        logger.info("dropping %d sparse columns: %s", len(dropped), dropped)
    values = table.values[:, keep_cols]

    complete_visits: dict[str, set[int]] = {}
    incomplete = set()
    for pid, visit, row in zip(table.patient_ids, table.visits, values):
        if np.isnan(row).any():
            incomplete.add(pid)
        else:
            complete_visits.setdefault(pid, set()).add(int(visit))
    required = set(range(1, table.n_visits + 1))
    keep_ids = {
        pid for pid, seen in complete_visits.items() if pid not in incomplete and seen == required
    }
    if not keep_ids:
        raise EmptyCohortError("no patient has complete records at every visit")
    rows = np.array([pid in keep_ids for pid in table.patient_ids], dtype=bool)
    return CohortTable(
        tuple(pid for pid, k in zip(table.patient_ids, rows) if k),
        table.visits[rows],
        values[rows],
        tuple(f for f, k in zip(table.feature_names, keep_cols) if k),
        table.n_visits,
    )


def concatenate_visits(table: CohortTable) -> ProfileMatrix:
    """Stack each patient's visits into one row; patients sorted by id."""
    if np.isnan(table.values).any():
        raise IntegrityError("table has missing cells; run filter_missing first")
    by_patient: dict[str, dict[int, np.ndarray]] = {}
    for pid, visit, row in zip(table.patient_ids, table.visits, table.values):
        by_patient.setdefault(pid, {})[int(visit)] = row
    required = list(range(1, table.n_visits + 1))
    ids = sorted(by_patient)
    matrix = np.empty((len(ids), table.n_visits * table.n_features))
    for i, pid in enumerate(ids):
        visits = by_patient[pid]
        if sorted(visits) != required:
            raise IntegrityError(f"patient {pid!r} has visits {sorted(visits)}, expected {required}")
        matrix[i] = np.concatenate([visits[v] for v in required])
    return ProfileMatrix(tuple(ids), matrix, table.feature_names, table.n_visits)


def split_visits(vector, n: int, V: int) -> list[np.ndarray]:
    vector = np.asarray(vector, dtype=float)
    if vector.ndim != 1 or vector.shape[0] != n * V:
        raise DimensionError(f"vector of length {vector.size} cannot split into {V} visits of {n}")
    return [vector[v * n : (v + 1) * n].copy() for v in range(V)]


def profiles_to_table(profiles: ProfileMatrix) -> CohortTable:
    ids, visits, rows = [], [], []
    for pid, row in zip(profiles.patient_ids, profiles.matrix):
        for v, block in enumerate(split_visits(row, profiles.n, profiles.n_visits), start=1):
            ids.append(pid)
            visits.append(v)
            rows.append(block)
    values = np.asarray(rows, dtype=float).reshape(len(ids), profiles.n)
    return CohortTable(tuple(ids), np.asarray(visits, dtype=int), values, profiles.feature_names, profiles.n_visits)


def format_value(value: float) -> str:
    return repr(float(value))


def write_long(
    path: str | Path,
    table: CohortTable,
    schema: CohortSchema | None = None,
    extra_columns: Mapping[str, Sequence[str]] | None = None,
) -> None:
    """Write records in long format; ``extra_columns`` go between visit and features."""
    schema = schema or CohortSchema()
    extra_columns = dict(extra_columns or {})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=schema.delimiter, lineterminator="\n")
        writer.writerow([schema.id_column, schema.visit_column, *extra_columns, *table.feature_names])
        for i, (pid, visit, row) in enumerate(zip(table.patient_ids, table.visits, table.values)):
            extras = [col[i] for col in extra_columns.values()]
            writer.writerow([pid, int(visit), *extras, *("NA" if np.isnan(v) else format_value(v) for v in row)])


def write_profiles(path: str | Path, profiles: ProfileMatrix, delimiter: str = ",", id_column: str = "patient_id") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow([id_column, *profiles.column_names])
        for pid, row in zip(profiles.patient_ids, profiles.matrix):
            writer.writerow([pid, *map(format_value, row)])


def read_profiles(path: str | Path, delimiter: str = ",") -> ProfileMatrix:
    """Inverse of :func:`write_profiles`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader)
        rows = [r for r in reader if r]
    visits, names = [], []
    for col in header[1:]:
        prefix, _, name = col.partition("_")
        if not prefix.startswith("visit") or not name:
            raise SchemaError(f"column {col!r} is not of the form visitV_feature")
        visits.append(int(prefix[len("visit") :]))
        names.append(name)
    V = max(visits)
    n = len(names) // V
    feature_names = tuple(names[:n])
    if len(names) != n * V or names != list(feature_names) * V:
        raise SchemaError("profile header is not a visit-major concatenation")
    matrix = np.array([[parse_value(c) for c in r[1:]] for r in rows], dtype=float).reshape(len(rows), n * V)
    return ProfileMatrix(tuple(r[0] for r in rows), matrix, feature_names, V)


def load_labels(
    path: str | Path,
    id_column: str = "patient_id",
    tag_column: str = "condition",
    delimiter: str = ",",
) -> SubgroupLabels:
    """Read a two-column labels file. A patient may appear on several rows,
    and a tag cell may hold several ``;``-separated tags."""
    tags: dict[str, set[str]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None or id_column not in reader.fieldnames or tag_column not in reader.fieldnames:
            raise SchemaError(f"{path}: labels file needs columns {id_column!r} and {tag_column!r}")
        for row in reader:
            pid = row[id_column].strip()
            for tag in row[tag_column].split(";"):
                if tag.strip():
                    tags.setdefault(pid, set()).add(tag.strip().lower())
    return SubgroupLabels({pid: frozenset(t) for pid, t in tags.items()})


def load_grouped_cohorts(
    path: str | Path,
    schema: CohortSchema | None = None,
    group_column: str = "condition",
    default_group: str = "all",
) -> dict[str, CohortTable]:
    """Split a long-format file by ``group_column``; a file without it is one group."""
    schema = schema or CohortSchema()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        header = [h.strip() for h in next(reader, [])]
        if group_column not in header:
            groups = None
        else:
            at = header.index(group_column)
            groups = [row[at].strip() or default_group for row in reader if row and any(c.strip() for c in row)]
    if schema.feature_columns is None:
        features = tuple(h for h in header if h not in (schema.id_column, schema.visit_column, group_column))
        schema = CohortSchema(schema.id_column, schema.visit_column, schema.delimiter, features, schema.n_visits)
    table = load_cohort(path, schema)
    if groups is None:
        return {default_group: table}
    out = {}
    labels = np.asarray(groups)
    for group in sorted(set(groups)):
        rows = labels == group
        out[group] = CohortTable(
            tuple(pid for pid, k in zip(table.patient_ids, rows) if k),
            table.visits[rows],
            table.values[rows],
            table.feature_names,
            table.n_visits,
        )
    return out
