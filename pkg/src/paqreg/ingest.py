"""Data loading, curation, feature filtering, normalization, and CV folds.

CSV layout: a header row with the reserved columns ``id``, ``smiles``,
``group_key``, ``pa``; every other column is a numeric feature. Missing
feature values are written as an empty cell or ``nan``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError

RESERVED_COLUMNS = ("id", "smiles", "group_key", "pa")

# C and H are implied for organic species; N, P, O, S are the allowed heteroatoms.
DEFAULT_ALLOWED_ELEMENTS = frozenset({"C", "H", "N", "O", "P", "S"})

_TWO_LETTER = ("Cl", "Br")
_ONE_LETTER = frozenset("BCNOPSFI")
_AROMATIC = frozenset("bcnops")
# Bonds, branches, ring closures, charges, stereo marks, dots.
_NON_ATOM = frozenset("-=#$:/\\().+@0123456789%")


@dataclass(frozen=True)
class MoleculeRecord:
    """One curated compound; pa is the target in kcal/mol."""

    id: str
    smiles: str
    pa: float
    group_key: str


@dataclass(frozen=True)
class NormStats:
    """Per-column z-score statistics (population std convention)."""

    means: np.ndarray
    stds: np.ndarray


@dataclass(frozen=True)
class FeatureMatrix:
    column_names: tuple[str, ...]
    values: np.ndarray  # (n_rows, n_cols) float64
    norm_stats: NormStats | None = None

    def __post_init__(self):
        if len(self.column_names) != self.values.shape[1]:
            raise InputError(
                f"{len(self.column_names)} column names for "
                f"{self.values.shape[1]} columns"
            )
        if len(set(self.column_names)) != len(self.column_names):
            raise InputError("duplicate feature column names")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FoldPlan:
    """Repeated k-fold assignments: assignments[it][row] is the fold id."""

    n_folds: int
    n_iterations: int
    seed: int
    assignments: np.ndarray  # (n_iterations, n_rows) int

    def test_rows(self, iteration: int, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments[iteration] == fold)

    def train_rows(self, iteration: int, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments[iteration] != fold)


@dataclass
class CurationReport:
    n_input: int = 0
    n_output: int = 0
    removed_elements: list = field(default_factory=list)
    merged_groups: list = field(default_factory=list)
    n_removed_element_filter: int = 0
    n_merged_records: int = 0
    pa_min: float | None = None
    pa_max: float | None = None
    # input row index behind each output record, for feature-row alignment
    kept_input_indices: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "n_output": self.n_output,
            "removed_elements": self.removed_elements,
            "merged_groups": self.merged_groups,
            "n_removed_element_filter": self.n_removed_element_filter,
            "n_merged_records": self.n_merged_records,
            "pa_min": self.pa_min,
            "pa_max": self.pa_max,
        }


def _bracket_symbol(body: str, base: int) -> str:
    k = 0
    while k < len(body) and body[k].isdigit():  # isotope prefix
        k += 1
    if k >= len(body):
        raise ParseError("bracket atom has no element symbol", base + k)
    ch = body[k]
    if ch.isupper():
        if k + 1 < len(body) and body[k + 1].islower():
            return ch + body[k + 1]
        return ch
    if ch in _AROMATIC:
        return ch.upper()
    raise ParseError(f"unrecognized element symbol {ch!r} in bracket atom", base + k)


def scan_elements(smiles: str) -> set[str]:
    """Return the set of element symbols appearing as atoms in a SMILES string.

    Handles bracket atoms, the two-letter symbols Cl/Br, the single-letter
    organic subset, and aromatic lowercase forms. Bond, ring, branch, charge,
    and H-count tokens are skipped.
    """
    if not smiles:
        raise InputError("empty SMILES string")
    elements: set[str] = set()
    i = 0
    n = len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "[":
            end = smiles.find("]", i)
            if end < 0:
                raise ParseError("unclosed '[' in SMILES", i)
            elements.add(_bracket_symbol(smiles[i + 1 : end], i + 1))
            i = end + 1
        elif smiles[i : i + 2] in _TWO_LETTER:
            elements.add(smiles[i : i + 2])
            i += 2
        elif ch in _ONE_LETTER:
            elements.add(ch)
            i += 1
        elif ch in _AROMATIC:
            elements.add(ch.upper())
            i += 1
        elif ch in _NON_ATOM:
            i += 1
        else:
            raise ParseError(f"unrecognized SMILES character {ch!r}", i)
    return elements


def curate(
    records: list[MoleculeRecord],
    allowed_elements: frozenset[str] | set[str] | None = None,
    stereo_tolerance: float = 1.0,
) -> tuple[list[MoleculeRecord], CurationReport]:
    """Apply the element filter and stereoisomer averaging.

    Records whose element set is not a subset of ``allowed_elements`` are
    dropped. Records sharing a ``group_key`` are replaced by a single record
    with the mean pa when their pa spread is below ``stereo_tolerance``
    (kcal/mol); otherwise all members are kept.
    """
    if stereo_tolerance <= 0:
        raise InputError("stereo_tolerance must be positive")
    allowed = frozenset(allowed_elements) if allowed_elements is not None else DEFAULT_ALLOWED_ELEMENTS

    report = CurationReport(n_input=len(records))
    kept: list[tuple[int, MoleculeRecord]] = []
    for idx, rec in enumerate(records):
        elems = scan_elements(rec.smiles)
        if not elems <= allowed:
            report.removed_elements.append(
                {"id": rec.id, "elements": sorted(elems - allowed)}
            )
        else:
            kept.append((idx, rec))
    report.n_removed_element_filter = len(report.removed_elements)

    groups: dict[str, list[MoleculeRecord]] = {}
    for _, rec in kept:
        groups.setdefault(rec.group_key, []).append(rec)

    merged_pa: dict[str, float] = {}
    for key, members in groups.items():
        if len(members) < 2:
            continue
        pas = [m.pa for m in members]
        if max(pas) - min(pas) < stereo_tolerance:
            merged_pa[key] = sum(pas) / len(pas)
            report.merged_groups.append(
                {
                    "group_key": key,
                    "ids": [m.id for m in members],
                    "pa_values": pas,
                    "pa_mean": merged_pa[key],
                }
            )
            report.n_merged_records += len(members) - 1

    out: list[MoleculeRecord] = []
    emitted: set[str] = set()
    for idx, rec in kept:
        if rec.group_key in merged_pa:
            if rec.group_key in emitted:
                continue
            emitted.add(rec.group_key)
            out.append(replace(rec, pa=merged_pa[rec.group_key]))
        else:
            out.append(rec)
        report.kept_input_indices.append(idx)

    report.n_output = len(out)
    if out:
        report.pa_min = min(r.pa for r in out)
        report.pa_max = max(r.pa for r in out)
    return out, report


def filter_features(
    m: FeatureMatrix,
    corr_threshold: float = 0.9,
    var_threshold: float = 1e-8,
) -> tuple[FeatureMatrix, list[dict]]:
    """Drop non-finite, near-constant, and highly correlated columns.

    For a correlated pair the later-indexed column is dropped, so the scan is
    order-stable. Returns the reduced matrix and a per-column removal log.
    """
    if m.n_rows < 2:
        raise InputError("feature filtering needs at least 2 rows")
    log: list[dict] = []

    finite = np.isfinite(m.values).all(axis=0)
    survivors = []
    for j, name in enumerate(m.column_names):
        if not finite[j]:
            log.append({"column": name, "reason": "non_finite"})
        else:
            survivors.append(j)

    variances = m.values[:, survivors].var(axis=0)
    kept_var = []
    for idx, j in enumerate(survivors):
        if variances[idx] < var_threshold:
            log.append(
                {
                    "column": m.column_names[j],
                    "reason": "low_variance",
                    "variance": float(variances[idx]),
                }
            )
        else:
            kept_var.append(j)

    retained: list[int] = []
    retained_pos: list[int] = []  # positions within kept_var, for corr lookup
    if kept_var:
        sub = m.values[:, kept_var]
        corr = np.atleast_2d(np.corrcoef(sub, rowvar=False))
        for pos, j in enumerate(kept_var):
            partner = None
            for rpos, i in zip(retained_pos, retained):
                if abs(corr[pos, rpos]) >= corr_threshold:
                    partner = (i, float(corr[pos, rpos]))
                    break
            if partner is None:
                retained.append(j)
                retained_pos.append(pos)
            else:
                log.append(
                    {
                        "column": m.column_names[j],
                        "reason": "high_correlation",
                        "partner": m.column_names[partner[0]],
                        "correlation": partner[1],
                    }
                )

    names = tuple(m.column_names[j] for j in retained)
    values = m.values[:, retained].copy()
    return FeatureMatrix(names, values), log


def _fit_stats(values: np.ndarray, rows: np.ndarray, names: tuple[str, ...]) -> NormStats:
    if len(rows) < 2:
        raise InputError("normalizer fit needs at least 2 rows")
    sub = values[rows]
    means = sub.mean(axis=0)
    stds = sub.std(axis=0)  # population convention
    zero = np.flatnonzero(stds == 0.0)
    if zero.size:
        raise InputError(f"zero standard deviation in fit column {names[zero[0]]!r}")
    return NormStats(means=means, stds=stds)


def fit_normalizer(m: FeatureMatrix, rows: np.ndarray | list[int]) -> NormStats:
    """Fit per-column z-score statistics on the given (training) rows only."""
    return _fit_stats(m.values, np.asarray(rows, dtype=int), m.column_names)


def apply_normalizer(m: FeatureMatrix, stats: NormStats) -> FeatureMatrix:
    """Apply fitted z-score statistics to all rows of the matrix."""
    values = (m.values - stats.means) / stats.stds
    return FeatureMatrix(m.column_names, values, norm_stats=stats)


def zscore_fit_apply(
    X: np.ndarray, fit_rows: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Array-level helper: fit stats on fit_rows, transform all rows.

    Returns (X_normalized, means, stds). Used by the CV harness, which works
    on raw arrays.
    """
    names = tuple(f"col{j}" for j in range(X.shape[1]))
    stats = _fit_stats(X, np.asarray(fit_rows, dtype=int), names)
    return (X - stats.means) / stats.stds, stats.means, stats.stds


def make_folds(n_rows: int, n_folds: int, n_iterations: int, seed: int) -> FoldPlan:
    """Build repeated shuffled k-fold assignments, deterministic per seed."""
    if n_folds < 2:
        raise InputError("n_folds must be at least 2")
    if n_rows < n_folds:
        raise InputError(f"cannot split {n_rows} rows into {n_folds} folds")
    if n_iterations < 1:
        raise InputError("n_iterations must be at least 1")
    rng = np.random.default_rng(seed)
    assignments = np.empty((n_iterations, n_rows), dtype=np.int64)
    base, extra = divmod(n_rows, n_folds)
    for it in range(n_iterations):
        perm = rng.permutation(n_rows)
        start = 0
        for fold in range(n_folds):
            size = base + (1 if fold < extra else 0)
            assignments[it, perm[start : start + size]] = fold
            start += size
    return FoldPlan(n_folds=n_folds, n_iterations=n_iterations, seed=seed, assignments=assignments)


def _parse_feature(cell: str, line_no: int, column: str) -> float:
    text = cell.strip()
    if text == "" or text.lower() == "nan":
        return float("nan")
    try:
        return float(text)
    except ValueError:
        raise InputError(
            f"line {line_no}: column {column!r} has non-numeric value {cell!r}"
        ) from None


def read_dataset(path: str | Path) -> tuple[list[MoleculeRecord], FeatureMatrix]:
    """Read a dataset CSV into molecule records and a feature matrix."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError("line 1: empty file, expected a CSV header") from None
        missing = [c for c in RESERVED_COLUMNS if c not in header]
        if missing:
            raise InputError(f"line 1: header is missing column(s) {missing}")
        if len(set(header)) != len(header):
            raise InputError("line 1: duplicate column names in header")
        col_index = {name: i for i, name in enumerate(header)}
        feature_names = tuple(c for c in header if c not in RESERVED_COLUMNS)

        records: list[MoleculeRecord] = []
        rows: list[list[float]] = []
        seen_ids: set[str] = set()
        for line_no, row in enumerate(reader, start=2):
            if not row or all(cell.strip() == "" for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(
                    f"line {line_no}: expected {len(header)} cells, found {len(row)}"
                )
            rec_id = row[col_index["id"]].strip()
            if not rec_id:
                raise InputError(f"line {line_no}: empty id")
            if rec_id in seen_ids:
                raise InputError(f"line {line_no}: duplicate id {rec_id!r}")
            seen_ids.add(rec_id)
            pa_text = row[col_index["pa"]].strip()
            try:
                pa = float(pa_text)
            except ValueError:
                raise InputError(
                    f"line {line_no}: non-numeric pa value {pa_text!r}"
                ) from None
            if not np.isfinite(pa):
                raise InputError(f"line {line_no}: pa must be finite")
            records.append(
                MoleculeRecord(
                    id=rec_id,
                    smiles=row[col_index["smiles"]].strip(),
                    pa=pa,
                    group_key=row[col_index["group_key"]].strip(),
                )
            )
            rows.append(
                [
                    _parse_feature(row[col_index[c]], line_no, c)
                    for c in feature_names
                ]
            )

    values = np.asarray(rows, dtype=np.float64).reshape(len(records), len(feature_names))
    return records, FeatureMatrix(feature_names, values)


def _format_cell(x: float) -> str:
    return "" if not np.isfinite(x) else repr(float(x))


def write_dataset(
    path: str | Path,
    records: list[MoleculeRecord],
    features: FeatureMatrix | None = None,
) -> None:
    """Write records (and optional aligned features) back to CSV."""
    if features is not None and features.n_rows != len(records):
        raise InputError("feature matrix rows do not match record count")
    feature_names = features.column_names if features is not None else ()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(RESERVED_COLUMNS) + list(feature_names))
        for i, rec in enumerate(records):
            row = [rec.id, rec.smiles, rec.group_key, repr(float(rec.pa))]
            if features is not None:
                row.extend(_format_cell(x) for x in features.values[i])
            writer.writerow(row)
