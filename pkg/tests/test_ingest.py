"""Curation, feature filtering, normalization, folds, and dataset CSV I/O."""

import numpy as np
import pytest

from paqreg.errors import InputError, ParseError
from paqreg.ingest import (
    FeatureMatrix,
    MoleculeRecord,
    apply_normalizer,
    curate,
    filter_features,
    fit_normalizer,
    make_folds,
    read_dataset,
    scan_elements,
    write_dataset,
    zscore_fit_apply,
)
from paqreg.synth import make_dataset


def rec(id, smiles="CCO", pa=200.0, group="g"):
    return MoleculeRecord(id=id, smiles=smiles, pa=pa, group_key=group)


# ---- element scanning ----


def test_scan_elements_hand_cases():
    assert scan_elements("CCO") == {"C", "O"}
    assert scan_elements("c1ccncc1") == {"C", "N"}
    assert scan_elements("CCl") == {"C", "Cl"}  # not C + l
    assert scan_elements("[Fe+2]") == {"Fe"}


def test_scan_elements_token_coverage():
    assert scan_elements("CCBr") == {"C", "Br"}
    assert scan_elements("Clc1ccccc1") == {"C", "Cl"}
    assert scan_elements("C#N") == {"C", "N"}
    assert scan_elements("C%10CC%10") == {"C"}
    assert scan_elements("CC(=O)/C=C/C") == {"C", "O"}
    assert scan_elements("[NH4+]") == {"N"}
    assert scan_elements("[O-]") == {"O"}
    assert scan_elements("[13CH4]") == {"C"}  # isotope prefix skipped
    assert scan_elements("c1cc[nH]c1") == {"C", "N"}
    assert scan_elements("OP(=O)(O)O") == {"O", "P"}
    assert scan_elements("C[Si](C)C") == {"C", "Si"}


def test_scan_elements_rejects_empty():
    with pytest.raises(InputError):
        scan_elements("")


def test_scan_elements_parse_errors_carry_offset():
    with pytest.raises(ParseError) as exc:
        scan_elements("CC[NH2")
    assert exc.value.offset == 2

    with pytest.raises(ParseError) as exc:
        scan_elements("CCxO")
    assert exc.value.offset == 2

    # offset points at the bad symbol inside the bracket, not at '['
    with pytest.raises(ParseError) as exc:
        scan_elements("C[12]C")
    assert exc.value.offset == 4


# ---- curation ----


def test_curate_merges_close_stereo_pair():
    records = [
        rec("a", pa=200.0, group="shared"),
        rec("b", pa=200.5, group="shared"),
    ]
    out, report = curate(records)
    assert len(out) == 1
    assert out[0].pa == pytest.approx(200.25, abs=1e-12)
    assert out[0].id == "a"  # first member's identity survives
    assert report.n_merged_records == 1
    assert report.merged_groups[0]["ids"] == ["a", "b"]


def test_curate_keeps_wide_stereo_pair():
    records = [
        rec("a", pa=200.0, group="shared"),
        rec("b", pa=202.0, group="shared"),
    ]
    out, report = curate(records)
    assert [r.id for r in out] == ["a", "b"]
    assert report.n_merged_records == 0


def test_curate_spread_equal_to_tolerance_keeps_both():
    # the rule is strict: spread < tolerance merges, == does not
    records = [
        rec("a", pa=200.0, group="shared"),
        rec("b", pa=201.0, group="shared"),
    ]
    out, _ = curate(records, stereo_tolerance=1.0)
    assert len(out) == 2


def test_curate_element_filter():
    records = [rec("ok", smiles="CCO"), rec("bad", smiles="[Fe+2]", group="h")]
    out, report = curate(records)
    assert [r.id for r in out] == ["ok"]
    assert report.n_removed_element_filter == 1
    assert report.removed_elements[0] == {"id": "bad", "elements": ["Fe"]}


def test_curate_custom_allowed_elements():
    records = [rec("a", smiles="CCl", group="g1"), rec("b", smiles="CCO", group="g2")]
    out, _ = curate(records, allowed_elements={"C", "H", "Cl"})
    assert [r.id for r in out] == ["a"]


def test_curate_mixed_fixture():
    records = [
        rec("a", pa=200.0, group="merge"),
        rec("b", pa=200.5, group="merge"),
        rec("c", pa=180.0, group="wide"),
        rec("d", pa=182.0, group="wide"),
        rec("e", smiles="CCBr", pa=190.0, group="drop"),
        rec("f", pa=210.0, group="solo"),
    ]
    out, report = curate(records)
    assert [r.id for r in out] == ["a", "c", "d", "f"]
    assert report.n_input == 6
    assert report.n_output == 4
    assert report.n_removed_element_filter == 1
    assert report.n_merged_records == 1
    # report aligns each surviving record with its input row
    assert report.kept_input_indices == [0, 2, 3, 5]
    assert report.pa_min == 180.0
    assert report.pa_max == 210.0


def test_curate_is_idempotent():
    records, _ = make_dataset(n_rows=60, n_features=80, n_informative=16, seed=5)
    once, rep1 = curate(records)
    twice, rep2 = curate(once)
    assert twice == once
    assert rep2.n_merged_records == 0
    assert rep2.n_removed_element_filter == 0


def test_curate_rejects_bad_tolerance():
    with pytest.raises(InputError):
        curate([rec("a")], stereo_tolerance=0.0)


def test_curate_empty_output_allowed():
    out, report = curate([rec("a", smiles="[Xe]")])
    assert out == []
    assert report.n_output == 0
    assert report.pa_min is None


def test_synthetic_dataset_curates_to_requested_size():
    records, fm = make_dataset(n_rows=120, n_features=90, n_informative=24, seed=7)
    assert fm.n_rows == len(records)
    out, report = curate(records)
    assert len(out) == 120
    assert report.n_removed_element_filter == 6
    assert report.n_merged_records == 8
    # target stays inside the physical range the generator promises
    assert report.pa_min >= 150.0
    assert report.pa_max <= 260.0
    # alignment indices select exactly one feature row per surviving record
    sub = fm.values[report.kept_input_indices]
    assert sub.shape == (120, 90)


# ---- feature filtering ----


def test_filter_drops_constant_column():
    m = FeatureMatrix(("a", "b"), np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]))
    out, log = filter_features(m)
    assert out.column_names == ("a",)
    assert log == [{"column": "b", "reason": "low_variance", "variance": 0.0}]


def test_filter_drops_affine_duplicate():
    rng = np.random.default_rng(0)
    x = rng.normal(size=50)
    m = FeatureMatrix(("x", "y"), np.column_stack([x, 2.0 * x + 1.0]))
    out, log = filter_features(m)
    assert out.column_names == ("x",)  # later-indexed column loses
    assert log[0]["reason"] == "high_correlation"
    assert log[0]["partner"] == "x"
    assert log[0]["correlation"] == pytest.approx(1.0, abs=1e-12)


def test_filter_drops_anticorrelated_duplicate():
    rng = np.random.default_rng(1)
    x = rng.normal(size=50)
    m = FeatureMatrix(("x", "y"), np.column_stack([x, -3.0 * x]))
    out, _ = filter_features(m)
    assert out.column_names == ("x",)


def test_filter_drops_nan_column():
    vals = np.array([[1.0, 2.0], [np.nan, 3.0], [2.0, 4.0]])
    out, log = filter_features(FeatureMatrix(("bad", "good"), vals))
    assert out.column_names == ("good",)
    assert log == [{"column": "bad", "reason": "non_finite"}]


def test_filter_requires_two_rows():
    with pytest.raises(InputError):
        filter_features(FeatureMatrix(("a",), np.array([[1.0]])))


def test_filter_rescan_finds_no_surviving_pair():
    rng = np.random.default_rng(9)
    for trial in range(20):
        base = rng.normal(size=(40, 6))
        # plant a few near-copies of random columns
        cols = [base]
        for _ in range(4):
            src = base[:, rng.integers(6)]
            cols.append((src * rng.uniform(0.5, 2.0) + rng.normal(0.0, 0.05, size=40))[:, None])
        vals = np.hstack(cols)
        names = tuple(f"c{j}" for j in range(vals.shape[1]))
        out, _ = filter_features(FeatureMatrix(names, vals), corr_threshold=0.8)
        if out.n_cols >= 2:
            corr = np.corrcoef(out.values, rowvar=False)
            off_diag = corr[~np.eye(out.n_cols, dtype=bool)]
            assert np.all(np.abs(off_diag) < 0.8)


def test_filter_on_synthetic_junk_block():
    # generator plants 10 affine duplicates, 2 NaN carriers, 2 constants
    records, fm = make_dataset(n_rows=200, n_features=100, n_informative=30, seed=3)
    _, report = curate(records)
    clean = FeatureMatrix(fm.column_names, fm.values[report.kept_input_indices])
    out, log = filter_features(clean)
    assert out.n_cols == 100 - 14
    reasons = sorted(entry["reason"] for entry in log)
    assert reasons.count("non_finite") == 2
    assert reasons.count("low_variance") == 2
    assert reasons.count("high_correlation") == 10


# ---- normalization ----


def test_normalizer_hand_case():
    m = FeatureMatrix(("x",), np.array([[1.0], [2.0], [3.0]]))
    stats = fit_normalizer(m, [0, 1, 2])
    out = apply_normalizer(m, stats)
    expect = np.array([-1.224744871391589, 0.0, 1.224744871391589])
    assert np.allclose(out.values[:, 0], expect, atol=1e-12)
    assert out.norm_stats is stats


def test_normalizer_fits_on_training_rows_only():
    m = FeatureMatrix(("x",), np.array([[0.0], [2.0], [10.0]]))
    stats = fit_normalizer(m, [0, 1])  # mean 1, population std 1
    out = apply_normalizer(m, stats)
    assert np.allclose(out.values[:, 0], [-1.0, 1.0, 9.0], atol=1e-12)


def test_normalizer_idempotent_on_refit():
    rng = np.random.default_rng(4)
    m = FeatureMatrix(
        tuple(f"c{j}" for j in range(5)), rng.normal(2.0, 3.0, size=(30, 5))
    )
    rows = np.arange(30)
    once = apply_normalizer(m, fit_normalizer(m, rows))
    twice = apply_normalizer(once, fit_normalizer(once, rows))
    assert np.allclose(twice.values, once.values, atol=1e-12)


def test_normalized_fit_rows_have_unit_stats():
    rng = np.random.default_rng(11)
    m = FeatureMatrix(
        tuple(f"c{j}" for j in range(8)), rng.normal(-5.0, 7.0, size=(50, 8))
    )
    fit_rows = np.arange(0, 40)
    out = apply_normalizer(m, fit_normalizer(m, fit_rows))
    sub = out.values[fit_rows]
    assert np.all(np.abs(sub.mean(axis=0)) <= 1e-9)
    assert np.all(np.abs(sub.std(axis=0) - 1.0) <= 1e-9)


def test_normalizer_inverse_recovers_input():
    rng = np.random.default_rng(12)
    m = FeatureMatrix(
        tuple(f"c{j}" for j in range(6)), rng.normal(3.0, 10.0, size=(25, 6))
    )
    stats = fit_normalizer(m, np.arange(25))
    out = apply_normalizer(m, stats)
    back = out.values * stats.stds + stats.means
    assert np.allclose(back, m.values, atol=1e-10)


def test_normalizer_rejects_zero_std_column():
    m = FeatureMatrix(("a", "flat"), np.array([[1.0, 7.0], [2.0, 7.0]]))
    with pytest.raises(InputError, match="flat"):
        fit_normalizer(m, [0, 1])


def test_normalizer_needs_two_fit_rows():
    m = FeatureMatrix(("a",), np.array([[1.0], [2.0]]))
    with pytest.raises(InputError):
        fit_normalizer(m, [0])


def test_zscore_helper_matches_normalizer():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(20, 4))
    fit_rows = np.arange(15)
    Xn, means, stds = zscore_fit_apply(X, fit_rows)
    m = FeatureMatrix(tuple(f"c{j}" for j in range(4)), X)
    stats = fit_normalizer(m, fit_rows)
    assert np.array_equal(means, stats.means)
    assert np.array_equal(stds, stats.stds)
    assert np.array_equal(Xn, apply_normalizer(m, stats).values)


# ---- fold plans ----


def test_folds_even_split():
    plan = make_folds(10, 5, 1, seed=0)
    sizes = [len(plan.test_rows(0, f)) for f in range(5)]
    assert sizes == [2, 2, 2, 2, 2]


def test_folds_remainder_spread():
    plan = make_folds(11, 5, 1, seed=0)
    sizes = [len(plan.test_rows(0, f)) for f in range(5)]
    assert sizes == [3, 2, 2, 2, 2]


def test_folds_partition_every_iteration():
    plan = make_folds(37, 5, 20, seed=42)
    for it in range(20):
        seen = np.concatenate([plan.test_rows(it, f) for f in range(5)])
        assert np.array_equal(np.sort(seen), np.arange(37))
        train = plan.train_rows(it, 2)
        test = plan.test_rows(it, 2)
        assert np.intersect1d(train, test).size == 0
        assert len(train) + len(test) == 37


def test_folds_deterministic_and_seed_sensitive():
    a = make_folds(50, 5, 3, seed=7)
    b = make_folds(50, 5, 3, seed=7)
    c = make_folds(50, 5, 3, seed=8)
    assert np.array_equal(a.assignments, b.assignments)
    assert not np.array_equal(a.assignments, c.assignments)
    # iterations within one plan are independent shuffles
    assert not np.array_equal(a.assignments[0], a.assignments[1])


def test_folds_input_validation():
    with pytest.raises(InputError):
        make_folds(10, 1, 1, seed=0)
    with pytest.raises(InputError):
        make_folds(3, 5, 1, seed=0)
    with pytest.raises(InputError):
        make_folds(10, 5, 0, seed=0)


# ---- feature matrix validation ----


def test_feature_matrix_validation():
    with pytest.raises(InputError):
        FeatureMatrix(("a",), np.zeros((2, 2)))
    with pytest.raises(InputError):
        FeatureMatrix(("a", "a"), np.zeros((2, 2)))


# ---- dataset CSV I/O ----


def test_dataset_round_trip(tmp_path):
    records, fm = make_dataset(n_rows=50, n_features=40, n_informative=10, seed=2)
    path = tmp_path / "data.csv"
    write_dataset(path, records, fm)
    records2, fm2 = read_dataset(path)
    assert records2 == records
    assert fm2.column_names == fm.column_names
    # NaN cells survive the trip; repr round-trips every finite float exactly
    assert np.array_equal(fm2.values, fm.values, equal_nan=True)


def test_write_without_features(tmp_path):
    path = tmp_path / "plain.csv"
    write_dataset(path, [rec("a", pa=201.5)])
    records, fm = read_dataset(path)
    assert records == [rec("a", pa=201.5)]
    assert fm.n_cols == 0


def test_write_rejects_row_mismatch(tmp_path):
    fm = FeatureMatrix(("x",), np.zeros((2, 1)))
    with pytest.raises(InputError):
        write_dataset(tmp_path / "bad.csv", [rec("a")], fm)


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_read_reports_line_numbers(tmp_path):
    p = write_text(
        tmp_path / "short.csv",
        "id,smiles,group_key,pa,f0\nm0,CCO,g0,200.0,1.0\nm1,CCN,g1,bad,2.0\n",
    )
    with pytest.raises(InputError, match="line 3"):
        read_dataset(p)

    p = write_text(
        tmp_path / "cells.csv",
        "id,smiles,group_key,pa,f0\nm0,CCO,g0,200.0\n",
    )
    with pytest.raises(InputError, match="line 2"):
        read_dataset(p)

    p = write_text(
        tmp_path / "dup.csv",
        "id,smiles,group_key,pa\nm0,CCO,g0,200.0\nm0,CCN,g1,201.0\n",
    )
    with pytest.raises(InputError, match="line 3.*duplicate id"):
        read_dataset(p)

    p = write_text(
        tmp_path / "feat.csv",
        "id,smiles,group_key,pa,f0\nm0,CCO,g0,200.0,oops\n",
    )
    with pytest.raises(InputError, match="line 2.*'f0'"):
        read_dataset(p)


def test_read_header_validation(tmp_path):
    p = write_text(tmp_path / "missing.csv", "id,smiles,pa\nm0,CCO,200.0\n")
    with pytest.raises(InputError, match="group_key"):
        read_dataset(p)

    p = write_text(tmp_path / "dupcol.csv", "id,smiles,group_key,pa,f0,f0\n")
    with pytest.raises(InputError, match="duplicate column"):
        read_dataset(p)

    p = write_text(tmp_path / "empty.csv", "")
    with pytest.raises(InputError, match="line 1"):
        read_dataset(p)


def test_read_skips_blank_lines_and_parses_nan(tmp_path):
    p = write_text(
        tmp_path / "gaps.csv",
        "id,smiles,group_key,pa,f0,f1\n"
        "m0,CCO,g0,200.0,1.5,nan\n"
        "\n"
        "m1,CCN,g1,201.0,,2.5\n",
    )
    records, fm = read_dataset(p)
    assert [r.id for r in records] == ["m0", "m1"]
    assert np.isnan(fm.values[0, 1]) and np.isnan(fm.values[1, 0])
    assert fm.values[0, 0] == 1.5
