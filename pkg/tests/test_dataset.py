import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdm_uts.dataset import (
    AllRecordsDropped,
    ConstantFeature,
    EmptyFile,
    LabeledDataset,
    LabelingRule,
    MalformedRow,
    MissingColumn,
    OutlierError,
    SingleClassStratify,
    SpecimenRecord,
    SplitSpec,
    apply_scaler,
    fit_scaler,
    label,
    load_table1,
    parse_csv,
    split_indices,
    stratified_split,
    table1_text,
    to_csv,
    validate,
)

HEADER = "infill_pct,layer_height_mm,print_speed_mm_s,extrusion_temp_c,uts_mpa\n"


def test_table1_has_31_rows_in_file_order():
    records = load_table1()
    assert len(records) == 31
    assert records[0] == SpecimenRecord(78, 0.32, 35, 220, 46.17)
    assert records[5] == SpecimenRecord(100, 0.24, 50, 210, 54.2)
    assert records[-1] == SpecimenRecord(33, 0.16, 35, 200, 200)


def test_single_rows():
    assert parse_csv(HEADER + "78,0.32,35,220,46.17\n") == [SpecimenRecord(78, 0.32, 35, 220, 46.17)]
    assert parse_csv(HEADER + "100,0.24,50,210,54.2") == [SpecimenRecord(100, 0.24, 50, 210, 54.2)]


def test_headers_case_and_whitespace_insensitive_and_reordered():
    text = "  UTS_MPA ,Infill   Percentage (%),layer height (mm),PRINT SPEED (mm/sec),Extrusion temp (°C)\n46.17,78,0.32,35,220\n"
    assert parse_csv(text) == [SpecimenRecord(78, 0.32, 35, 220, 46.17)]


def test_empty_file():
    with pytest.raises(EmptyFile):
        parse_csv("")
    with pytest.raises(EmptyFile):
        parse_csv("\n  \n")


def test_missing_column():
    with pytest.raises(MissingColumn) as err:
        parse_csv("infill_pct,layer_height_mm,print_speed_mm_s,uts_mpa\n1,2,3,4\n")
    assert err.value.column == "extrusion_temp_c"


@pytest.mark.parametrize(
    "row, index",
    [("78,0.32,35,220", 0), ("78,0.32,abc,220,46", 0), ("78,0.32,35,220,-1", 0), ("0,0.32,35,220,40", 0)],
)
def test_malformed_rows(row, index):
    with pytest.raises(MalformedRow) as err:
        parse_csv(HEADER + row + "\n")
    assert err.value.row_index == index


def test_malformed_row_index_points_at_data_row():
    with pytest.raises(MalformedRow) as err:
        parse_csv(HEADER + "78,0.32,35,220,46\n78,0.32,35,220,x\n")
    assert err.value.row_index == 1


def test_fixture_string_round_trip():
    original = [line.split(",") for line in table1_text().strip().splitlines()[1:]]
    again = [line.split(",") for line in to_csv(load_table1()).strip().splitlines()[1:]]
    assert again == original


def test_validate_flags_only_the_200_mpa_row():
    records = load_table1()
    with pytest.warns(UserWarning):
        report = validate(records)
    assert [(w.row_index, w.value) for w in report.warnings] == [(30, 200.0)]
    assert len(report.records) == 30
    uts = [r.uts for r in report.records]
    assert (min(uts), max(uts)) == (41.18, 54.2)


def test_validate_policies():
    records = load_table1()
    kept = validate(records, "keep")
    assert len(kept.records) == 31 and len(kept.warnings) == 1
    with pytest.raises(OutlierError):
        validate(records, "error")
    clean = validate(records[:30], "error")
    assert clean.warnings == ()
    with pytest.raises(ValueError):
        validate([], "drop")
    with pytest.raises(AllRecordsDropped):
        validate([records[-1]], "drop")


def test_validation_jsonl():
    report = validate(load_table1(), "keep")
    lines = report.to_jsonl().splitlines()
    assert json.loads(lines[0]) == {
        "row_index": 30,
        "field": "uts_mpa",
        "value": 200.0,
        "reason": "UTS exceeds plausibility ceiling 100 MPa",
    }


@pytest.mark.parametrize("uts, expected", [(54.2, 1), (42.78, 0), (48.0, 1)])
def test_label_examples(uts, expected):
    ds = label([SpecimenRecord(50, 0.2, 50, 210, uts)], LabelingRule(60, 0.8, 1))
    assert ds.labels.tolist() == [expected]


def test_boundary_label_configurable():
    ds = label([SpecimenRecord(50, 0.2, 50, 210, 48.0)], LabelingRule(60, 0.8, boundary_label=0))
    assert ds.labels.tolist() == [0]


@pytest.mark.parametrize("kwargs", [{"base_uts": 0}, {"fraction": 1.0}, {"fraction": 0}, {"boundary_label": 2}])
def test_invalid_rule(kwargs):
    with pytest.raises(ValueError):
        LabelingRule(**kwargs)


def test_default_rule_gives_two_classes_on_table1():
    ds = label(validate(load_table1(), "keep").records[:30])
    assert ds.class_counts() == (19, 11)


positive = st.floats(0.01, 500, allow_nan=False)


@given(infill=st.floats(0.5, 100), lh=positive, ps=positive, et=positive, uts=positive)
def test_label_depends_only_on_uts(infill, lh, ps, et, uts):
    rule = LabelingRule()
    a = label([SpecimenRecord(infill, lh, ps, et, uts)], rule).labels[0]
    b = label([SpecimenRecord(1.0, 1.0, 1.0, 1.0, uts)], rule).labels[0]
    assert a == b


def test_scaler_two_point():
    s = fit_scaler(np.array([[2.0], [4.0]]))
    assert s.means.tolist() == [3.0] and s.std_devs.tolist() == [1.0]
    assert apply_scaler(s, [[2.0], [4.0]]).ravel().tolist() == [-1.0, 1.0]


def test_scaler_round_trip_on_infill():
    x = np.array([r.features for r in load_table1()])
    s = fit_scaler(x)
    back = s.inverse_transform(s.transform(x))
    np.testing.assert_allclose(back[:, 0], x[:, 0], rtol=1e-10, atol=0)


def test_constant_feature():
    with pytest.raises(ConstantFeature) as err:
        fit_scaler(np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]))
    assert err.value.column == 1


@settings(max_examples=100)
@given(
    st.integers(2, 30).flatmap(
        lambda n: st.lists(
            st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=3), min_size=n, max_size=n
        )
    )
)
def test_scaler_standardizes(rows):
    x = np.array(rows)
    spread = x.max(axis=0) - x.min(axis=0)
    if np.any(spread < 1e-3 * np.maximum(1.0, np.abs(x).max(axis=0))):
        return  # near-constant columns lose precision; constant ones are rejected
    z = fit_scaler(x).transform(x)
    assert np.all(np.abs(z.mean(axis=0)) < 1e-10)
    assert np.all(np.abs(z.std(axis=0) - 1) < 1e-10)


def _dataset(n_pos, n_neg):
    labels = np.array([1] * n_pos + [0] * n_neg)
    return LabeledDataset(np.arange(labels.size, dtype=float).reshape(-1, 1), labels)


def _oracle_test_count(count, fraction):
    """Half-up rounding in exact arithmetic, then the non-empty clamp."""
    exact = Fraction(count) * Fraction(str(fraction))
    n = math.floor(exact + Fraction(1, 2))
    if count < 2:
        return 0
    return min(max(n, 1), count - 1)


def test_split_counts_30_rows():
    train, test = stratified_split(_dataset(12, 18), SplitSpec(0.25, 42))
    assert test.class_counts() == (5, 3)
    assert train.class_counts() == (13, 9)


@pytest.mark.parametrize("fraction", [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.5, 0.7, 0.75, 0.9])
def test_split_counts_match_rounding_enumeration(fraction):
    for n_pos in range(1, 21):
        for n_neg in range(1, 21):
            if n_pos + n_neg < 3:
                continue
            expected = (_oracle_test_count(n_neg, fraction), _oracle_test_count(n_pos, fraction))
            if sum(expected) == 0:
                with pytest.raises(ValueError):
                    stratified_split(_dataset(n_pos, n_neg), SplitSpec(fraction, 1))
                continue
            train, test = stratified_split(_dataset(n_pos, n_neg), SplitSpec(fraction, 1))
            assert test.class_counts() == expected


def test_split_clamps_so_classes_survive_on_both_sides():
    train, test = stratified_split(_dataset(2, 10), SplitSpec(0.9, 0))
    assert test.class_counts()[1] == 1 and train.class_counts()[1] == 1
    train, test = stratified_split(_dataset(2, 10), SplitSpec(0.01, 0))
    assert test.class_counts() == (1, 1)


def test_split_deterministic_and_seed_sensitive():
    labels = _dataset(12, 18).labels
    a = split_indices(labels, SplitSpec(0.25, 7))
    b = split_indices(labels, SplitSpec(0.25, 7))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    others = {tuple(split_indices(labels, SplitSpec(0.25, s))[1]) for s in range(10)}
    assert len(others) > 1


def test_single_class_stratify():
    with pytest.raises(SingleClassStratify):
        stratified_split(_dataset(0, 10), SplitSpec())


def test_unstratified_split():
    train, test = stratified_split(_dataset(3, 17), SplitSpec(0.25, 3, stratified=False))
    assert len(test) == 5 and len(train) == 15


@settings(max_examples=200)
@given(st.integers(1, 25), st.integers(1, 25), st.floats(0.05, 0.95), st.integers(0, 2**64 - 1))
def test_split_partitions_and_preserves_counts(n_pos, n_neg, fraction, seed):
    ds = _dataset(n_pos, n_neg)
    try:
        train, test = stratified_split(ds, SplitSpec(fraction, seed))
    except ValueError:
        return  # empty side; only possible for tiny classes
    tr, te = set(train.indices.tolist()), set(test.indices.tolist())
    assert tr.isdisjoint(te) and tr | te == set(range(len(ds)))
    assert train.class_counts()[0] + test.class_counts()[0] == n_neg
    assert train.class_counts()[1] + test.class_counts()[1] == n_pos


def test_labeled_export_has_label_column():
    ds = label(load_table1()[:2])
    lines = ds.to_csv().splitlines()
    assert lines[0] == "infill_pct,layer_height_mm,print_speed_mm_s,extrusion_temp_c,uts_mpa,label"
    assert lines[1] == "78,0.32,35,220,46.17,0"
    assert lines[2] == "10.5,0.24,50,210,42.78,0"
