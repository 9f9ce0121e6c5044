import os
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mascots.dataset_io import (
    Dataset,
    SplitWarning,
    TimeSeries,
    dataset_from_dict,
    load_csv,
    load_dataset,
    load_json,
    load_ts,
    save_csv,
    save_dataset,
    save_json,
    save_ts,
    train_test_split,
    znormalize,
)
from mascots.errors import EmptyDataset, ParseError, SchemaVersionError, ShapeError


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_minimal_ts_without_header(tmp_path):
    data = load_ts(write(tmp_path, "a.ts", "1,2,3:0\n4,5,6:1\n"))
    assert (data.n, data.channels, data.length, data.n_classes) == (2, 1, 3, 2)
    assert data.labels.tolist() == [0, 1]
    np.testing.assert_array_equal(data.values[1, 0], [4, 5, 6])


def test_ts_ragged_channels(tmp_path):
    with pytest.raises(ShapeError):
        load_ts(write(tmp_path, "a.ts", "1,2,3:1,2,3,4:a\n"))


def test_ts_header_and_multichannel(tmp_path):
    text = (
        "# comment\n@problemName toy\n@univariate false\n@dimensions 2\n"
        "@classLabel true up down\n@data\n"
        "1,2:3,4:down\n5,6:7,8:up\n"
    )
    data = load_ts(write(tmp_path, "a.ts", text))
    assert data.class_names == ("up", "down")
    assert data.labels.tolist() == [1, 0]
    assert data.values.shape == (2, 2, 2)
    np.testing.assert_array_equal(data.values[0], [[1, 2], [3, 4]])


def test_ts_first_appearance_order(tmp_path):
    data = load_ts(write(tmp_path, "a.ts", "@data\n1,2:b\n1,3:a\n2,2:b\n"))
    assert data.class_names == ("b", "a")
    assert data.labels.tolist() == [0, 1, 0]


@pytest.mark.parametrize(
    "text, error",
    [
        ("1,x,3:a\n", ParseError),
        ("1,2,3\n", ParseError),
        ("1,,3:a\n", ParseError),
        ("1,nan,3:a\n", ParseError),
        ("1,?,3:a\n", ParseError),
        ("@data\n1,2:a\n@classLabel true a\n", ParseError),
        ("@classLabel true a\n@data\n1,2:b\n", ParseError),
        ("@dimensions 2\n@data\n1,2:a\n", ShapeError),
        ("1,2:a\n1,2,3:b\n", ShapeError),
        ("@data\n", EmptyDataset),
        ("", EmptyDataset),
    ],
)
def test_ts_errors(tmp_path, text, error):
    with pytest.raises(error):
        load_ts(write(tmp_path, "a.ts", text))


def test_missing_file_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        load_ts(tmp_path / "nope.ts")
    with pytest.raises(ParseError):
        load_csv(tmp_path / "nope.csv")


def test_csv_examples(tmp_path):
    one = load_csv(write(tmp_path, "a.csv", "0,1,2,A\n"), channels=1)
    assert (one.n, one.length, one.labels.tolist(), one.class_names) == (1, 3, [0], ("A",))
    two = load_csv(write(tmp_path, "b.csv", "0,1,2,3,A\n"), channels=2)
    assert (two.channels, two.length) == (2, 2)
    np.testing.assert_array_equal(two.values[0], [[0, 1], [2, 3]])
    with pytest.raises(ParseError):
        load_csv(write(tmp_path, "c.csv", "0,zz,2,A\n"))
    with pytest.raises(ShapeError):
        load_csv(write(tmp_path, "d.csv", "0,1,2,A\n"), channels=2)
    with pytest.raises(ShapeError):
        load_csv(write(tmp_path, "e.csv", "0,1,2,A\n0,1,B\n"))


def test_shared_class_mapping(tmp_path):
    train = load_csv(write(tmp_path, "tr.csv", "0,1,x\n1,0,y\n"))
    test = load_csv(write(tmp_path, "te.csv", "0,1,y\n1,0,x\n"), class_names=train.class_names)
    assert test.labels.tolist() == [1, 0]
    with pytest.raises(ParseError):
        load_csv(write(tmp_path, "bad.csv", "0,1,z\n"), class_names=train.class_names)


@pytest.mark.skipif(not os.environ.get("MASCOTS_GUNPOINT"), reason="set MASCOTS_GUNPOINT to a GunPoint_TRAIN.ts path")
def test_gunpoint_train_shape():
    data = load_ts(os.environ["MASCOTS_GUNPOINT"])
    assert (data.n, data.channels, data.length, data.n_classes) == (50, 1, 150, 2)


def test_containers_validate_and_freeze():
    ts = TimeSeries([1.0, 2.0, 3.0])
    assert ts.shape == (1, 3)
    with pytest.raises(ValueError):
        ts.values[0, 0] = 5.0
    with pytest.raises(ParseError):
        TimeSeries([1.0, np.inf])
    with pytest.raises(ShapeError):
        TimeSeries(np.zeros((2, 2, 2)))
    with pytest.raises(EmptyDataset):
        Dataset(np.zeros((0, 1, 3)), [], ("a", "b"))
    with pytest.raises(ShapeError):
        Dataset(np.zeros((2, 1, 3)), [0, 2], ("a", "b"))
    with pytest.raises(ShapeError):
        Dataset(np.zeros((2, 1, 3)), [0], ("a", "b"))


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 3), st.integers(1, 7)), elements=finite))
def test_round_trip_bit_exact(tmp_path_factory, values):
    tmp = tmp_path_factory.mktemp("rt")
    n = values.shape[0]
    labels = np.arange(n) % 2
    data = Dataset(values, labels, ("neg", "pos"))
    for name in ("d.ts", "d.csv", "d.json"):
        path = tmp / name
        save_dataset(data, path)
        back = load_dataset(path, channels=values.shape[1], class_names=data.class_names)
        assert back.values.tobytes() == data.values.tobytes()
        assert back.labels.tolist() == data.labels.tolist()


def test_json_round_trip_keeps_ids_and_names(tmp_path):
    data = Dataset(np.arange(12.0).reshape(3, 1, 4), [1, 0, 1], ("b", "a"), ("x", "y", "z"))
    save_json(data, tmp_path / "d.json")
    back = load_json(tmp_path / "d.json")
    assert back.ids == data.ids and back.class_names == data.class_names
    with pytest.raises(SchemaVersionError):
        dataset_from_dict({"format_version": 99})


def test_save_ts_and_csv_text(tmp_path):
    data = Dataset(np.array([[[0.1, 2.0]], [[3.0, 4.5]]]), [0, 1], ("a", "b"))
    save_ts(data, tmp_path / "d.ts")
    assert "0.1,2.0:a" in (tmp_path / "d.ts").read_text()
    save_csv(data, tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().splitlines()[1] == "3.0,4.5,b"


def test_znormalize():
    data = Dataset(np.array([[[1.0, 2.0, 3.0]], [[5.0, 5.0, 5.0]]]), [0, 1], ("a", "b"))
    z = znormalize(data).values
    np.testing.assert_allclose(z[0].mean(), 0, atol=1e-12)
    np.testing.assert_allclose(z[0].std(), 1)
    np.testing.assert_array_equal(z[1], 0)


def balanced(n):
    return Dataset(np.arange(n * 4, dtype=float).reshape(n, 1, 4), np.arange(n) % 2, ("a", "b"))


def test_split_deterministic():
    data = balanced(10)
    a = train_test_split(data, 0.3, 7)
    b = train_test_split(data, 0.3, 7)
    assert a[0].ids == b[0].ids and a[1].ids == b[1].ids
    assert a[0].values.tobytes() == b[0].values.tobytes()


def test_split_balanced_halves():
    train, test = train_test_split(balanced(10), 0.5, 0)
    assert train.n == 5 and test.n == 5
    for part in (train, test):
        counts = np.bincount(part.labels, minlength=2)
        assert abs(int(counts[0]) - int(counts[1])) <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.floats(0.05, 0.95), st.integers(0, 2**31), st.integers(1, 4))
def test_split_partition(n, frac, seed, classes):
    labels = np.arange(n) % classes
    data = Dataset(np.arange(n, dtype=float).reshape(n, 1, 1), labels, tuple("abcd"[:classes]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SplitWarning)
        train, test = train_test_split(data, frac, seed)
    ids = sorted(train.ids + test.ids, key=int)
    assert ids == list(data.ids)
    assert not set(train.ids) & set(test.ids)
    assert train.n >= 1 and test.n >= 1


def test_split_stratification_and_warning():
    data = Dataset(np.zeros((6, 1, 2)), [0, 0, 0, 0, 0, 1], ("a", "b"))
    with pytest.warns(SplitWarning):
        train_test_split(data, 0.5, 1)
    strat = Dataset(np.zeros((9, 1, 2)), [0] * 6 + [1] * 3, ("a", "b"))
    with warnings.catch_warnings():
        warnings.simplefilter("error", SplitWarning)
        _, test = train_test_split(strat, 1 / 3, 3)
    assert np.bincount(test.labels).tolist() == [2, 1]


def test_split_single_instance():
    with pytest.raises(EmptyDataset):
        train_test_split(Dataset(np.zeros((1, 1, 2)), [0], ("a",)), 0.5, 0)
