import json

import numpy as np
import pytest

from driftadapt.data_model import (
    Column,
    ColumnKind,
    Dataset,
    IMPUTE_ZERO,
    KEEP_MISSING,
    MISSING_LABEL,
    UNSEEN_LABEL,
    align_codebooks,
    encode,
    extract_label,
    load_csv,
    load_schema,
    vstack_encoded,
    write_csv,
)
from driftadapt.errors import DataError

from conftest import make_dataset


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_kind_inference(self, tmp_path):
        path = _write(tmp_path, "t.csv", "a,b\n1,x\n2,y\n3,1\n")
        ds = load_csv(path)
        assert [c.kind for c in ds.columns] == [
            ColumnKind.NUMERICAL, ColumnKind.CATEGORICAL,
        ]
        assert ds.n_rows == 3

    def test_empty_numeric_cell_is_missing_not_zero(self, tmp_path):
        path = _write(tmp_path, "t.csv", "a,b\n1.5,1\n,2\n2.0,3\n")
        ds = load_csv(path)
        assert np.isnan(ds.data["a"][1])
        assert ds.data["a"][0] == 1.5
        assert ds.kind_of("a") == ColumnKind.NUMERICAL

    def test_missing_spellings(self, tmp_path):
        path = _write(tmp_path, "t.csv", "a,b\nNA,nan\nNaN,ok\n2,x\n")
        ds = load_csv(path)
        assert np.isnan(ds.data["a"][0]) and np.isnan(ds.data["a"][1])
        assert ds.data["b"][0] is None and ds.data["b"][1] == "ok"

    def test_ragged_row_names_line(self, tmp_path):
        path = _write(tmp_path, "t.csv", "a,b\n1,2\n1,2,3\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(tmp_path / "absent.csv")

    def test_schema_overrides_inference(self, tmp_path):
        path = _write(tmp_path, "t.csv", "a,b\n1,2\n3,4\n")
        ds = load_csv(path, schema={"b": ColumnKind.CATEGORICAL})
        assert ds.kind_of("a") == ColumnKind.NUMERICAL
        assert ds.kind_of("b") == ColumnKind.CATEGORICAL
        assert ds.data["b"][0] == "2"

    def test_schema_header_mismatch(self, tmp_path):
        path = _write(tmp_path, "t.csv", "a\n1\n")
        with pytest.raises(DataError, match="ghost"):
            load_csv(path, schema={"ghost": ColumnKind.NUMERICAL})

    def test_schema_file_roundtrip(self, tmp_path):
        spath = _write(tmp_path, "s.json",
                       json.dumps({"a": "numerical", "b": "datetime"}))
        schema = load_schema(spath)
        assert schema == {"a": ColumnKind.NUMERICAL, "b": ColumnKind.DATETIME}

    def test_quoted_cells(self, tmp_path):
        path = _write(tmp_path, "t.csv", 'a,b\n"1.5","x,y"\n2,z\n')
        ds = load_csv(path)
        assert ds.data["a"][0] == 1.5
        assert ds.data["b"][0] == "x,y"


class TestEncode:
    def test_categorical_first_appearance_with_missing_label(self):
        ds = make_dataset(c=["a", "b", None, "a"])
        em = encode(ds, IMPUTE_ZERO)
        assert em.values[:, 0].tolist() == [0.0, 1.0, 2.0, 0.0]
        assert em.codebooks["c"][MISSING_LABEL] == 2
        assert not em.missing_mask.any()

    def test_numeric_impute_zero(self):
        em = encode(make_dataset(x=[1.5, None]), IMPUTE_ZERO)
        assert em.values[:, 0].tolist() == [1.5, 0.0]
        assert not em.missing_mask.any()

    def test_numeric_keep_missing(self):
        em = encode(make_dataset(x=[1.5, None]), KEEP_MISSING)
        assert em.values[0, 0] == 1.5
        assert np.isnan(em.values[1, 0])
        assert em.missing_mask[:, 0].tolist() == [False, True]

    def test_non_modelable_columns_dropped_and_reported(self):
        ds = Dataset(
            name="d",
            columns=[Column("x", ColumnKind.NUMERICAL),
                     Column("t", ColumnKind.DATETIME)],
            data={"x": np.array([1.0, 2.0]),
                  "t": np.array(["2020-01-01", "2020-01-02"], dtype=object)},
            n_rows=2,
        )
        em = encode(ds, IMPUTE_ZERO)
        assert em.feature_names == ["x"]
        assert em.dropped_columns == ["t"]

    def test_no_modelable_columns_is_error(self):
        ds = Dataset(
            name="d",
            columns=[Column("t", ColumnKind.MULTIVALUE_CATEGORICAL)],
            data={"t": np.array(["a;b"], dtype=object)},
            n_rows=1,
        )
        with pytest.raises(DataError, match="modelable"):
            encode(ds, IMPUTE_ZERO)

    def test_deterministic(self):
        ds = make_dataset(c=["q", "r", "q", None], x=[1, None, 3, 4])
        a, b = encode(ds, KEEP_MISSING), encode(ds, KEEP_MISSING)
        assert np.array_equal(a.values, b.values, equal_nan=True)
        assert np.array_equal(a.missing_mask, b.missing_mask)
        assert a.codebooks == b.codebooks

    def test_codebook_roundtrip_decoding(self):
        ds = make_dataset(c=["a", "b", None, "a"])
        em = encode(ds, IMPUTE_ZERO)
        decoded = [em.decode("c", int(v)) for v in em.values[:, 0]]
        assert decoded == ["a", "b", MISSING_LABEL, "a"]


class TestAlignCodebooks:
    def test_unseen_gets_dedicated_code(self):
        train = encode(make_dataset(c=["a", "b"]), IMPUTE_ZERO)
        test = make_dataset(c=["c", "a"])
        em = align_codebooks(train, test)
        assert em.values[:, 0].tolist() == [2.0, 0.0]
        assert em.codebooks["c"][UNSEEN_LABEL] == 2

    def test_unseen_distinct_from_missing(self):
        train = encode(make_dataset(c=["a", None]), IMPUTE_ZERO)
        test = make_dataset(c=["zzz", None])
        em = align_codebooks(train, test)
        # missing keeps the training missing code; unseen gets a new one.
        assert em.values[:, 0].tolist() == [2.0, 1.0]

    def test_missing_column_is_error(self):
        train = encode(make_dataset(c=["a"], x=[1.0]), IMPUTE_ZERO)
        test = make_dataset(c=["a"])
        with pytest.raises(DataError, match="x"):
            align_codebooks(train, test)

    def test_kind_mismatch_is_error(self):
        train = encode(make_dataset(x=[1.0, 2.0]), IMPUTE_ZERO)
        test = make_dataset(x=["a", "b"])
        with pytest.raises(DataError, match="numerical"):
            align_codebooks(train, test)

    def test_realignment_is_deterministic(self):
        train = encode(make_dataset(c=["a", "b"], x=[1, 2]), KEEP_MISSING)
        test = make_dataset(c=["b", "new", None], x=[5, None, 7])
        a = align_codebooks(train, test)
        b = align_codebooks(train, test)
        assert np.array_equal(a.values, b.values, equal_nan=True)
        assert a.codebooks == b.codebooks


class TestDatasetInvariants:
    def test_column_length_mismatch(self):
        with pytest.raises(DataError):
            Dataset(name="d", columns=[Column("a", ColumnKind.NUMERICAL)],
                    data={"a": np.array([1.0, 2.0])}, n_rows=3)

    def test_label_must_be_binary(self):
        with pytest.raises(DataError):
            make_dataset(x=[1.0, 2.0], label=[0, 2])

    def test_extract_label(self):
        ds = make_dataset(x=[1.0, 2.0], y=[1.0, 0.0])
        out = extract_label(ds, "y")
        assert out.column_names == ["x"]
        assert out.label.tolist() == [1, 0]

    def test_extract_label_rejects_nonbinary(self):
        ds = make_dataset(x=[1.0], y=[0.7])
        with pytest.raises(DataError, match="non-binary"):
            extract_label(ds, "y")

    def test_extract_label_rejects_missing(self):
        ds = make_dataset(x=[1.0], y=[None])
        with pytest.raises(DataError, match="missing"):
            extract_label(ds, "y")


class TestWriteCsv:
    def test_roundtrip(self, tmp_path):
        ds = make_dataset(x=[1.5, None, -0.25], c=["a", None, "b"],
                          label=[1, 0, 1])
        path = tmp_path / "out.csv"
        write_csv(ds, path, label_column="y")
        back = load_csv(path, schema={"x": ColumnKind.NUMERICAL,
                                      "c": ColumnKind.CATEGORICAL,
                                      "y": ColumnKind.NUMERICAL})
        back = extract_label(back, "y")
        assert back.label.tolist() == [1, 0, 1]
        assert back.data["x"][0] == 1.5 and np.isnan(back.data["x"][1])
        assert back.data["c"][1] is None and back.data["c"][2] == "b"

    def test_identical_bytes_on_rewrite(self, tmp_path):
        ds = make_dataset(x=[0.1, 2.0 / 3.0], c=["u", "v"])
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(ds, p1)
        write_csv(ds, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestVstack:
    def test_concatenates_rows(self):
        train = encode(make_dataset(c=["a", "b"]), IMPUTE_ZERO)
        t1 = align_codebooks(train, make_dataset(c=["b", "zz"]))
        t2 = align_codebooks(train, make_dataset(c=["a"]))
        both = vstack_encoded([t1, t2])
        assert both.n_rows == 3
        assert both.values[:, 0].tolist() == [1.0, 2.0, 0.0]

    def test_feature_mismatch(self):
        a = encode(make_dataset(x=[1.0]), IMPUTE_ZERO)
        b = encode(make_dataset(z=[1.0]), IMPUTE_ZERO)
        with pytest.raises(DataError):
            vstack_encoded([a, b])
