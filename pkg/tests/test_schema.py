import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxlime.schema import (
    Dataset,
    DatasetError,
    FeatureKind,
    FeatureSchema,
    SchemaError,
    denormalize,
    load_dataset,
    load_schema,
    normalize,
)


def write_schema(tmp_path, entries):
    path = tmp_path / "schema.json"
    path.write_text(json.dumps(entries))
    return path


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadSchema:
    def test_cyclic(self, tmp_path):
        (f,) = load_schema(write_schema(tmp_path, [{"name": "hour", "kind": "cyclic", "period": 24}]))
        assert f == FeatureSchema("hour", FeatureKind.CYCLIC, period=24.0)

    def test_continuous(self, tmp_path):
        (f,) = load_schema(write_schema(tmp_path, [{"name": "age", "kind": "continuous", "min": 0, "max": 120}]))
        assert (f.name, f.kind, f.min, f.max) == ("age", FeatureKind.CONTINUOUS, 0.0, 120.0)

    def test_degenerate_bounds_rejected(self, tmp_path):
        with pytest.raises(SchemaError, match="min < max"):
            load_schema(write_schema(tmp_path, [{"name": "age", "kind": "continuous", "min": 5, "max": 5}]))

    def test_preserves_file_order(self, tmp_path):
        entries = [
            {"name": "b", "kind": "categorical", "categories": ["x", "y"]},
            {"name": "a", "kind": "continuous"},
            {"name": "c", "kind": "cyclic", "period": 7},
        ]
        assert [f.name for f in load_schema(write_schema(tmp_path, entries))] == ["b", "a", "c"]

    @pytest.mark.parametrize(
        "entries, match",
        [
            ([{"name": "a", "kind": "continuous", "period": 3}], "not allowed"),
            ([{"name": "a", "kind": "cyclic"}], "period"),
            ([{"name": "a", "kind": "cyclic", "period": -1}], "period"),
            ([{"name": "a", "kind": "categorical", "categories": ["x"]}], "at least 2"),
            ([{"name": "a", "kind": "categorical", "categories": ["x", "x"]}], "distinct"),
            ([{"name": "a", "kind": "continuous", "min": 0}], "both"),
            ([{"name": "a", "kind": "spline"}], "unknown kind"),
            ([{"name": "a", "kind": "cyclic", "period": 1}, {"name": "a", "kind": "cyclic", "period": 2}], "duplicate"),
            ([{"kind": "cyclic", "period": 1}], "required"),
            ({"name": "a"}, "array"),
        ],
    )
    def test_invalid(self, tmp_path, entries, match):
        with pytest.raises(SchemaError, match=match):
            load_schema(write_schema(tmp_path, entries))

    def test_parse_failure(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text("[{")
        with pytest.raises(SchemaError, match="invalid JSON"):
            load_schema(path)


class TestLoadDataset:
    def test_stats_hand_computed(self, tmp_path, unit_feature):
        feat = FeatureSchema("v", FeatureKind.CONTINUOUS)
        ds = load_dataset(write_csv(tmp_path, "v,t\n1,0\n2,0\n3,1\n"), [feat], "t")
        assert ds.stats.mean[0] == 2.0
        assert ds.stats.std[0] == 1.0
        assert ds.n_rows == 3
        # bounds default to the data range when the schema omits them
        assert (ds.schema[0].min, ds.schema[0].max) == (1.0, 3.0)

    def test_schema_bounds_authoritative(self, tmp_path, unit_feature):
        ds = load_dataset(write_csv(tmp_path, "v,t\n0.2,0\n0.4,1\n"), [unit_feature], "t")
        assert (ds.schema[0].min, ds.schema[0].max) == (0.0, 1.0)

    def test_categorical_indices_and_frequencies(self, tmp_path, colour_feature):
        ds = load_dataset(write_csv(tmp_path, "colour,t\nred,1\nblue,2\nred,3\ngreen,4\n"), [colour_feature], "t")
        assert ds.X[:, 0].tolist() == [0, 1, 0, 2]
        assert ds.stats.frequency_table(ds.schema, 0) == {"red": 0.5, "blue": 0.25, "green": 0.25}

    def test_unknown_category(self, tmp_path, colour_feature):
        with pytest.raises(DatasetError, match="blue|purple"):
            load_dataset(write_csv(tmp_path, "colour,t\nred,1\npurple,2\n"), [colour_feature], "t")

    def test_single_row(self, tmp_path, unit_feature):
        with pytest.raises(DatasetError, match="at least 2 rows"):
            load_dataset(write_csv(tmp_path, "v,t\n0.5,1\n"), [unit_feature], "t")

    def test_missing_column(self, tmp_path, unit_feature):
        with pytest.raises(DatasetError, match="missing columns"):
            load_dataset(write_csv(tmp_path, "w,t\n0.5,1\n0.2,1\n"), [unit_feature], "t")

    def test_missing_target(self, tmp_path, unit_feature):
        with pytest.raises(DatasetError, match="'t'"):
            load_dataset(write_csv(tmp_path, "v,u\n0.5,1\n0.2,1\n"), [unit_feature], "t")

    @pytest.mark.parametrize("cell", ["abc", "", "nan"])
    def test_bad_cell(self, tmp_path, unit_feature, cell):
        with pytest.raises(DatasetError):
            load_dataset(write_csv(tmp_path, f"v,t\n0.5,1\n{cell},1\n"), [unit_feature], "t")

    def test_columns_reordered_to_schema(self, tmp_path, unit_feature, hour_feature):
        ds = load_dataset(write_csv(tmp_path, "t,hour,v\n1,23,0.1\n2,4,0.9\n"), [unit_feature, hour_feature], "t")
        np.testing.assert_array_equal(ds.X, [[0.1, 23.0], [0.9, 4.0]])
        np.testing.assert_array_equal(ds.y, [1.0, 2.0])

    def test_stats_match_independent_pass(self, mixed_dataset):
        # single-pass (Welford) recomputation, independent of numpy's reductions
        for j in (0, 1):
            n, mean, m2 = 0, 0.0, 0.0
            for v in mixed_dataset.X[:, j]:
                n += 1
                delta = v - mean
                mean += delta / n
                m2 += delta * (v - mean)
            assert math.isclose(mixed_dataset.stats.mean[j], mean, rel_tol=1e-12)
            assert math.isclose(mixed_dataset.stats.std[j], math.sqrt(m2 / (n - 1)), rel_tol=1e-12)
        counts = np.zeros(3)
        for v in mixed_dataset.X[:, 2]:
            counts[int(v)] += 1
        np.testing.assert_allclose(mixed_dataset.stats.frequencies[2], counts / counts.sum(), rtol=1e-12)
        assert mixed_dataset.stats.frequencies[2].sum() == pytest.approx(1.0)

    def test_immutable(self, mixed_dataset):
        with pytest.raises(ValueError):
            mixed_dataset.X[0, 0] = 5.0


class TestNormalize:
    def test_midpoint(self):
        assert normalize(50.0, FeatureSchema("a", FeatureKind.CONTINUOUS, min=0.0, max=100.0)) == 0.5

    def test_cyclic_wrap(self, hour_feature):
        assert normalize(25.0, hour_feature) == pytest.approx(1 / 24)

    def test_out_of_range_permitted(self):
        assert normalize(-10.0, FeatureSchema("a", FeatureKind.CONTINUOUS, min=0.0, max=100.0)) == -0.1

    def test_categorical_passthrough(self, colour_feature):
        assert normalize(2.0, colour_feature) == 2.0

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
    def test_continuous_monotone(self, a, b):
        f = FeatureSchema("a", FeatureKind.CONTINUOUS, min=-3.0, max=11.0)
        if a <= b:
            assert normalize(a, f) <= normalize(b, f)

    @given(st.floats(-1e4, 1e4), st.integers(-50, 50))
    def test_cyclic_periodic(self, v, k):
        f = FeatureSchema("h", FeatureKind.CYCLIC, period=24.0)
        a, b = normalize(v, f), normalize(v + k * 24.0, f)
        # equal on the circle: either the same value or the two ends of the seam
        assert min(abs(a - b), 1 - abs(a - b)) < 1e-9

    @given(st.floats(-50.0, 80.0))
    def test_round_trip(self, v):
        f = FeatureSchema("a", FeatureKind.CONTINUOUS, min=-50.0, max=80.0)
        back = denormalize(normalize(v, f), f)
        assert abs(back - v) <= 1e-12 * max(abs(v), 1.0)


def test_from_arrays_rejects_bad_category_index(colour_feature):
    with pytest.raises(DatasetError, match="out of range"):
        Dataset.from_arrays([colour_feature], [[0.0], [3.0]], [1.0, 2.0])


def test_drop_feature(mixed_dataset):
    reduced = mixed_dataset.drop_feature("hour")
    assert reduced.feature_names == ["v", "colour"]
    np.testing.assert_array_equal(reduced.X, mixed_dataset.X[:, [0, 2]])
