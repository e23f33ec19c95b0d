import json

import numpy as np
import pytest

from trace_scores import (DimensionError, ImputeError, NormStats, RawRecord,
                          Trajectory, TrajectoryError, build_trajectory,
                          fit_normalizer, group_by, impute,
                          load_trajectory_csv)
from trace_scores.pipeline import one_hot_categories, one_hot_encode


def records(columns, subject="s"):
    """Build RawRecords from a list of per-time rows."""
    return [RawRecord(subject_id=subject, t_index=t, values=list(row))
            for t, row in enumerate(columns)]


class TestImpute:
    def test_forward_fill(self):
        out = impute(records([[5], [None], [None]]))
        assert [r.values[0] for r in out] == [5, 5, 5]

    def test_backward_fill_leading(self):
        out = impute(records([[None], [None], [7]]))
        assert [r.values[0] for r in out] == [7, 7, 7]

    def test_class_mean_for_all_missing(self):
        out = impute(records([[None], [None], [None]]), class_means=[4.2])
        assert [r.values[0] for r in out] == [4.2, 4.2, 4.2]

    def test_all_missing_without_stats(self):
        with pytest.raises(ImputeError):
            impute(records([[None], [None]]))

    def test_mixed_columns(self):
        out = impute(records([[None, 1], [3, None], [None, None]]))
        assert [r.values for r in out] == [[3, 1], [3, 1], [3, 1]]

    def test_idempotence_and_preservation_random(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n, d = int(rng.integers(2, 10)), int(rng.integers(1, 6))
            vals = rng.normal(size=(n, d))
            mask = rng.random((n, d)) < 0.3
            rows = [[None if mask[i, j] else float(vals[i, j])
                     for j in range(d)] for i in range(n)]
            recs = records(rows)
            once = impute(recs, class_means=[0.0] * d)
            twice = impute(once, class_means=[0.0] * d)
            assert [r.values for r in twice] == [r.values for r in once]
            for i in range(n):
                for j in range(d):
                    if not mask[i, j]:
                        assert once[i].values[j] == float(vals[i, j])

    def test_categorical_mode_fill(self):
        recs = [RawRecord("s", t, [1.0], categorical={"unit": v})
                for t, v in enumerate([None, None])]
        out = impute(recs, class_modes={"unit": "icu"})
        assert [r.categorical["unit"] for r in out] == ["icu", "icu"]

    def test_categorical_ffill(self):
        recs = [RawRecord("s", t, [1.0], categorical={"unit": v})
                for t, v in enumerate(["a", None, "b"])]
        out = impute(recs)
        assert [r.categorical["unit"] for r in out] == ["a", "a", "b"]


class TestNormalizer:
    def test_midpoint(self):
        ns = fit_normalizer([[10], [20]])
        assert ns.apply([15]).values[0] == 0.5

    def test_no_clipping(self):
        ns = fit_normalizer([[10], [20]])
        assert ns.apply([10]).values[0] == 0.0
        assert ns.apply([25]).values[0] == 1.5

    def test_constant_feature_maps_to_center(self):
        ns = fit_normalizer([[3, 1], [3, 2]])
        assert ns.apply([3, 1]).values[0] == 0.5
        assert ns.apply([99, 1]).values[0] == 0.5

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        rows = rng.normal(size=(20, 4)) * 10
        ns = fit_normalizer(rows)
        for v in rng.normal(size=(10, 4)) * 10:
            back = ns.invert(ns.apply(v).values)
            np.testing.assert_allclose(back, v, rtol=1e-12, atol=1e-12)

    def test_dimension_mismatch(self):
        ns = fit_normalizer([[1, 2], [3, 4]])
        with pytest.raises(DimensionError):
            ns.apply([1, 2, 3])

    def test_json_persistence(self, tmp_path):
        ns = fit_normalizer([[10, 0], [20, 5]], names=["hr", "rr"])
        path = tmp_path / "norm.json"
        ns.save(path)
        doc = json.loads(path.read_text())
        assert doc == {"features": [{"name": "hr", "min": 10.0, "max": 20.0},
                                    {"name": "rr", "min": 0.0, "max": 5.0}]}
        loaded = NormStats.load(path)
        np.testing.assert_array_equal(loaded.apply([15, 2.5]).values, [0.5, 0.5])


class TestGroupBy:
    def test_mean_within_period(self):
        out = group_by([("s", "2020-01-03", [2.0]),
                        ("s", "2020-01-20", [4.0])])
        assert out == [("s", "2020-01", [3.0])]

    def test_single_record_identity(self):
        out = group_by([("s", "2020-02-01", [7.0])])
        assert out == [("s", "2020-02", [7.0])]

    def test_missing_aware_mean(self):
        # pairwise oracle: mean of the present values only
        out = group_by([("s", "2020-01-01", [None]),
                        ("s", "2020-01-02", [6.0])])
        assert out == [("s", "2020-01", [6.0])]

    def test_all_missing_stays_missing(self):
        out = group_by([("s", "2020-01-01", [None])])
        assert out == [("s", "2020-01", [None])]

    def test_separate_subjects_and_months(self):
        out = group_by([("a", "2020-01-01", [1.0]),
                        ("a", "2020-02-01", [2.0]),
                        ("b", "2020-01-01", [3.0])])
        assert out == [("a", "2020-01", [1.0]), ("a", "2020-02", [2.0]),
                       ("b", "2020-01", [3.0])]


class TestTrajectory:
    def test_strictly_increasing_t(self):
        from trace_scores import FeatureVector
        with pytest.raises(TrajectoryError):
            Trajectory("s", [(0, FeatureVector([1.0])), (0, FeatureVector([2.0]))])

    def test_build_trajectory_imputes_and_normalizes(self):
        ns = fit_normalizer([[0.0], [10.0]])
        recs = records([[5.0], [None]])
        traj = build_trajectory(recs, normalizer=ns)
        assert [p.values[0] for _, p in traj.points] == [0.5, 0.5]


class TestCsvLoading:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("subject_id,t,hr,rr,label\n"
                        "p1,0,60,,RFD\n"
                        "p1,1,,12,RFD\n"
                        "p2,0,80,20,mortality\n")
        by_subject, labels, names = load_trajectory_csv(path)
        assert names == ["hr", "rr"]
        assert labels == {"p1": "RFD", "p2": "mortality"}
        assert by_subject["p1"][0].values == [60.0, None]
        assert by_subject["p1"][1].values == [None, 12.0]

    def test_no_label_column(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("subject_id,t,hr\np1,0,60\n")
        by_subject, labels, names = load_trajectory_csv(path)
        assert names == ["hr"]
        assert labels == {}

    def test_bad_header(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("id,t,hr\np1,0,60\n")
        with pytest.raises(TrajectoryError):
            load_trajectory_csv(path)

    def test_duplicate_t(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("subject_id,t,hr\np1,0,60\np1,0,61\n")
        with pytest.raises(TrajectoryError):
            load_trajectory_csv(path)

    def test_determinism(self, tmp_path):
        path = tmp_path / "traj.csv"
        path.write_text("subject_id,t,hr\np1,1,61\np1,0,60\n")
        first = load_trajectory_csv(path)
        second = load_trajectory_csv(path)
        assert [r.t_index for r in first[0]["p1"]] == [0, 1]
        assert [r.values for r in first[0]["p1"]] == \
               [r.values for r in second[0]["p1"]]


class TestOneHot:
    def test_encode(self):
        recs = [RawRecord("s", 0, [1.0], categorical={"unit": "icu"}),
                RawRecord("s", 1, [2.0], categorical={"unit": "ward"})]
        cats = one_hot_categories(recs)
        assert cats == {"unit": ["icu", "ward"]}
        assert one_hot_encode(recs[0], cats) == [1.0, 1.0, 0.0]
        assert one_hot_encode(recs[1], cats) == [2.0, 0.0, 1.0]
