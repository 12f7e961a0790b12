import numpy as np
import pytest

from cascadeids.core import Dataset, class_counts
from cascadeids.resampling import (
    ResampleConfig,
    enn_filter,
    hybrid_sample,
    interpolate,
    nearest_neighbors,
    resample,
    smote,
    smote_enn,
)

from conftest import blobs
from oracles import brute_enn_removed, brute_knn


def ds_of(X, y):
    X = np.asarray(X, float)
    return Dataset(X, y, tuple(f"x{j}" for j in range(X.shape[1])))


def test_interpolation_pinned_gap():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    out = interpolate(X, np.array([0]), np.array([1]), np.array([0.5]))
    assert np.array_equal(out, [[0.5, 0.5]])


def test_smote_duplicates_give_duplicates():
    ds = ds_of([[3.0, -1.0]] * 4 + [[0.0, 0.0]] * 10, [1] * 4 + [0] * 10)
    out = smote(ds, {1: 10}, k=2, seed=0)
    synth = out.features[out.row_ids == -1]
    assert synth.shape == (6, 2)
    assert np.all(synth == [3.0, -1.0])


def test_smote_balances_counts():
    ds = blobs(100, 20)
    out = smote(ds, {0: 100, 1: 100}, k=5, seed=1)
    assert class_counts(out) == {0: 100, 1: 100}
    # originals untouched and in front
    assert np.array_equal(out.features[:120], ds.features)


def test_smote_errors_and_clamp():
    with pytest.raises(ValueError, match="at least 2"):
        smote(ds_of([[0.0], [1.0], [2.0]], [0, 0, 1]), {1: 3})
    with pytest.raises(ValueError, match="below"):
        smote(blobs(10, 5), {1: 2})
    with pytest.warns(UserWarning, match="using k=2"):
        out = smote(blobs(10, 3), {1: 10}, k=5)
    assert class_counts(out)[1] == 10


def test_smote_deterministic():
    ds = blobs(50, 7, seed=3)
    a = smote(ds, {1: 50}, seed=9)
    b = smote(ds, {1: 50}, seed=9)
    assert np.array_equal(a.features, b.features)


def test_nearest_neighbors_matches_bruteforce():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    nn = nearest_neighbors(X, 4)
    for i in range(40):
        assert list(nn[i]) == brute_knn(X, i, 4)


def test_nearest_neighbors_with_duplicates_excludes_self():
    X = np.zeros((5, 2))
    nn = nearest_neighbors(X, 2)
    for i in range(5):
        assert i not in nn[i]


def test_enn_removes_lone_point():
    benign = [[0, 0], [1, 0], [0, 1], [1, 1], [10, 10], [11, 10], [10, 11]]
    ds = ds_of(benign + [[0.5, 0.5]], [0] * 7 + [1])
    out = enn_filter(ds, 3)
    assert 7 not in out.row_ids
    assert brute_enn_removed(ds.features, ds.labels, 3) == {7}


def test_enn_keeps_clean_clusters_and_single_class():
    ds = blobs(20, 20, gap=20)
    assert enn_filter(ds, 3) is ds
    one = ds_of(np.random.default_rng(1).normal(size=(10, 2)), [1] * 10)
    assert enn_filter(one, 3) is one


def test_smote_enn_clean_equals_smote():
    ds = blobs(60, 15, gap=25)
    cfg = ResampleConfig("smoteenn", seed=4)
    s = smote(ds, {0: 60, 1: 60}, k=5, seed=4)
    out = smote_enn(ds, cfg)
    assert np.array_equal(out.features, s.features)


def test_smote_enn_overlap_shrinks():
    ds = blobs(80, 20, gap=0.5, seed=2)
    cfg = ResampleConfig("smoteenn", seed=2)
    smoted = smote(ds, {0: 80, 1: 80}, k=5, seed=2)
    out = smote_enn(ds, cfg)
    expected_removed = brute_enn_removed(smoted.features, smoted.labels, 3)
    assert len(out) == len(smoted) - len(expected_removed) < len(smoted)
    counts = class_counts(out)
    assert counts[0] + counts[1] == len(out)


def test_hybrid_small_scale_rules():
    # majority below target stays, minority grows to target
    ds = blobs(80, 30)
    out = hybrid_sample(ds, ResampleConfig("hybrid", hybrid_target=120))
    assert class_counts(out) == {0: 80, 1: 120}
    # both at target: identity
    ds2 = blobs(50, 50)
    assert hybrid_sample(ds2, ResampleConfig("hybrid", hybrid_target=50)) is ds2
    # majority above target: undersampled without replacement
    ds3 = blobs(500, 50)
    out3 = hybrid_sample(ds3, ResampleConfig("hybrid", hybrid_target=120, seed=5))
    assert class_counts(out3) == {0: 120, 1: 120}
    maj_ids = out3.row_ids[out3.labels == 0]
    assert len(set(maj_ids.tolist())) == 120 and np.all(maj_ids >= 0)


def test_hybrid_paper_scale_ratio_rule():
    ds = blobs(8000, 3000, d=2)
    out = hybrid_sample(ds, ResampleConfig("hybrid", hybrid_target=12000))
    assert class_counts(out) == {0: 8000, 1: 12000}


def test_config_validation():
    with pytest.raises(ValueError):
        ResampleConfig("adasyn")
    with pytest.raises(ValueError, match="odd"):
        ResampleConfig(enn_k=4)


def test_resample_never_deletes_originals_in_smote():
    ds = blobs(30, 6)
    out = resample(ds, ResampleConfig("smote"))
    assert set(ds.row_ids.tolist()) <= set(out.row_ids.tolist())
    assert resample(ds, ResampleConfig("none")) is ds
