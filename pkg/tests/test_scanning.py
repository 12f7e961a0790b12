import numpy as np
import pytest

from cascadeids.core import Dataset
from cascadeids.scanning import n_windows, pooled_slices, scan_fit, scan_fit_transform, scan_transform

from conftest import blobs


def rows(n, d, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    return Dataset(X, (X[:, 0] > 0).astype(int), tuple(f"x{j}" for j in range(d)))


def test_pooled_slice_counts():
    assert len(pooled_slices(rows(5, 4), 4)) == 5
    ds = rows(7, 10)
    pooled = pooled_slices(ds, 2)
    assert n_windows(10, 2) == 9 and len(pooled) == 9 * 7
    single = Dataset([[1.0, 2.0, 3.0]], [1], ("a", "b", "c"))
    p = pooled_slices(single, 2)
    assert len(p) == 2 and list(p.labels) == [1, 1]
    assert np.array_equal(p.features, [[1.0, 2.0], [2.0, 3.0]])


def test_window_too_wide():
    with pytest.raises(ValueError, match="wider"):
        scan_fit(rows(5, 3), window=4)


def test_transform_shapes_and_blocks():
    ds = rows(40, 10)
    sc = scan_fit(ds, window=2, n_trees=5, seed=1)
    out = sc.transform(ds.features)
    assert out.shape == (40, 36) == (40, sc.output_dim)
    blocks = out.reshape(40, -1, 2)
    assert np.allclose(blocks.sum(axis=2), 1.0, atol=1e-9)
    assert np.all((out >= 0) & (out <= 1))
    full = scan_fit(rows(20, 2), window=2, n_trees=3)
    assert full.transform(np.zeros((1, 2))).shape == (1, 4)


def test_transform_order_window_major():
    ds = rows(30, 4)
    sc = scan_fit(ds, window=2, n_trees=4, seed=2)
    row = ds.features[3]
    out = scan_transform(sc, row)
    for p in range(3):
        for f, forest in enumerate(sc.forests):
            expected = forest.predict_proba(row[p : p + 2].reshape(1, -1))[0]
            assert np.array_equal(out[(p * 2 + f) * 2 : (p * 2 + f) * 2 + 2], expected)


def test_transform_is_pure_and_checks_length():
    ds = rows(30, 5)
    sc = scan_fit(ds, window=2, n_trees=4, seed=0)
    a = sc.transform(np.vstack([ds.features[0], ds.features[0]]))
    assert np.array_equal(a[0], a[1])
    with pytest.raises(ValueError, match="length 5"):
        sc.transform(np.zeros((1, 4)))


def test_out_of_fold_transform():
    ds = blobs(30, 30, d=4, gap=1.0)
    sc, oof = scan_fit_transform(ds, window=2, n_trees=4, seed=3, cv_folds=3)
    assert oof.shape == (60, sc.output_dim)
    assert np.allclose(oof.reshape(60, -1, 2).sum(axis=2), 1.0)
    # out-of-fold vectors differ from in-sample ones
    assert not np.array_equal(oof, sc.transform(ds.features))
