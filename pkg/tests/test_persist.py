import json

import numpy as np
import pytest

from cascadeids.baselines import logreg_fit
from cascadeids.cascade import CascadeConfig, cascade_fit
from cascadeids.forests import TreeParams, fit_tree
from cascadeids.persist import ARCHIVE_VERSION, ArchiveError, ModelArchive, dumps, load_model, save_model
from cascadeids.scanning import scan_fit

from conftest import blobs


@pytest.fixture(scope="module")
def models():
    train, valid = blobs(40, 30, d=4, gap=1.0), blobs(15, 15, d=4, gap=1.0, seed=3)
    sc = scan_fit(train, 2, n_trees=3, seed=1)
    cas = cascade_fit(train, valid, CascadeConfig(max_layers=2, n_cascade_rf=1, n_trees=4, seed=2), scanner=sc)
    return {
        "deep-forest": cas,
        "decision-tree": fit_tree(train, TreeParams(max_depth=4, ccp_alpha=0.01)),
        "logreg": logreg_fit(train, 0.1),
    }


@pytest.mark.parametrize("kind", ["deep-forest", "decision-tree", "logreg"])
def test_roundtrip_identical_predictions(tmp_path, models, kind):
    archive = ModelArchive(kind, models[kind], metadata={"seed": 3})
    save_model(archive, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    X = np.random.default_rng(0).normal(size=(100, 4))
    assert np.array_equal(back.predict_proba(X), archive.predict_proba(X))
    assert back.metadata == {"seed": 3}


def test_rejects_unknown_version(tmp_path, models):
    doc = json.loads(dumps(ModelArchive("logreg", models["logreg"])))
    doc["version"] = ARCHIVE_VERSION + 1
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(ArchiveError, match="version"):
        load_model(tmp_path / "m.json")


def test_rejects_truncated_and_corrupted(tmp_path, models):
    text = dumps(ModelArchive("decision-tree", models["decision-tree"]))
    (tmp_path / "t.json").write_text(text[: len(text) // 2])
    with pytest.raises(ArchiveError, match="truncated"):
        load_model(tmp_path / "t.json")
    doc = json.loads(text)
    doc["payload"]["model"]["threshold"][0] += 1.0
    (tmp_path / "c.json").write_text(json.dumps(doc))
    with pytest.raises(ArchiveError, match="checksum"):
        load_model(tmp_path / "c.json")
    (tmp_path / "x.json").write_text('{"format": "something-else"}')
    with pytest.raises(ArchiveError):
        load_model(tmp_path / "x.json")
