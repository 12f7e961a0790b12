import csv

from cascadeids.cli import main


def test_ingest(tmp_path, conn_log_path, capsys):
    assert main(["ingest", "--input", str(conn_log_path), "--output", str(tmp_path / "d.csv")]) == 0
    rows = list(csv.reader(open(tmp_path / "d.csv")))
    assert rows[0][-1] == "label" and len(rows) == 201


def test_train_evaluate_report(tmp_path, conn_log_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("n_trees: 3\nn_cascade_rf: 1\ncascade_layers: 2\n")
    out = tmp_path / "run"
    argv = ["train", "--input", str(conn_log_path), "--config", str(cfg), "--model", "deep-forest",
            "--sampling", "smote", "--seed", "1", "--out-dir", str(out), "--no-scan"]
    assert main(argv) == 0
    assert "Deep Forest" in capsys.readouterr().out
    for name in ("report.csv", "report.txt", "model.json", "manifest.json", "report_roc_auc.png", "cascade_layers.png"):
        assert (out / name).exists(), name
    assert main(["evaluate", "--model-path", str(out / "model.json"), "--input", str(conn_log_path),
                 "--out-dir", str(tmp_path / "ev")]) == 0
    assert (tmp_path / "ev" / "report.csv").exists()
    assert main(["report", "--report", str(out / "report.csv"), "--out-dir", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "report_recall.png").exists()


def test_sweep_cli(tmp_path, conn_log_path):
    argv = ["sweep", "--input", str(conn_log_path), "--models", "decision-tree,logreg",
            "--samplings", "none,smote", "--out-dir", str(tmp_path)]
    assert main(argv) == 0
    assert len((tmp_path / "report.csv").read_text().splitlines()) == 5


def test_rank_features_from_files(tmp_path, capsys):
    (tmp_path / "a.csv").write_text("feature,importance\nprotocol,0.6\nservice,0.1\nhour,0.3\n")
    (tmp_path / "b.csv").write_text("protocol,0.2\nhour,0.5\n")
    argv = ["rank-features", "--importances", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"),
            "--methods", "xgb,rf", "--top-k", "2", "--out-dir", str(tmp_path)]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "selected: hour,protocol" in out
    assert (tmp_path / "feature_ranking.csv").exists() and (tmp_path / "feature_ranking.png").exists()


def test_rank_features_computed(tmp_path, conn_log_path, capsys):
    argv = ["rank-features", "--input", str(conn_log_path), "--n-trees", "5", "--top-k", "4", "--out-dir", str(tmp_path)]
    assert main(argv) == 0
    assert (tmp_path / "importance_impurity.csv").exists()
    assert "selected:" in capsys.readouterr().out


def test_stage_failure_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.log"
    bad.write_text("garbage\n")
    assert main(["train", "--input", str(bad), "--model", "logreg", "--out-dir", str(tmp_path)]) == 2
    assert "stage 'ingest'" in capsys.readouterr().err


def test_synth(tmp_path):
    assert main(["synth", "--output", str(tmp_path / "s.log"), "--rows", "50"]) == 0
    assert (tmp_path / "s.log").read_text().count("\n") > 50
