"""End-to-end experiments: ingest, split, scale, resample, fit, evaluate, report."""

from __future__ import annotations

import hashlib
import json
import logging
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

import cascadeids
from cascadeids.baselines import fit_decision_tree, logreg_fit
from cascadeids.cascade import CascadeConfig, cascade_fit
from cascadeids.core import Dataset, class_counts, derive_seed, stratified_split, stratified_split_indices
from cascadeids.evaluation import MetricsReport, MetricsRow, build_report, evaluate_scores
from cascadeids.forests import TreeParams
from cascadeids.ingest import EncoderVocab, RobustScaler, encode, read_conn_log, read_dataset_csv
from cascadeids.persist import ModelArchive, atomic_write_text, digest, save_model
from cascadeids.resampling import STRATEGIES, ResampleConfig, resample
from cascadeids.scanning import scan_fit_transform

log = logging.getLogger(__name__)

MODELS = ("deep-forest", "decision-tree", "logreg")
MODEL_LABELS = {"deep-forest": "Deep Forest", "decision-tree": "Decision Tree", "logreg": "Logistic Regression"}
SAMPLING_LABELS = {"none": "Original", "smote": "SMOTE", "hybrid": "Hybrid Sampling", "smoteenn": "SMOTEENN"}


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineConfig:
    input: str = ""
    out_dir: str = "out"
    seed: int = 0
    test_fraction: float = 0.2
    valid_fraction: float = 0.2
    model: str = "deep-forest"
    # resampling
    sampling: str = "none"
    smote_k: int = 5
    enn_k: int = 3
    hybrid_target: int = 12000
    # decision tree (published settings)
    max_depth: int | None = 4
    min_samples_split: int = 10
    ccp_alpha: float = 0.01
    # logistic regression (published settings)
    l2_lambda: float = 1.0
    max_iter: int = 1000
    # deep forest (published settings)
    cascade_layers: int = 8
    n_cascade_rf: int = 8
    n_trees: int = 100
    cv_folds: int = 3
    early_stop_patience: int = 1
    scan: bool = True
    window: int = 2
    # optional feature subset, e.g. from rank-features
    features: list[str] | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.sampling not in STRATEGIES:
            raise ValueError(f"unknown sampling {self.sampling!r}; choose from {STRATEGIES}")
        if not 0 < self.test_fraction < 1 or not 0 < self.valid_fraction < 1:
            raise ValueError("split fractions must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """Hash of every setting that influences results (the output directory does not)."""
        d = self.to_dict()
        d.pop("out_dir")
        return digest(d)

    def resample_config(self) -> ResampleConfig:
        return ResampleConfig(self.sampling, self.smote_k, self.enn_k, self.hybrid_target, derive_seed(self.seed, 2))

    def cascade_config(self) -> CascadeConfig:
        return CascadeConfig(
            max_layers=self.cascade_layers,
            n_cascade_rf=self.n_cascade_rf,
            n_trees=self.n_trees,
            cv_folds=self.cv_folds,
            early_stop_patience=self.early_stop_patience,
            seed=derive_seed(self.seed, 3),
        )

    def tree_params(self) -> TreeParams:
        return TreeParams(self.max_depth, self.min_samples_split, self.ccp_alpha)

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a key-value mapping")
    return PipelineConfig.from_dict({k.replace("-", "_"): v for k, v in data.items()})


def dump_config(cfg: PipelineConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


@dataclass
class Provenance:
    """Row ids (indices into the ingested input) seen by each fitted component."""

    train_rows: np.ndarray
    test_rows: np.ndarray
    vocab_rows: np.ndarray | None
    scaler_rows: np.ndarray
    resampled_rows: np.ndarray
    valid_rows: np.ndarray | None = None


@dataclass
class ExperimentResult:
    config: PipelineConfig
    row: MetricsRow
    archive: ModelArchive
    provenance: Provenance
    counts: dict = field(default_factory=dict)

    @property
    def report(self) -> MetricsReport:
        return build_report([self.row])


def _stage(name):
    def wrap(fn):
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except Exception as exc:
                raise StageError(name, exc) from exc

        return inner

    return wrap


@_stage("ingest")
def _ingest(path: str):
    if str(path).lower().endswith(".csv"):
        return None, read_dataset_csv(path)
    parsed = read_conn_log(path)
    if not parsed.records:
        raise ValueError(f"{path}: no usable flow records")
    labels = np.array([r.label for r in parsed.records], dtype=np.int64)
    return parsed.records, labels


@_stage("split")
def _split(labels, cfg: PipelineConfig):
    return stratified_split_indices(labels, cfg.test_fraction, derive_seed(cfg.seed, 1))


@_stage("encode")
def _encode(records, train_idx, test_idx):
    vocab = EncoderVocab.fit(records[i] for i in train_idx)
    train = encode([records[i] for i in train_idx], vocab, row_ids=train_idx)
    test = encode([records[i] for i in test_idx], vocab, row_ids=test_idx)
    return vocab, train, test


@_stage("scale")
def _scale(train: Dataset, test: Dataset):
    scaler = RobustScaler.fit(train)
    return scaler, scaler.apply(train), scaler.apply(test)


@_stage("resample")
def _resample(train: Dataset, cfg: PipelineConfig) -> Dataset:
    return resample(train, cfg.resample_config())


@_stage("fit")
def _fit(train: Dataset, cfg: PipelineConfig):
    """Returns (model, validation row ids or None, resampled training set)."""
    if cfg.model == "decision-tree":
        fitted = _resample(train, cfg)
        return fit_decision_tree(fitted, cfg.tree_params(), seed=derive_seed(cfg.seed, 4)), None, fitted
    if cfg.model == "logreg":
        fitted = _resample(train, cfg)
        return logreg_fit(fitted, cfg.l2_lambda, cfg.max_iter, seed=derive_seed(cfg.seed, 4)), None, fitted
    # the cascade's validation rows are carved out before resampling so they stay real flows
    fit_part, valid = stratified_split(train, cfg.valid_fraction, derive_seed(cfg.seed, 5))
    fitted = _resample(fit_part, cfg)
    ccfg = cfg.cascade_config()
    if cfg.scan:
        scanner, base = scan_fit_transform(
            fitted, window=cfg.window, n_trees=cfg.n_trees, seed=derive_seed(cfg.seed, 6), cv_folds=cfg.cv_folds
        )
        model = cascade_fit(fitted, valid, ccfg, scanner=scanner, train_base=base)
    else:
        model = cascade_fit(fitted, valid, ccfg)
    model.fold_traces = []
    return model, valid.row_ids, fitted


def run_experiment(cfg: PipelineConfig) -> ExperimentResult:
    """Run one (model, sampling) experiment; the test split is never resampled."""
    records, payload = _ingest(cfg.input)
    if records is None:
        data: Dataset = payload
        train_idx, test_idx = _split(data.labels, cfg)
        vocab = None
        train, test = data.take(train_idx), data.take(test_idx)
    else:
        train_idx, test_idx = _split(payload, cfg)
        vocab, train, test = _encode(records, train_idx, test_idx)
    scaler, train_s, test_s = _scale(train, test)
    if cfg.features:
        try:
            train_s, test_s = train_s.select_columns(cfg.features), test_s.select_columns(cfg.features)
        except ValueError as exc:
            raise StageError("select", exc) from exc
    model, valid_rows, fitted = _fit(train_s, cfg)
    row = _evaluate(model, test_s, cfg)
    archive = ModelArchive(
        kind=cfg.model,
        model=model,
        vocab=vocab,
        scaler=scaler,
        feature_names=train_s.feature_names,
        metadata={
            "seed": cfg.seed,
            "config": cfg.to_dict(),
            "config_digest": cfg.digest(),
            "metrics": asdict(row),
            "package_version": cascadeids.__version__,
        },
    )
    prov = Provenance(
        train_rows=train.row_ids,
        test_rows=test.row_ids,
        vocab_rows=None if vocab is None else train.row_ids,
        scaler_rows=train.row_ids,
        resampled_rows=fitted.row_ids,
        valid_rows=valid_rows,
    )
    counts = {
        "train": class_counts(train),
        "test": class_counts(test),
        "fitted": class_counts(fitted),
    }
    return ExperimentResult(cfg, row, archive, prov, counts)


@_stage("evaluate")
def _evaluate(model, test: Dataset, cfg: PipelineConfig) -> MetricsRow:
    p = model.predict_proba(test.features)[:, 1]
    return evaluate_scores(MODEL_LABELS[cfg.model], SAMPLING_LABELS[cfg.sampling], test.labels, p)


def input_sha256(path) -> str | None:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return None


def manifest(configs: list[PipelineConfig], extra: dict | None = None) -> dict:
    import numba
    import scipy

    doc = {
        "package": "cascadeids",
        "package_version": cascadeids.__version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "input_sha256": input_sha256(configs[0].input) if configs else None,
        "experiments": [{"config": c.to_dict(), "config_digest": c.digest()} for c in configs],
    }
    if extra:
        doc.update(extra)
    return doc


def write_report(report: MetricsReport, out_dir, figures: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "report.csv", report.to_csv())
    atomic_write_text(out / "report.txt", report.to_text())
    written = [out / "report.csv", out / "report.txt"]
    if figures and report.rows:
        from cascadeids.plotting import plot_report

        written += plot_report(report, out)
    return written


def write_experiment(result: ExperimentResult, out_dir, figures: bool = True) -> dict[str, Path]:
    out = Path(out_dir)
    written = write_report(result.report, out, figures)
    model_path = out / "model.json"
    save_model(result.archive, model_path)
    extra = {"class_counts": {k: {str(c): n for c, n in v.items()} for k, v in result.counts.items()}}
    if result.config.model == "deep-forest":
        extra["valid_accuracy"] = result.archive.model.valid_accuracy
        extra["best_layer"] = result.archive.model.best_layer
        if figures:
            from cascadeids.plotting import plot_layer_accuracy

            written.append(plot_layer_accuracy(result.archive.model.valid_accuracy, out / "cascade_layers.png"))
    atomic_write_text(out / "manifest.json", json.dumps(manifest([result.config], extra), indent=2, sort_keys=True) + "\n")
    return {"report": out / "report.csv", "model": model_path, "manifest": out / "manifest.json", "files": written}


def _run_one(cfg: PipelineConfig) -> ExperimentResult:
    return run_experiment(cfg)


def sweep(base: PipelineConfig, models=MODELS, samplings=STRATEGIES, workers: int = 1, save_models: bool = True):
    """Run the models x samplings grid and write a combined report."""
    configs = [replace(base, model=m, sampling=s) for m in models for s in samplings]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, configs))
    else:
        results = [_run_one(c) for c in configs]
    report = build_report([r.row for r in results])
    out = Path(base.out_dir)
    write_report(report, out)
    if save_models:
        for r in results:
            save_model(r.archive, out / "models" / f"{r.config.model}_{r.config.sampling}.json")
    atomic_write_text(out / "manifest.json", json.dumps(manifest(configs), indent=2, sort_keys=True) + "\n")
    return report, results


def evaluate_archive(archive: ModelArchive, input_path, sampling_label: str = "Original") -> MetricsRow:
    """Score every flow in ``input_path`` with a saved model."""
    records, payload = _ingest(input_path)
    if records is None:
        ds = payload
    else:
        if archive.vocab is None:
            raise StageError("encode", ValueError("archive has no vocabulary; evaluate it on an encoded CSV"))
        ds = encode(records, archive.vocab)
    if archive.scaler is not None:
        ds = archive.scaler.apply(ds)
    if archive.feature_names and ds.feature_names != archive.feature_names:
        ds = ds.select_columns(archive.feature_names)
    p = archive.model.predict_proba(ds.features)[:, 1]
    return evaluate_scores(MODEL_LABELS.get(archive.kind, archive.kind), sampling_label, ds.labels, p)
