"""Command-line entry point: ``cascadeids <subcommand>``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from cascadeids.pipeline import MODELS, PipelineConfig, StageError, load_config
from cascadeids.resampling import STRATEGIES

log = logging.getLogger("cascadeids")


def _add_common(p: argparse.ArgumentParser, model: bool = True) -> None:
    p.add_argument("--input", help="labeled conn.log or encoded dataset CSV")
    p.add_argument("--config", help="YAML key-value config; flags override it")
    if model:
        p.add_argument("--model", choices=MODELS)
    p.add_argument("--sampling", choices=STRATEGIES)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--scan", action=argparse.BooleanOptionalAction, default=None, help="multi-grained scanning")
    p.add_argument("--window", type=int)
    p.add_argument("--features", help="comma-separated feature subset, e.g. from rank-features")


def _config_from(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    for key in ("input", "model", "sampling", "seed", "out_dir", "scan", "window"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "features", None):
        overrides["features"] = [f.strip() for f in args.features.split(",") if f.strip()]
    cfg = replace(cfg, **overrides)
    if not cfg.input:
        raise SystemExit("error: --input (or 'input' in the config) is required")
    if not Path(cfg.input).exists():
        raise SystemExit(f"error: input {cfg.input} does not exist")
    return cfg


def cmd_ingest(args) -> int:
    from cascadeids.ingest import EncoderVocab, encode, read_conn_log, write_dataset_csv

    parsed = read_conn_log(args.input)
    vocab = EncoderVocab.fit(parsed.records)
    ds = encode(parsed.records, vocab)
    write_dataset_csv(ds, args.output)
    print(f"{len(parsed.records)} flows written to {args.output} ({parsed.skipped} malformed lines skipped)")
    return 0


def cmd_train(args) -> int:
    from cascadeids.pipeline import run_experiment, write_experiment

    cfg = _config_from(args)
    result = run_experiment(cfg)
    paths = write_experiment(result, cfg.out_dir, figures=not args.no_figures)
    print(result.report.to_text(), end="")
    print(f"model archive: {paths['model']}")
    return 0


def cmd_sweep(args) -> int:
    from cascadeids.pipeline import sweep

    cfg = _config_from(args)
    models = args.models.split(",") if args.models else list(MODELS)
    samplings = args.samplings.split(",") if args.samplings else list(STRATEGIES)
    for m in models:
        if m not in MODELS:
            raise SystemExit(f"error: unknown model {m!r}")
    for s in samplings:
        if s not in STRATEGIES:
            raise SystemExit(f"error: unknown sampling {s!r}")
    report, _ = sweep(cfg, models, samplings, workers=args.workers)
    print(report.to_text(), end="")
    return 0


def cmd_evaluate(args) -> int:
    from cascadeids.evaluation import build_report
    from cascadeids.persist import load_model
    from cascadeids.pipeline import evaluate_archive, write_report

    archive = load_model(args.model_path)
    sampling = archive.metadata.get("config", {}).get("sampling", "none")
    from cascadeids.pipeline import SAMPLING_LABELS

    row = evaluate_archive(archive, args.input, SAMPLING_LABELS.get(sampling, sampling))
    report = build_report([row])
    if args.out_dir:
        write_report(report, args.out_dir)
    print(report.to_text(), end="")
    return 0


def cmd_report(args) -> int:
    from cascadeids.evaluation import MetricsReport, build_report
    from cascadeids.pipeline import write_report

    report = build_report(MetricsReport.from_csv(Path(args.report).read_text(encoding="utf-8")).rows)
    write_report(report, args.out_dir or Path(args.report).parent)
    print(report.to_text(), end="")
    return 0


def cmd_rank_features(args) -> int:
    from cascadeids.featrank import (
        fuse_ranks,
        fused_to_csv,
        rank_importances,
        read_importances_csv,
        select_top_k,
        write_importances_csv,
    )
    from cascadeids.plotting import plot_feature_ranks

    out = Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    if args.importances:
        if len(args.importances) < 2:
            raise SystemExit("error: rank fusion needs at least two importance files")
        names = args.methods.split(",") if args.methods else [Path(p).stem for p in args.importances]
        sources = {name: read_importances_csv(p) for name, p in zip(names, args.importances)}
    elif args.input:
        sources = _computed_importances(args)
        for name, imp in sources.items():
            write_importances_csv(imp, out / f"importance_{name}.csv")
    else:
        raise SystemExit("error: give --importances FILE FILE ... or --input to compute them")
    rankings = [rank_importances(imp, name) for name, imp in sources.items()]
    fused = fuse_ranks(rankings)
    fused_to_csv(fused, rankings, out / "feature_ranking.csv")
    plot_feature_ranks(fused, out / "feature_ranking.png", top_k=args.top_k)
    k = min(args.top_k, len(fused.entries))
    for e in fused.entries[:k]:
        print(f"{e.final_rank:>3}  {e.feature:<24} mean rank {e.mean_rank:g}  ranks {e.method_ranks}")
    print("selected:", ",".join(select_top_k(fused, k)))
    return 0


def _computed_importances(args) -> dict[str, dict[str, float]]:
    from cascadeids.core import derive_seed, stratified_split
    from cascadeids.forests import forest_fit, impurity_importance, permutation_importance
    from cascadeids.ingest import EncoderVocab, RobustScaler, encode, read_conn_log, read_dataset_csv

    seed = args.seed or 0
    if args.input.lower().endswith(".csv"):
        ds = read_dataset_csv(args.input)
    else:
        records = read_conn_log(args.input).records
        ds = encode(records, EncoderVocab.fit(records))
    train, held = stratified_split(ds, 0.2, derive_seed(seed, 1))
    scaler = RobustScaler.fit(train)
    train, held = scaler.apply(train), scaler.apply(held)
    forest = forest_fit(train, "random", n_trees=args.n_trees, seed=derive_seed(seed, 7))
    return {
        "impurity": impurity_importance(forest),
        "permutation": permutation_importance(forest, held, seed=derive_seed(seed, 8)),
    }


def cmd_synth(args) -> int:
    from cascadeids.synthetic import make_conn_log

    Path(args.output).write_text(make_conn_log(args.rows, args.malicious_fraction, args.seed), encoding="utf-8")
    print(f"wrote {args.rows} synthetic flows to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascadeids", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a conn.log and export the encoded dataset CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="run one experiment and save report, model archive and manifest")
    _add_common(p)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run the models x samplings grid")
    _add_common(p, model=False)
    p.add_argument("--models", help=f"comma-separated subset of {','.join(MODELS)}")
    p.add_argument("--samplings", help=f"comma-separated subset of {','.join(STRATEGIES)}")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("evaluate", help="score a labeled input with a saved model archive")
    p.add_argument("--model-path", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="re-render report.txt and figures from report.csv")
    p.add_argument("--report", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rank-features", help="fuse importance rankings into a selected feature subset")
    p.add_argument("--importances", nargs="+", help="feature,importance CSV files, one per method")
    p.add_argument("--methods", help="comma-separated method names for --importances")
    p.add_argument("--input", help="compute forest impurity and permutation importances from this input")
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_rank_features)

    p = sub.add_parser("synth", help="write a synthetic labeled conn.log")
    p.add_argument("--output", required=True)
    p.add_argument("--rows", type=int, default=200)
    p.add_argument("--malicious-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
