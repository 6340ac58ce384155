"""Command-line driver: fit, score, eval, filter, sweep.

Runtime errors exit nonzero after printing a single ``lgsqe: error: ...``
line to stderr. Stage timings go to stderr as well; they never enter output
files, which stay byte-reproducible for a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from .datasets import ImageSet, load_images, save_raw_tensor
from .dft import write_ranking_csv
from .errors import LgsqeError
from .evaluate import filter_samples, histogram_svg, write_scores_csv
from .gbdt import GbdtParams
from .pipeline import (
    PipelineModel,
    RunConfig,
    fit_pipeline,
    holdout_split,
    matches_training_data,
    parse_config_file,
)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline configuration")
    group.add_argument("--config", help="key=value config file; explicit flags override it")
    group.add_argument("--patch-size", type=int, help="patch side length F")
    group.add_argument("--stride", type=int, help="patch stride S")
    group.add_argument("--channels", type=int, help="expected channel count C (validated against the data)")
    group.add_argument("--energy-threshold", type=float, help="cumulative-energy fraction for kept kernels")
    group.add_argument("--k1", type=int, help="explicit first-hop channel count (overrides the energy rule)")
    group.add_argument("--cw-k", type=int, help="explicit per-channel spectral component count")
    group.add_argument("--num-bins", type=int, help="number of uniform bins for the feature test")
    group.add_argument("--top-k", type=int, help="how many discriminant features to keep")
    group.add_argument("--elbow", action="store_true", help="select features at the loss-curve elbow instead of top-k")
    group.add_argument("--threshold", type=float, help="decision threshold t on the soft score")
    group.add_argument("--histogram-bins", type=int, help="score histogram bin count")
    group.add_argument("--test-fraction", type=float, help="held-out fraction per source")
    group.add_argument("--real-fraction", type=float, help="fraction of real training samples used")
    group.add_argument("--seed", type=int, help="master seed")
    group.add_argument("--rounds", type=int, help="boosting rounds")
    group.add_argument("--max-depth", type=int, help="tree depth limit")
    group.add_argument("--learning-rate", type=float, help="boosting learning rate")
    group.add_argument("--reg-lambda", type=float, help="L2 leaf regularization")
    group.add_argument("--min-samples-leaf", type=int, help="minimum samples per leaf")
    group.add_argument("--subsample", type=float, help="per-round row subsample fraction")


_FLAG_TO_CONFIG = {
    "patch_size": "patch_size",
    "stride": "stride",
    "channels": "channels",
    "energy_threshold": "energy_threshold",
    "k1": "k1",
    "cw_k": "cw_k",
    "num_bins": "num_bins",
    "top_k": "top_k",
    "threshold": "threshold",
    "histogram_bins": "histogram_bins",
    "test_fraction": "test_fraction",
    "real_fraction": "real_fraction",
    "seed": "seed",
}
_FLAG_TO_GBDT = {
    "rounds": "n_rounds",
    "max_depth": "max_depth",
    "learning_rate": "learning_rate",
    "reg_lambda": "reg_lambda",
    "min_samples_leaf": "min_samples_leaf",
    "subsample": "subsample",
}


def _build_config(args: argparse.Namespace) -> RunConfig:
    doc = RunConfig().to_dict()
    if getattr(args, "config", None):
        doc.update(parse_config_file(args.config))
    for flag, key in _FLAG_TO_CONFIG.items():
        value = getattr(args, flag, None)
        if value is not None:
            doc[key] = value
    for flag, key in _FLAG_TO_GBDT.items():
        value = getattr(args, flag, None)
        if value is not None:
            doc[f"gbdt_{key}"] = value
    if getattr(args, "elbow", False):
        doc["select_mode"] = "elbow"
    config = RunConfig.from_dict(doc)
    config.validate()
    return config


def _load_source(path: str, fmt: str, provenance: str) -> ImageSet:
    return load_images(path, fmt=fmt, provenance=provenance)


def cmd_fit(args) -> int:
    config = _build_config(args)
    real = _load_source(args.real, args.real_format, "real")
    generated = _load_source(args.generated, args.generated_format, "generated")
    model, timings = fit_pipeline(real, generated, config)
    model.save(args.out)
    if args.ranking_csv:
        write_ranking_csv(model.ranking, args.ranking_csv)
    print(f"representation width: {model.training['representation_width']}")
    print(f"selected features: {model.training['selected_count']}")
    print(f"train accuracy: {model.training['train_accuracy']:.4f} (threshold {config.threshold})")
    if model.training["final_train_loss"] is not None:
        print(f"final train loss: {model.training['final_train_loss']:.6f}")
    print(f"model written to {args.out}")
    for stage, seconds in timings.items():
        _log(f"[timing] {stage}: {seconds:.2f}s")
    return 0


def cmd_score(args) -> int:
    model = PipelineModel.load(args.model)
    samples = load_images(args.samples, fmt=args.format)
    scores = model.score_images(samples)
    ids = np.arange(samples.count)
    provenance = [samples.provenance] * samples.count
    write_scores_csv(args.out, ids, provenance, scores)
    print(f"scored {samples.count} samples -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    model = PipelineModel.load(args.model)
    real = _load_source(args.real, args.real_format, "real")
    generated = _load_source(args.generated, args.generated_format, "generated")

    use = args.use
    if use == "auto":
        use = "holdout" if matches_training_data(model, real, generated) else "all"
    if use == "holdout":
        if not matches_training_data(model, real, generated):
            raise LgsqeError("--use holdout requires the exact files the model was fitted on")
        split = holdout_split(model, real, generated)
        real_eval, gen_eval = split.test_real, split.test_generated
    else:
        real_eval, gen_eval = real, generated

    report = model.evaluate(
        real_eval,
        gen_eval,
        threshold=args.threshold,
        bins=args.histogram_bins,
        metadata={
            "evaluated_on": use,
            "eval_counts": {"real": real_eval.count, "generated": gen_eval.count},
            "fingerprints": model.training["fingerprints"],
        },
    )
    with open(args.out, "w") as fh:
        fh.write(report.to_json())
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(histogram_svg(report.histogram))
    precision = "n/a" if report.precision is None else f"{report.precision:.4f}"
    recall = "n/a" if report.recall is None else f"{report.recall:.4f}"
    print(f"evaluated on: {use} ({real_eval.count} real + {gen_eval.count} generated)")
    print(f"accuracy: {report.accuracy:.4f}  precision: {precision}  recall: {recall}")
    print(f"pr_auc: {report.pr_auc:.4f}  roc_auc: {report.roc_auc:.4f}")
    print(f"report written to {args.out}")
    return 0


def cmd_filter(args) -> int:
    model = PipelineModel.load(args.model)
    samples = load_images(args.samples, fmt=args.format, provenance="generated")
    scores = model.score_images(samples)
    ids = np.arange(samples.count)
    kept = filter_samples(ids, scores, args.keep_fraction)
    save_raw_tensor(samples.subset(kept), args.out)
    with open(args.ids_out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "score"])
        for sid in kept:
            writer.writerow([int(sid), f"{scores[sid]:.6f}"])
    print(f"kept {kept.size} of {samples.count} samples -> {args.out}")
    return 0


def cmd_sweep(args) -> int:
    if not args.fractions:
        raise LgsqeError("at least one real-sample fraction is required")
    config = _build_config(args)
    real = _load_source(args.real, args.real_format, "real")
    generated = _load_source(args.generated, args.generated_format, "generated")
    rows = []
    for fraction in args.fractions:
        run_config = replace(config, real_fraction=fraction)
        model, _ = fit_pipeline(real, generated, run_config)
        split = holdout_split(model, real, generated)
        report = model.evaluate(split.test_real, split.test_generated)
        rows.append((fraction, model.training["train_counts"]["real"], report.accuracy))
        print(f"real_fraction={fraction:g}: test accuracy {report.accuracy:.4f}")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["real_fraction", "real_train_count", "accuracy"])
        for fraction, count, acc in rows:
            writer.writerow([f"{fraction:g}", count, repr(acc)])
    print(f"sweep written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lgsqe",
        description="Quality scores for generated images via a real-vs-generated classifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="train a pipeline on a real and a generated source")
    p_fit.add_argument("real", help="real image file (idx/cifar/lgt)")
    p_fit.add_argument("generated", help="generated image file")
    p_fit.add_argument("-o", "--out", required=True, help="output model JSON path")
    p_fit.add_argument("--real-format", default="auto", choices=["auto", "idx", "cifar", "lgt"])
    p_fit.add_argument("--generated-format", default="auto", choices=["auto", "idx", "cifar", "lgt"])
    p_fit.add_argument("--ranking-csv", help="also export the feature ranking as CSV")
    _add_config_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_score = sub.add_parser("score", help="score samples with a fitted model")
    p_score.add_argument("model")
    p_score.add_argument("samples")
    p_score.add_argument("-o", "--out", required=True, help="output scores CSV path")
    p_score.add_argument("--format", default="auto", choices=["auto", "idx", "cifar", "lgt"])
    p_score.set_defaults(func=cmd_score)

    p_eval = sub.add_parser("eval", help="aggregate model-level metrics on test data")
    p_eval.add_argument("model")
    p_eval.add_argument("real")
    p_eval.add_argument("generated")
    p_eval.add_argument("-o", "--out", required=True, help="output report JSON path")
    p_eval.add_argument("--real-format", default="auto", choices=["auto", "idx", "cifar", "lgt"])
    p_eval.add_argument("--generated-format", default="auto", choices=["auto", "idx", "cifar", "lgt"])
    p_eval.add_argument(
        "--use",
        default="auto",
        choices=["auto", "holdout", "all"],
        help="evaluate on the recorded holdout split (when the files match training) or on all samples",
    )
    p_eval.add_argument("--threshold", type=float, help="decision threshold t")
    p_eval.add_argument("--histogram-bins", type=int)
    p_eval.add_argument("--svg", help="also write a histogram SVG here")
    p_eval.set_defaults(func=cmd_eval)

    p_filter = sub.add_parser("filter", help="keep the most realistic generated samples")
    p_filter.add_argument("model")
    p_filter.add_argument("samples")
    p_filter.add_argument("-o", "--out", required=True, help="output LGT path for kept samples")
    p_filter.add_argument("--ids-out", required=True, help="output CSV of kept sample ids")
    p_filter.add_argument("--keep-fraction", type=float, required=True)
    p_filter.add_argument("--format", default="auto", choices=["auto", "idx", "cifar", "lgt"])
    p_filter.set_defaults(func=cmd_filter)

    p_sweep = sub.add_parser("sweep", help="refit over a grid of real-sample fractions")
    p_sweep.add_argument("real")
    p_sweep.add_argument("generated")
    p_sweep.add_argument("-o", "--out", required=True, help="output CSV path")
    p_sweep.add_argument("--fractions", type=float, nargs="+", required=True)
    p_sweep.add_argument("--real-format", default="auto", choices=["auto", "idx", "cifar", "lgt"])
    p_sweep.add_argument("--generated-format", default="auto", choices=["auto", "idx", "cifar", "lgt"])
    _add_config_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LgsqeError, ValueError, OSError) as exc:
        print(f"lgsqe: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
