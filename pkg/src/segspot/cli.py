"""Command line interface; exit codes: 0 ok, 1 usage error, 2 data error."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import analysis, dataset_io, metrics, runner, synthetic
from .analysis import FusionWeights
from .core import query_set
from .runner import ConfigError, DataError, Experiment, ExperimentConfig


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", help="experiment config file "
                                    f"(default: ${runner.CONFIG_ENV_VAR})")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--workers", type=int, help="override the config worker count")
    p.add_argument("--output", help="override the config output directory")
    p.add_argument("--levels", help="override levels, e.g. 0.2,0.5,1.0 or 0.01:1.0:0.01")
    p.add_argument("--methods", help="comma list from: " + ",".join(runner.RETRIEVAL_METHODS))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="segspot",
                     description="Quantify how segmentation quality affects "
                                 "query-by-example word spotting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="validate the dataset and print partition counts")
    _add_common(p)
    p.add_argument("--make-synthetic", metavar="DIR",
                   help="write the bundled synthetic dataset (and a config) to DIR first")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("distort", help="write distorted retrieval databases per level")
    _add_common(p)
    p.set_defaults(func=cmd_distort)

    p = sub.add_parser("extract", help="populate the descriptor/profile caches")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("retrieve", help="write distance matrices per (level, method)")
    _add_common(p)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("evaluate", help="run the distortion sweep and write metric reports")
    _add_common(p)
    p.add_argument("--import", dest="imports", action="append", default=[],
                   metavar="NAME=PATH", help="register an external distance matrix")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("independence", help="footrule and easy/hard-correlation matrices")
    _add_common(p)
    p.add_argument("--level", type=float, default=1.0)
    p.add_argument("--with-random", action="store_true",
                   help="add a random-retrieval context column")
    p.add_argument("--import", dest="imports", action="append", default=[],
                   metavar="NAME=PATH")
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser("fuse", help="late fusion of two or more methods")
    _add_common(p)
    p.add_argument("--weights", help="comma list summing to 1; omitted = grid search on train")
    p.add_argument("--import", dest="imports", action="append", default=[],
                   metavar="NAME=PATH")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("segquality", help="profile a proposed segmentation against ground truth")
    _add_common(p)
    p.add_argument("--proposals", required=True,
                   help="proposed boxes in the ground-truth format (transcription optional)")
    p.set_defaults(func=cmd_segquality)

    p = sub.add_parser("report", help="combine per-cell reports and render metric curves")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def _load_config(args) -> ExperimentConfig:
    path = args.config or os.environ.get(runner.CONFIG_ENV_VAR)
    if not path:
        raise ConfigError(f"no config given (use --config or ${runner.CONFIG_ENV_VAR})")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.output is not None:
        overrides["output"] = Path(args.output)
    if getattr(args, "levels", None):
        overrides["levels"] = runner.parse_levels(args.levels)
    if getattr(args, "methods", None):
        overrides["methods"] = tuple(t.strip() for t in args.methods.split(",") if t.strip())
    return ExperimentConfig.from_file(path, **overrides)


def _parse_imports(exp: Experiment, pairs) -> dict[str, metrics.DistanceMatrix]:
    imports = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--import expects NAME=PATH, got {pair!r}")
        name, _, path = pair.partition("=")
        imports[name] = runner.import_external_matrix(path, exp.query_ids, exp.test_ids)
    return imports


def cmd_prepare(args) -> int:
    if args.make_synthetic:
        target = Path(args.make_synthetic)
        dataset = synthetic.build_dataset()
        gt_path, pages_dir = synthetic.write_dataset(target, dataset)
        config = ExperimentConfig(dataset_name=dataset.name, ground_truth=gt_path,
                                  pages_dir=pages_dir, output=target / "out",
                                  seed=args.seed if args.seed is not None else 7,
                                  levels=runner.parse_levels(args.levels) if args.levels
                                  else (0.2, 0.3, 0.9, 1.0),
                                  methods=tuple(t.strip() for t in args.methods.split(","))
                                  if args.methods else runner.RETRIEVAL_METHODS)
        runner.write_config_file(target / "config.ini", config)
        print(f"synthetic dataset written to {target} (config: {target / 'config.ini'})")
        args.config = str(target / "config.ini")
    exp = Experiment(_load_config(args))
    ds = exp.dataset
    print(f"dataset: {ds.name}")
    print(f"{'partition':<10}{'pages':>7}{'words':>7}{'unique':>8}{'queries':>9}")
    for name, ids in (("train", exp.train_ids), ("test", exp.test_ids)):
        samples = [ds.sample(i) for i in ids]
        pages = {s.page_id for s in samples}
        unique = {s.transcription.casefold() for s in samples}
        queries = query_set(samples)
        print(f"{name:<10}{len(pages):>7}{len(samples):>7}{len(unique):>8}{len(queries):>9}")
    return 0


def cmd_distort(args) -> int:
    exp = Experiment(_load_config(args))
    exp.config.output.mkdir(parents=True, exist_ok=True)
    test_samples = [exp.dataset.sample(i) for i in exp.test_ids]
    for level in exp.config.levels:
        db = exp.distorted_database(level)
        path = exp.config.output / f"distorted_{runner.level_tag(level)}.tsv"
        dataset_io.write_distorted_boxes(path, test_samples, db.boxes, db.achieved_iou,
                                         level, exp.config.seed)
        print(f"wrote {path}")
    return 0


def cmd_extract(args) -> int:
    exp = Experiment(_load_config(args))
    for method in exp.config.methods:
        exp.query_representations(method)
        for level in exp.config.levels:
            db = exp.distorted_database(level)
            exp.representations(method, exp.test_ids, db.boxes, runner.level_tag(level))
            print(f"cached {method} at level {level}")
    return 0


def cmd_retrieve(args) -> int:
    exp = Experiment(_load_config(args))
    exp.config.output.mkdir(parents=True, exist_ok=True)
    for level in exp.config.levels:
        for method in exp.config.methods:
            path = exp.matrix_path(method, level)
            if path.is_file():
                print(f"skip existing {path}")
                continue
            metrics.write_distance_matrix(path, exp.matrix(method, level))
            print(f"wrote {path}")
    return 0


def cmd_evaluate(args) -> int:
    exp = Experiment(_load_config(args))
    imports = _parse_imports(exp, args.imports)
    written = exp.run_sweep(imports=imports)
    print(f"{len(written)} report files under {exp.config.output}")
    return 0


def cmd_independence(args) -> int:
    exp = Experiment(_load_config(args))
    level = args.level
    matrices = {m: exp.matrix(m, level) for m in exp.config.methods}
    matrices.update(_parse_imports(exp, args.imports))
    if args.with_random:
        matrices["random"] = exp.random_matrix(level)
    names = list(matrices)
    rankings = {m: metrics.rank(matrices[m], suppress_diagonal=True) for m in names}
    aps = {m: metrics.per_query_average_precision(matrices[m], exp.transcriptions)
           for m in names}
    labels = {m: analysis.easy_hard_labels([aps[m][q] for q in exp.query_ids]) for m in names}
    n = len(names)
    footrule = [[analysis.spearman_footrule(rankings[a], rankings[b]) for b in names]
                for a in names]
    correlation = [[analysis.label_correlation(labels[a], labels[b]) for b in names]
                   for a in names]
    exp.config.output.mkdir(parents=True, exist_ok=True)
    foot_path = exp.config.output / "independence_footrule.csv"
    corr_path = exp.config.output / "independence_correlation.csv"
    analysis.write_independence_matrix(foot_path, names, footrule)
    analysis.write_independence_matrix(corr_path, names, correlation)
    print(f"wrote {foot_path} and {corr_path} ({n} methods at level {level})")
    return 0


def cmd_fuse(args) -> int:
    exp = Experiment(_load_config(args))
    methods = list(exp.config.methods if not args.methods
                   else (t.strip() for t in args.methods.split(",")))
    imports = _parse_imports(exp, args.imports)
    if len(methods) + len(imports) < 2:
        raise ConfigError("fusion needs at least 2 methods")
    names = methods + list(imports)
    if args.weights:
        weights = FusionWeights(tuple(float(t) for t in args.weights.split(",")))
    else:
        if imports:
            raise ConfigError("weight search runs on the train split; imported matrices "
                              "cover the test split, pass --weights explicitly")
        train = [exp.train_matrix(m) for m in methods]
        weights = analysis.weight_search(train, exp.transcriptions)
        print("train-split weights: "
              + ", ".join(f"{m}={w:g}" for m, w in zip(names, weights.values)))
    fused_name = runner.fusion_method_name(names)
    exp.config.output.mkdir(parents=True, exist_ok=True)
    for level in exp.config.levels:
        parts = [exp.matrix(m, level) if m in methods else imports[m] for m in names]
        fused = analysis.fuse_distances(parts, weights)
        records = metrics.mean_metrics(fused, exp.transcriptions, level, fused_name)
        path = exp.report_path(fused_name, level)
        metrics.write_report(path, records)
        print(f"wrote {path}")
    return 0


def cmd_segquality(args) -> int:
    exp = Experiment(_load_config(args))
    try:
        proposals = dataset_io.read_boxes(args.proposals)
    except dataset_io.DataFormatError as exc:
        raise DataError(str(exc)) from exc
    gt_boxes: dict[str, list] = {}
    for s in exp.dataset.samples:
        gt_boxes.setdefault(s.page_id, []).append(s.box)
    prop_boxes: dict[str, list] = {}
    for page_id, box in proposals:
        prop_boxes.setdefault(page_id, []).append(box)
    profile = analysis.segmentation_quality(gt_boxes, prop_boxes)
    exp.config.output.mkdir(parents=True, exist_ok=True)
    summary = exp.config.output / "segquality_summary.csv"
    maxima = exp.config.output / "segquality_maxima.csv"
    analysis.write_segquality(summary, maxima, profile)
    if profile.gt_stats:
        print(f"ground-truth best IoU: median {profile.gt_stats.median:.3f}, "
              f"mean {profile.gt_stats.mean:.3f}")
    print(f"wrote {summary} and {maxima}")
    return 0


def cmd_report(args) -> int:
    exp = Experiment(_load_config(args))
    combined = runner.write_combined_report(exp.config.output)
    records = metrics.read_report(combined)
    figures = runner.render_report_figures(records, exp.config.output)
    print(f"wrote {combined}")
    for fig in figures:
        print(f"wrote {fig}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"segspot: {exc}", file=sys.stderr)
        return 1
    except (DataError, dataset_io.DataFormatError) as exc:
        print(f"segspot: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
