"""
Command-line front end.

    region-synth gen-data  --out DIR
    region-synth train     --data-dir DIR --out DIR [--ablation]
    region-synth eval      --checkpoint FILE --data-dir DIR --out DIR [--mode zsd|gzsd]
    region-synth gradcheck [--instances N]
    region-synth ablate    --data-dir DIR --out DIR [--variants b,b+Sd,...]

Every command also takes --config FILE, --seed N and repeated --set key=value.
Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric failure.
"""

import argparse
import os
import sys
from collections.abc import Sequence

from region_synth.data import (
    Benchmark,
    BenchmarkConfig,
    EvalMode,
    TrainConfig,
    generate_benchmark,
    load_benchmark,
    save_benchmark,
)
from region_synth.errors import ConfigError, RegionSynthError
from region_synth.model import load_checkpoint, save_checkpoint
from region_synth.pipeline import (
    evaluate,
    export_features,
    format_summary,
    parse_variants,
    run_ablation,
    run_gradcheck_suite,
    run_pipeline,
    synthesize_unseen,
    write_ablation_csv,
    write_report_csv,
    write_training_log,
)
from region_synth.utils import ExperimentLogger, flatten_config, load_config

CHECKPOINT_FILE = "checkpoint.pt"
TRAIN_LOG_FILE = "train_log.csv"
RUN_CONFIG_FILE = "run_config.txt"
REPORT_FILE = "report.csv"
SUMMARY_FILE = "summary.txt"
ABLATION_FILE = "ablation.csv"

EXIT_USAGE = 1
EXIT_DATA = 2


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser, out_required: bool = True) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="sets data.seed and train.seed")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="config override, repeatable")
    parser.add_argument("--out", required=out_required, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="region-synth", description="Region-feature synthesizer for zero-shot detection.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    gen = commands.add_parser("gen-data", help="write a synthetic benchmark")
    _common(gen)

    train = commands.add_parser("train", help="train classifiers and the synthesizer")
    _common(train)
    train.add_argument("--data-dir", help="benchmark directory (generated from the config when omitted)")
    train.add_argument("--ablation", action="store_true", help="also run the ablation variants")

    ev = commands.add_parser("eval", help="evaluate a checkpoint and export features")
    _common(ev)
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--data-dir", required=True)
    ev.add_argument("--mode", choices=[m.value for m in EvalMode], help="defaults to eval.mode")

    gc = commands.add_parser("gradcheck", help="finite-difference audit of all gradients")
    _common(gc, out_required=False)
    gc.add_argument("--instances", type=int, default=20)

    ab = commands.add_parser("ablate", help="train and evaluate the ablation variants")
    _common(ab)
    ab.add_argument("--data-dir", help="benchmark directory (generated from the config when omitted)")
    ab.add_argument("--variants", help="comma-separated, defaults to eval.ablation_variants")
    return parser


def _load_run_config(args: argparse.Namespace):
    overrides = list(args.set)
    if args.seed is not None:
        overrides = [f"data.seed={args.seed}", f"train.seed={args.seed}"] + overrides
    return load_config(args.config, overrides)


def _benchmark(args: argparse.Namespace, config, logger) -> Benchmark:
    if args.data_dir:
        return load_benchmark(args.data_dir)
    logger.info("no --data-dir given; generating the benchmark from the config")
    return generate_benchmark(BenchmarkConfig.from_config(config))


def _write_run_config(config, path: str) -> None:
    flat = flatten_config(config)
    with open(path, "w") as f:
        for key in sorted(flat):
            f.write(f"{key}={flat[key]}\n")


def _ablation(benchmark: Benchmark, config, variants: str | None, out: str, logger) -> None:
    cfg = TrainConfig.from_config(config)
    rows = run_ablation(
        benchmark,
        cfg,
        parse_variants(variants or config.eval.ablation_variants),
        seeds=[cfg.seed + k for k in range(config.eval.ablation_seeds)],
        logger=logger,
        max_workers=config.experiment_setup.max_workers,
    )
    write_ablation_csv(rows, os.path.join(out, ABLATION_FILE))
    logger.info(f"ablation table written to {os.path.join(out, ABLATION_FILE)}")


def cmd_gen_data(args: argparse.Namespace, config, logger) -> int:
    benchmark = generate_benchmark(BenchmarkConfig.from_config(config))
    manifest = save_benchmark(benchmark, args.out, settings=dict(config.data))
    logger.info(f"benchmark written to {args.out}: {', '.join(manifest['files'])}")
    return 0


def cmd_train(args: argparse.Namespace, config, logger) -> int:
    cfg = TrainConfig.from_config(config)
    benchmark = _benchmark(args, config, logger)
    os.makedirs(args.out, exist_ok=True)
    result = run_pipeline(benchmark, cfg, logger)
    save_checkpoint(os.path.join(args.out, CHECKPOINT_FILE), result.params, cfg.dims, cfg.seed)
    write_training_log(result.log, os.path.join(args.out, TRAIN_LOG_FILE))
    _write_run_config(config, os.path.join(args.out, RUN_CONFIG_FILE))
    logger.info(f"checkpoint and training log written to {args.out}")
    if args.ablation:
        _ablation(benchmark, config, None, args.out, logger)
    return 0


def cmd_eval(args: argparse.Namespace, config, logger) -> int:
    mode = EvalMode.parse(args.mode or config.eval.mode)
    params, header = load_checkpoint(args.checkpoint)
    benchmark = load_benchmark(args.data_dir)
    if benchmark.d_f != params.seen_classifier.d_f:
        raise ConfigError(
            f"checkpoint expects d_f={params.seen_classifier.d_f}, benchmark has d_f={benchmark.d_f}"
        )
    os.makedirs(args.out, exist_ok=True)
    report = evaluate(params.merged(), benchmark, mode)
    write_report_csv(report, os.path.join(args.out, REPORT_FILE))

    synthesized = synthesize_unseen(
        params.generator,
        benchmark.semantic_vectors(benchmark.unseen_ids),
        config.train.synth_per_class,
        seed=header["seed"] + 2,
    )
    export = export_features(args.out, synthesized, benchmark.unseen_test)
    summary = format_summary(report) + f"pca explained variance (2 components): {export.explained_variance_ratio:.4f}\n"
    with open(os.path.join(args.out, SUMMARY_FILE), "w") as f:
        f.write(summary)
    sys.stdout.write(summary)
    return 0


def cmd_gradcheck(args: argparse.Namespace, config, logger) -> int:
    report = run_gradcheck_suite(instances=args.instances, seed=config.train.seed, logger=logger)
    text = report.format()
    sys.stdout.write(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "gradcheck.txt"), "w") as f:
            f.write(text)
    return 0 if report.passed else 3


def cmd_ablate(args: argparse.Namespace, config, logger) -> int:
    benchmark = _benchmark(args, config, logger)
    os.makedirs(args.out, exist_ok=True)
    _ablation(benchmark, config, args.variants, args.out, logger)
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
    "ablate": cmd_ablate,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_run_config(args)
        logger = ExperimentLogger("region_synth", logger_level=config.logger_level)
        return COMMANDS[args.command](args, config, logger)
    except RegionSynthError as e:
        print(f"region-synth {args.command}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"region-synth {args.command}: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
