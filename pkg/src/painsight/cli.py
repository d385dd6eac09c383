"""Command-line entry point.

Verbs: validate, synth, preprocess, train, score, smooth, evaluate,
plot, run.  Exit codes: 0 success, 2 validation/config failure,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

import yaml

from .datamodel import load_manifest
from .errors import (
    ConfigError,
    ManifestParseError,
    PainsightError,
    SpecError,
    ValidationError,
)
from .evaluation import render_report_table
from .experiment import ExperimentRunner, load_config
from .synthetic import STOCK_SPECS, SynthSpec, generate_synthetic_dataset

_VALIDATION_ERRORS = (ValidationError, ManifestParseError, ConfigError, SpecError)


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config YAML")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument(
        "--profile", choices=["paper", "smoke"], default=None,
        help="override backbone profile",
    )
    parser.add_argument("--out", default=None, help="override output directory")


def _runner(args: argparse.Namespace) -> ExperimentRunner:
    cfg = load_config(
        args.config,
        seed=args.seed,
        backbone_profile=args.profile,
        output_dir=args.out,
    )
    return ExperimentRunner(cfg)


def _cmd_validate(args: argparse.Namespace) -> int:
    if args.manifest:
        manifest = load_manifest(args.manifest)
        print(f"ok: {len(manifest.participants)} participants in {args.manifest}")
        return 0
    runner = _runner(args)
    n = len(runner.primary.participants)
    msg = f"ok: primary manifest has {n} participants"
    if runner.cfg.external_manifest is not None:
        msg += f"; external has {len(runner.external.participants)}"
    print(msg)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.spec in STOCK_SPECS:
        spec = STOCK_SPECS[args.spec]()
    else:
        raw = yaml.safe_load(Path(args.spec).read_text()) or {}
        spec = SynthSpec(**raw)
    if args.seed is not None:
        import dataclasses

        spec = dataclasses.replace(spec, seed=args.seed)
    manifest = generate_synthetic_dataset(spec, args.out)
    print(
        f"generated {len(manifest.participants)} participants x "
        f"{spec.frames_per_participant} frames under {args.out}"
    )
    return 0


def _cmd_preprocess(args: argparse.Namespace) -> int:
    runner = _runner(args)
    runner.cfg.cache_crops = True  # the verb exists to materialize the cache
    runner.out.mkdir(parents=True, exist_ok=True)
    runner.preprocess()
    print(f"crop cache written under {runner.out / 'crops'}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    runner = _runner(args)
    runner.out.mkdir(parents=True, exist_ok=True)
    models = runner.train()
    print(f"trained {len(set(map(id, models.values())))} model(s) "
          f"across {len(models)} fold(s)")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    runner = _runner(args)
    series = runner.score()
    print(f"scored {sum(len(s) for s in series.values())} frames "
          f"for {len(series)} participant(s)")
    return 0


def _cmd_smooth(args: argparse.Namespace) -> int:
    runner = _runner(args)
    smoothed = runner.smooth()
    print(f"smoothed score files written for {len(smoothed)} participant(s)")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    runner = _runner(args)
    report = runner.evaluate()
    runner.write_outputs_manifest()
    print(render_report_table(report), end="")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    runner = _runner(args)
    paths = runner.plot()
    runner.write_outputs_manifest()
    print(f"wrote {len(paths)} figure(s) under {runner.out / 'figures'}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    runner = _runner(args)
    report = runner.run()
    print(render_report_table(report), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="painsight",
        description="Pain detection pipeline for partially occluded faces.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate", help="check a manifest or a config's manifests")
    p.add_argument("--manifest", default=None, help="manifest file to validate")
    p.add_argument("--config", default=None, help="config whose manifests to validate")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--profile", choices=["paper", "smoke"], default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument(
        "--spec", required=True,
        help=f"stock spec name ({', '.join(sorted(STOCK_SPECS))}) or a YAML file",
    )
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=None, help="override spec seed")
    p.set_defaults(func=_cmd_synth)

    for verb, func, help_text in [
        ("preprocess", _cmd_preprocess, "materialize the crop cache"),
        ("train", _cmd_train, "train per-fold models and write checkpoints"),
        ("score", _cmd_score, "score held-out participants from checkpoints"),
        ("smooth", _cmd_smooth, "apply the causal filter to raw score files"),
        ("evaluate", _cmd_evaluate, "compute reports from score files"),
        ("plot", _cmd_plot, "emit ROC and timeline figures"),
        ("run", _cmd_run, "all stages end to end"),
    ]:
        p = sub.add_parser(verb, help=help_text)
        _add_config_options(p)
        p.set_defaults(func=func)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "validate" and not args.manifest and not args.config:
        print("validate needs --manifest or --config", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except PainsightError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
