"""Command-line front end: dataset generation, adaptation runs,
checkpoint evaluation and the numeric verification table.

One JSON config file drives everything; individual flags override its
values so a config plus a handful of flags is a full experiment record.
Exit codes are scripting-friendly: 0 success, 1 configuration problem,
2 runtime or numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .active import QueryStrategy, RunReport, ScheduleConfig, run_active_da
from .data import (
    ParseError,
    ShiftBenchmarkConfig,
    gen_shifted_gaussians,
    load_features_csv,
    save_features_csv,
)
from .metrics import accuracy, expected_calibration_error, summarize_uncertainty_arrays
from .network import TrainConfig, forward, load_checkpoint, save_checkpoint
from .uncertainty import logits_to_alpha_batch, predict_batch, uncertainty_batch

__all__ = ["main", "ConfigError"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class ConfigError(Exception):
    """Anything wrong with flags or the config file."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; route through the
    # config-error path instead so exit codes keep their meaning
    def error(self, message):
        raise ConfigError(message)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path!r} must hold a JSON object")
    unknown = set(doc) - {"benchmark", "train", "strategy", "schedule"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for key, value in doc.items():
        if not isinstance(value, dict):
            raise ConfigError(f"config section {key!r} must be an object")
    return doc


def _section_config(doc: dict, key: str, builder, overrides: dict):
    section = dict(doc.get(key, {}))
    section.update(overrides)
    try:
        return builder(section)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad {key} config: {exc}") from None


def _strategy_from_dict(data: dict) -> QueryStrategy:
    unknown = set(data) - {"kind", "kappa"}
    if unknown:
        raise ValueError(f"unknown strategy keys: {sorted(unknown)}")
    return QueryStrategy(**data)


def _schedule_from_dict(data: dict) -> ScheduleConfig:
    unknown = set(data) - {"budget_fraction", "steps"}
    if unknown:
        raise ValueError(f"unknown schedule keys: {sorted(unknown)}")
    return ScheduleConfig(**data)


def _resolve(args) -> tuple[ShiftBenchmarkConfig, TrainConfig, QueryStrategy, ScheduleConfig, dict]:
    doc = _load_config_file(args.config)

    bench_over: dict = {}
    train_over: dict = {}
    strat_over: dict = {}
    sched_over: dict = {}
    if args.seed is not None:
        # one flag pins the whole experiment: generator and trainer
        bench_over["seed"] = args.seed
        train_over["seed"] = args.seed
    if args.beta is not None:
        train_over["beta"] = args.beta
    if args.lam is not None:
        train_over["lambda"] = args.lam
    if args.strategy is not None:
        strat_over["kind"] = args.strategy
    if args.kappa is not None:
        strat_over["kappa"] = args.kappa
    if args.budget is not None:
        sched_over["budget_fraction"] = args.budget
    if args.steps is not None:
        sched_over["steps"] = args.steps

    bench = _section_config(doc, "benchmark", ShiftBenchmarkConfig.from_dict, bench_over)
    train = _section_config(doc, "train", TrainConfig.from_dict, train_over)
    strategy = _section_config(doc, "strategy", _strategy_from_dict, strat_over)
    schedule = _section_config(doc, "schedule", _schedule_from_dict, sched_over)
    resolved = {
        "benchmark": bench.to_dict(),
        "train": train.to_dict(),
        "strategy": {"kind": strategy.kind, "kappa": strategy.kappa},
        "schedule": {
            "budget_fraction": schedule.budget_fraction,
            "steps": schedule.steps,
        },
    }
    return bench, train, strategy, schedule, resolved


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _atomic_write(path: str, writer) -> None:
    # tmp-then-replace keeps a crashed run from leaving half a file
    tmp = path + ".tmp"
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _write_json(path: str, doc: dict) -> None:
    def writer(tmp: str) -> None:
        with open(tmp, "w") as fh:
            fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    _atomic_write(path, writer)


def _cmd_gen_data(args) -> int:
    bench, _, _, _, _ = _resolve(args)
    out = _out_dir(args)
    source, target = gen_shifted_gaussians(bench)
    for name, ds in (("source.csv", source), ("target.csv", target)):
        _atomic_write(os.path.join(out, name), lambda tmp, ds=ds: save_features_csv(tmp, ds))
    print(
        f"wrote {source.n_samples} source and {target.n_samples} target rows "
        f"({bench.n_classes} classes, {bench.n_features} features) to {out}"
    )
    return EXIT_OK


def _cmd_run(args) -> int:
    bench, train, strategy, schedule, resolved = _resolve(args)
    out = _out_dir(args)
    source, target = gen_shifted_gaussians(bench)
    params, report = run_active_da(source, target, train, strategy, schedule)

    doc = report.to_dict()
    doc["config"] = resolved
    _write_json(os.path.join(out, "report.json"), doc)
    _atomic_write(
        os.path.join(out, "checkpoint.npz"),
        lambda tmp: save_checkpoint(tmp, params, train),
    )
    print(
        f"{strategy.kind}: labeled {report.final['n_labeled']} of {target.n_samples}, "
        f"final target accuracy {report.final['target_accuracy']:.4f} "
        f"(report.json, checkpoint.npz in {out})"
    )
    return EXIT_OK


def _cmd_eval(args) -> int:
    params, train = load_checkpoint(args.checkpoint)
    dataset = load_features_csv(
        args.data, params.n_classes, has_header=args.header, domain=args.domain
    )
    if dataset.n_features != params.layer_sizes[0]:
        raise ValueError(
            f"checkpoint expects {params.layer_sizes[0]} features, "
            f"dataset has {dataset.n_features}"
        )
    logits, _ = forward(params, dataset.features)
    alpha = logits_to_alpha_batch(logits, train.evidence)
    probs, preds = predict_batch(alpha)
    u_dis, u_data, _ = uncertainty_batch(alpha)
    metrics = {
        "n_samples": dataset.n_samples,
        "accuracy": accuracy(preds, dataset.labels),
        "ece": expected_calibration_error(
            probs.max(axis=1), (preds == dataset.labels).astype(float)
        ),
        "uncertainty": summarize_uncertainty_arrays(
            {args.domain: u_dis}, {args.domain: u_data}
        ),
    }
    text = json.dumps(metrics, indent=2, sort_keys=True)
    print(text)
    if args.out is not None:
        out = _out_dir(args)
        _write_json(os.path.join(out, "metrics.json"), metrics)
    return EXIT_OK


def _cmd_verify(args) -> int:
    # imported lazily: pulls in scipy, which the other commands never need
    from .verify import run_checks

    results = run_checks(args.level, digamma_fault=args.inject_digamma_error)
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="evidact", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    shared = _Parser(add_help=False)
    shared.add_argument("--config", metavar="PATH", help="JSON config file")
    shared.add_argument("--seed", type=int, help="seed for both generator and trainer")
    shared.add_argument("--strategy", metavar="NAME", help="query strategy kind")
    shared.add_argument("--budget", type=float, help="budget fraction of the target pool")
    shared.add_argument("--steps", type=int, help="number of selection steps")
    shared.add_argument("--kappa", type=int, help="first-round multiplier")
    shared.add_argument("--beta", type=float, help="distribution-uncertainty weight")
    shared.add_argument("--lambda", dest="lam", type=float, help="data-uncertainty weight")
    shared.add_argument("--out", metavar="DIR", help="output directory (default .)")

    gen = sub.add_parser("gen-data", parents=[shared], help="write benchmark CSVs")
    gen.set_defaults(handler=_cmd_gen_data)

    run = sub.add_parser("run", parents=[shared], help="run budgeted adaptation")
    run.set_defaults(handler=_cmd_run)

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a CSV dataset")
    ev.add_argument("--checkpoint", required=True, metavar="PATH")
    ev.add_argument("--data", required=True, metavar="PATH", help="label,f1,...,fd rows")
    ev.add_argument("--header", action="store_true", help="skip a header row")
    ev.add_argument("--domain", default="eval", help="domain tag in the summary")
    ev.add_argument("--out", metavar="DIR", help="also write metrics.json here")
    ev.set_defaults(handler=_cmd_eval)

    ver = sub.add_parser("verify", help="run the numeric oracle checks")
    ver.add_argument("--level", choices=("quick", "full"), default="full")
    ver.add_argument(
        "--inject-digamma-error",
        type=float,
        default=0.0,
        metavar="X",
        help="test mode: scale digamma by 1+X so the checks must fail",
    )
    ver.set_defaults(handler=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, OSError, ParseError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
