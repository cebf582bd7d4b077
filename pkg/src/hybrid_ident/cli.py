"""Command line interface: ``hybrid-ident <command> <config.toml>``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import reports
from .config import RunConfiguration, load_config
from .dataio import write_dataset
from .errors import ConfigError, DataError, IdentificationError
from .strategy import (
    classify_all,
    ensemble_analyze,
    reduce_domain,
    run_hybrid,
    run_stages,
    strategy_loop,
    uniform_scan,
)

log = logging.getLogger("hybrid_ident")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def cmd_scan(cfg: RunConfiguration, out: Path):
    data = cfg.dataset()
    cloud = uniform_scan(cfg.model, data, cfg.space, cfg.scan)
    classes = classify_all(cloud, cfg.strategy)
    reduced = reduce_domain(cfg.space, classes, cloud, cfg.strategy.sparse_fraction,
                            cfg.strategy.min_width_fraction)
    reports.write_scatter(cloud, out)
    reports.write_classification(classes, cloud.threshold, out / "classification.csv")
    reports.write_bounds(cfg.space, reduced, out / "reduced_bounds.csv")
    for d, lo, hi in zip(classes, reduced.lower, reduced.upper):
        print(f"{d.name}: {d.label.value}, reduced to [{lo:g}, {hi:g}]")


def cmd_identify(cfg: RunConfiguration, out: Path):
    data = cfg.dataset()
    result = run_hybrid(cfg.model, data, cfg.space, cfg.ga, cfg.lm, np.random.default_rng([cfg.seed, 0]))
    reports.write_solution(cfg.space.names, result, out / "solution.csv")
    result.ga_trace.write_csv(out / "ga_trace.csv", cfg.space.names)
    result.lm_trace.write_csv(out / "lm_trace.csv")
    print(f"objective {result.cost:.6g} ({result.lm_trace.reason})")
    for n, v in zip(cfg.space.names, result.theta):
        print(f"{n} = {v:.10g}")


def cmd_ensemble(cfg: RunConfiguration, out: Path):
    data = cfg.dataset()
    report = ensemble_analyze(cfg.model, data, cfg.space, cfg.ga, cfg.lm, cfg.strategy)
    reports.write_ensemble(report, out / "ensemble.csv")
    reports.write_json(reports.ensemble_summary(report), out / "verdict.json")
    print(f"{report.verdict.value}: response dispersion {report.response_dispersion:.3g}")


def cmd_pipeline(cfg: RunConfiguration, out: Path):
    data = cfg.dataset()
    if cfg.stages:
        values, outcomes = run_stages(cfg.model, data, cfg.space, cfg.stages, cfg.ga, cfg.lm, cfg.strategy)
        summary = {"parameters": values, "stages": []}
        for name, names, result in outcomes:
            stage_dir = out / f"stage_{name}"
            stage_dir.mkdir(exist_ok=True)
            report = getattr(result, "report", result)
            if hasattr(report, "verdict"):
                reports.write_ensemble(report, stage_dir / "ensemble.csv")
                summary["stages"].append({"name": name, **reports.ensemble_summary(report)})
            else:
                reports.write_solution(names, result, stage_dir / "solution.csv")
                summary["stages"].append({"name": name, "objective": result.cost})
        reports.write_json(summary, out / "verdict.json")
        print("staged identification: " + ", ".join(f"{k}={v:.6g}" for k, v in values.items()))
        return
    result = strategy_loop(cfg.model, data, cfg.space, cfg.ga, cfg.lm, cfg.strategy, cfg.scan)
    reports.write_scatter(result.cloud, out)
    reports.write_classification(result.classes, result.cloud.threshold, out / "classification.csv")
    reports.write_bounds(cfg.space, result.reduced_space, out / "reduced_bounds.csv")
    reports.write_ensemble(result.report, out / "ensemble.csv")
    reports.write_json(result.history, out / "history.json")
    reports.write_json(reports.ensemble_summary(result.report, inconclusive=result.inconclusive),
                       out / "verdict.json")
    flag = " (inconclusive)" if result.inconclusive else ""
    print(f"{result.report.verdict.value}{flag} after {len(result.history) - 1} ensemble round(s)")


def cmd_synth(cfg: RunConfiguration, out: Path):
    if "synthetic" not in cfg.data:
        raise ConfigError("synth needs a [data.synthetic] table")
    manifest = write_dataset(cfg.dataset(), out)
    print(f"wrote {manifest}")


COMMANDS = {
    "scan": (cmd_scan, "uniform scan, distribution classes and reduced bounds"),
    "identify": (cmd_identify, "one hybrid GA + LM run"),
    "ensemble": (cmd_ensemble, "repeated hybrid runs and their topology verdict"),
    "pipeline": (cmd_pipeline, "scan, reduce, ensemble and refine until settled"),
    "synth": (cmd_synth, "write synthetic data as CSV files plus manifest"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybrid-ident", description="Parameter identification with a hybrid GA + LM strategy.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="TOML run configuration")
        p.add_argument("-o", "--output", help="output directory (overrides the config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config, args.output)
        cfg.output.mkdir(parents=True, exist_ok=True)
        func(cfg, cfg.output)
    except IdentificationError as exc:
        print(f"hybrid-ident {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"hybrid-ident {args.command}: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
