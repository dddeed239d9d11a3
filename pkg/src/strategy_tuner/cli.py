"""Command-line interface.

Commands: tune (run the sample-analyze-refine loop and write trace,
result, and summary files), dominancy (controlled per-parameter influence
experiments), plot (static charts from a trace), and simulate (one
synthetic analysis of a given configuration, for profile debugging).

Exit codes: 0 success, 2 configuration error, 3 analyzer unavailable.
Set STRATEGY_TUNER_LOG=debug|info|warning for logging verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import shutil
import sys
from dataclasses import dataclass
from pathlib import Path

from .analyzers import (
    AnalysisTask,
    Analyzer,
    Completed,
    SyntheticAnalyzer,
    SyntheticProfile,
    parse_profile,
)
from .dominancy import report_table, report_to_json, run_dominancy
from .errors import BaselinesDoNotSeparateError, ConfigParseError, TunerError
from .keytree import parse_keytree
from .orchestrator import TunerSettings, tune
from .paramspace import (
    Catalog,
    apply_catalog_overrides,
    default_catalog,
    parse_configuration,
    serialize_configuration,
)
from .plots import write_plots
from .subprocess_adapter import AdapterConfig, SubprocessAnalyzer
from .trace import read_trace, result_to_json, write_record

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ANALYZER_UNAVAILABLE = 3


@dataclass
class RunConfig:
    catalog: Catalog
    settings: TunerSettings
    out_dir: Path
    program: str | None = None
    profile: SyntheticProfile | None = None
    adapter: AdapterConfig | None = None

    def analyzer(self) -> Analyzer:
        if self.profile is not None:
            return SyntheticAnalyzer(self.profile)
        assert self.adapter is not None
        return SubprocessAnalyzer(self.adapter, self.catalog)

    def program_ref(self) -> str:
        if self.profile is not None:
            return "synthetic"
        assert self.program is not None
        return self.program


def _read_text(path: str, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {what} {path!r}: {exc}")


def _load_settings(tree, args) -> TunerSettings:
    def pick(flag_value, key: str, cast, default):
        if flag_value is not None:
            return flag_value
        raw = tree.get(key)
        if raw is None:
            return default
        try:
            return cast(raw)
        except ValueError:
            raise ConfigParseError(f"bad value for {key!r}: {raw!r}", line=tree.line_of(key))

    max_iter = pick(getattr(args, "max_iterations", None), "tuner.max_iterations", int, None)
    return TunerSettings(
        time_budget=pick(args.budget, "tuner.time_budget", float, 3600.0),
        num_sample=pick(args.samples, "tuner.num_sample", int, 4),
        num_process=pick(args.processes, "tuner.num_process", int, 1),
        seed=pick(args.seed, "tuner.seed", int, 0),
        iteration_fraction=pick(None, "tuner.iteration_fraction", float, 0.5),
        max_iterations=max_iter,
        min_slice=pick(None, "tuner.min_slice", float, 1.0),
    )


def load_run_config(args) -> RunConfig:
    tree = parse_keytree(_read_text(args.config, "config file") if args.config else "")

    catalog = default_catalog()
    catalog_path = tree.get("catalog")
    if catalog_path:
        catalog = apply_catalog_overrides(catalog, _read_text(catalog_path, "catalog override"))

    program = getattr(args, "program", None) or tree.get("program")
    profile_path = getattr(args, "profile", None) or tree.get("profile")
    if bool(program) == bool(profile_path):
        raise ConfigParseError(
            "exactly one analyzer backend required: set 'program' (subprocess) "
            "or 'profile' (synthetic)"
        )

    profile = None
    adapter = None
    if profile_path:
        profile = parse_profile(_read_text(profile_path, "profile"), catalog)
    else:
        command = tree.get("adapter.command")
        pattern = tree.get("adapter.pattern")
        if not command or not pattern:
            raise ConfigParseError(
                "subprocess backend requires 'adapter.command' and 'adapter.pattern'"
            )
        env_raw = tree.get("adapter.env", "")
        adapter = AdapterConfig(
            command=command,
            pattern=pattern,
            join=tree.get("adapter.join", ":") or ":",
            env_passthrough=tuple(v for v in (env_raw or "").split(",") if v),
            grace=float(tree.get("adapter.grace", "2") or 2),
        )

    out = getattr(args, "out", None) or tree.get("out") or "tuner-out"
    return RunConfig(
        catalog=catalog,
        settings=_load_settings(tree, args),
        out_dir=Path(out),
        program=program,
        profile=profile,
        adapter=adapter,
    )


def _adapter_available(adapter: AdapterConfig) -> bool:
    try:
        argv = shlex.split(adapter.command.format(program="x", args=""))
    except (KeyError, IndexError, ValueError):
        return False
    return bool(argv) and shutil.which(argv[0]) is not None


def _prepare_out_dir(out_dir: Path) -> None:
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigParseError(f"output directory {str(out_dir)!r} is not writable: {exc}")


def cmd_tune(args) -> int:
    try:
        run = load_run_config(args)
        _prepare_out_dir(run.out_dir)
    except TunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if run.adapter is not None and not _adapter_available(run.adapter):
        print(f"error: adapter command not found: {run.adapter.command!r}", file=sys.stderr)
        return EXIT_ANALYZER_UNAVAILABLE

    trace_path = run.out_dir / "trace.ndjson"
    with trace_path.open("w", encoding="utf-8") as stream:
        result = tune(
            run.program_ref(),
            run.catalog,
            run.settings,
            run.analyzer(),
            on_record=lambda record: write_record(stream, record),
        )

    (run.out_dir / "recommended.conf").write_text(
        serialize_configuration(result.recommended_config), encoding="utf-8"
    )
    if result.best_sampled is not None:
        (run.out_dir / "best_sampled.conf").write_text(
            serialize_configuration(result.best_sampled.config), encoding="utf-8"
        )
    (run.out_dir / "result.json").write_text(
        json.dumps(result_to_json(result), indent=2) + "\n", encoding="utf-8"
    )
    (run.out_dir / "summary.txt").write_text(_summary(result), encoding="utf-8")
    print(f"wrote {trace_path} ({len(result.iteration_trace)} iterations)")
    return EXIT_OK


def _summary(result) -> str:
    lines = [
        f"iterations:      {len(result.iteration_trace)}",
        f"wall time total: {result.wall_time_total:.3f} s",
    ]
    if result.best_sampled is not None:
        lines.append(f"best sampled:    {result.best_sampled.alarm_count} alarm(s)")
    else:
        lines.append("best sampled:    none (no analysis completed)")
    lines.append("")
    lines.append("recommended configuration:")
    lines.append(serialize_configuration(result.recommended_config))
    return "\n".join(lines)


def cmd_dominancy(args) -> int:
    try:
        run = load_run_config(args)
        _prepare_out_dir(run.out_dir)
        low = parse_configuration(_read_text(args.low, "baseline"), run.catalog)
        high = parse_configuration(_read_text(args.high, "baseline"), run.catalog)
    except TunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if run.adapter is not None and not _adapter_available(run.adapter):
        print(f"error: adapter command not found: {run.adapter.command!r}", file=sys.stderr)
        return EXIT_ANALYZER_UNAVAILABLE

    timeout = args.timeout if args.timeout is not None else run.settings.time_budget
    try:
        report = run_dominancy(
            run.program_ref(),
            low,
            high,
            run.catalog,
            run.analyzer(),
            timeout=timeout,
            num_process=run.settings.num_process,
        )
    except BaselinesDoNotSeparateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    table = report_table(report)
    (run.out_dir / "dominancy.txt").write_text(table, encoding="utf-8")
    (run.out_dir / "dominancy.json").write_text(
        json.dumps(report_to_json(report), indent=2) + "\n", encoding="utf-8"
    )
    print(table, end="")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        records = read_trace(_read_text(args.trace, "trace"))
    except TunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not records:
        print("error: trace is empty", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out) if args.out else Path(args.trace).parent / "plots"
    try:
        written = write_plots(records, out_dir)
    except OSError as exc:
        print(f"error: cannot write charts to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {len(written)} chart file(s) to {out_dir}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        catalog = default_catalog()
        profile = parse_profile(_read_text(args.profile, "profile"), catalog)
        if args.configuration:
            config = parse_configuration(
                _read_text(args.configuration, "configuration"), catalog
            )
        else:
            config = catalog.base_configuration()
    except TunerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        task = AnalysisTask(program_ref="synthetic", config=config, timeout=args.timeout)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outcome = SyntheticAnalyzer(profile).run(task)
    if isinstance(outcome, Completed):
        print(f"completed in {outcome.wall_time:.3f} s, {len(outcome.alarms)} alarm(s):")
        for alarm in sorted(outcome.alarms):
            print(f"  {alarm}")
    else:
        print(f"outcome: {outcome}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strategy-tuner",
        description="Adaptive tuner for black-box static analyzer parameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="run config file (key = value lines)")
        p.add_argument("--program", help="target program for the subprocess backend")
        p.add_argument("--profile", help="synthetic profile file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--budget", type=float, default=None, help="time budget in seconds")
        p.add_argument("--samples", type=int, default=None, help="configurations per iteration")
        p.add_argument("--processes", type=int, default=None, help="parallel analyses")
        p.add_argument("--out", default=None, help="output directory")

    p_tune = sub.add_parser("tune", help="run the sample-analyze-refine loop")
    add_run_flags(p_tune)
    p_tune.add_argument("--max-iterations", type=int, default=None, dest="max_iterations")
    p_tune.set_defaults(func=cmd_tune)

    p_dom = sub.add_parser("dominancy", help="score per-parameter influence")
    add_run_flags(p_dom)
    p_dom.add_argument("low", help="low-precision baseline configuration file")
    p_dom.add_argument("high", help="high-precision baseline configuration file")
    p_dom.add_argument("--timeout", type=float, default=None, help="per-analysis timeout")
    p_dom.set_defaults(func=cmd_dominancy)

    p_plot = sub.add_parser("plot", help="emit evolution charts from a trace")
    p_plot.add_argument("trace", help="trace.ndjson path")
    p_plot.add_argument("--out", default=None, help="chart output directory")
    p_plot.set_defaults(func=cmd_plot)

    p_sim = sub.add_parser("simulate", help="run one synthetic analysis and print its alarms")
    p_sim.add_argument("profile", help="synthetic profile file")
    p_sim.add_argument("--configuration", help="configuration file (defaults to catalog bases)")
    p_sim.add_argument("--timeout", type=float, default=60.0)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def _setup_logging() -> None:
    level_name = os.environ.get("STRATEGY_TUNER_LOG", "warning").lower()
    level = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING}.get(
        level_name, logging.WARNING
    )
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
