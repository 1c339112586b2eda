"""Command line interface: scenario runner and report generator.

    loraconn run FILE [--seed N] [--out DIR]
    loraconn report flr DIR... [--figures DIR]
    loraconn report power DIR [--capacity-mah N] [--voltage V]
                              [--events-per-day R] [--usable-fraction F]
                              [--figures DIR]

Exit codes: 0 ok, 2 scenario parse error, 3 invalid scenario, 4 missing
run artifacts.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .power import BatterySpec
from .report import assemble_flr_tables, power_report_text
from .scenario import ScenarioParseError, parse_scenario_file
from .simkernel import InvalidScenarioError, SimMetrics, run, trace_to_text

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_MISSING = 4

TRACE_FILE = "trace.txt"
METRICS_FILE = "metrics.txt"
EXPORT_FILE = "export.lp"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loraconn",
        description="Connection-based LoRa sensor network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario file")
    p_run.add_argument("scenario", help="path to a .scn scenario file")
    p_run.add_argument("--seed", type=int, default=None, help="override the file's seed")
    p_run.add_argument("--out", default=".", help="output directory (default: current)")

    p_report = sub.add_parser("report", help="summarize completed runs")
    report_sub = p_report.add_subparsers(dest="report_kind", required=True)

    p_flr = report_sub.add_parser("flr", help="frame-loss tables from run directories")
    p_flr.add_argument("dirs", nargs="+", help="run output directories")
    p_flr.add_argument("--figures", default=None, help="also render PNG charts into this directory")

    p_power = report_sub.add_parser("power", help="energy and lifetime summary of one run")
    p_power.add_argument("dir", help="run output directory")
    p_power.add_argument("--capacity-mah", type=float, default=1000.0)
    p_power.add_argument("--voltage", type=float, default=3.7)
    p_power.add_argument("--events-per-day", type=float, default=10.0)
    p_power.add_argument("--usable-fraction", type=float, default=0.85)
    p_power.add_argument("--figures", default=None, help="also render a PNG chart into this directory")

    return parser


def cmd_run(scenario_path: str, seed_override: int | None, out_dir: str) -> int:
    try:
        scenario = parse_scenario_file(scenario_path)
    except FileNotFoundError:
        print("error: scenario file not found: {}".format(scenario_path), file=sys.stderr)
        return EXIT_PARSE
    except ScenarioParseError as exc:
        print("error: {}: {}".format(scenario_path, exc), file=sys.stderr)
        return EXIT_PARSE
    except InvalidScenarioError as exc:
        print("error: invalid scenario: {}".format(exc), file=sys.stderr)
        return EXIT_INVALID
    if seed_override is not None:
        scenario.seed = seed_override
    try:
        result = run(scenario)
    except InvalidScenarioError as exc:
        print("error: invalid scenario: {}".format(exc), file=sys.stderr)
        return EXIT_INVALID
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / TRACE_FILE).write_text(trace_to_text(result.trace), encoding="utf-8")
    (out / METRICS_FILE).write_text(result.metrics.to_text(), encoding="utf-8")
    (out / EXPORT_FILE).write_text(result.store.export_lines(), encoding="utf-8")
    print(
        "{}: {} attempts, {} delivered, FLR {:.1f}%  ->  {}".format(
            scenario.name,
            result.metrics.attempts,
            result.metrics.successes,
            result.metrics.flr * 100.0,
            out,
        )
    )
    return EXIT_OK


def _load_metrics(run_dir: str) -> SimMetrics | None:
    path = Path(run_dir) / METRICS_FILE
    if not path.is_file():
        print("error: no {} in {}".format(METRICS_FILE, run_dir), file=sys.stderr)
        return None
    return SimMetrics.from_text(path.read_text(encoding="utf-8"))


def cmd_report_flr(dirs: list[str], figures_dir: str | None) -> int:
    metrics_list = []
    for run_dir in dirs:
        metrics = _load_metrics(run_dir)
        if metrics is None:
            return EXIT_MISSING
        metrics_list.append(metrics)
    tables = assemble_flr_tables(metrics_list)
    for i, table in enumerate(tables):
        if i:
            print()
        print(table.to_text(), end="")
    if figures_dir is not None:
        from .figures import flr_figure_name, render_flr_figure

        out = Path(figures_dir)
        out.mkdir(parents=True, exist_ok=True)
        for table in tables:
            render_flr_figure(table, out / flr_figure_name(table))
    return EXIT_OK


def cmd_report_power(
    run_dir: str,
    capacity_mah: float,
    voltage: float,
    events_per_day: float,
    usable_fraction: float,
    figures_dir: str | None,
) -> int:
    metrics = _load_metrics(run_dir)
    if metrics is None:
        return EXIT_MISSING
    battery = BatterySpec(capacity_mah=capacity_mah, voltage_v=voltage, usable_fraction=usable_fraction)
    print(power_report_text(metrics, battery, events_per_day), end="")
    if figures_dir is not None:
        from .figures import render_power_figure

        out = Path(figures_dir)
        out.mkdir(parents=True, exist_ok=True)
        render_power_figure(metrics, out / "power_{}.png".format(metrics.scenario))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.scenario, args.seed, args.out)
    if args.report_kind == "flr":
        return cmd_report_flr(args.dirs, args.figures)
    return cmd_report_power(
        args.dir,
        args.capacity_mah,
        args.voltage,
        args.events_per_day,
        args.usable_fraction,
        args.figures,
    )


if __name__ == "__main__":
    sys.exit(main())
