"""Command-line entry point: ``python -m dfdcf <subcommand>``."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .mac import AccessPolicy
from .metrics import render_summary_csv, render_timeseries_csv
from .network import Simulation
from .policy import ConfigError
from .report import report
from .scenario import BUILTIN_NAMES, Scenario, builtin, load, parse, parse_duration, serialize

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

DESCRIPTIONS = {
    "udp3": "three saturating CBR/UDP flows, deadlines 150/250/350 ms",
    "tcp3-naive": "three FTP/TCP flows, deadlines 300/500/700 ms",
    "tcp3": "three FTP/TCP flows, common 375 ms deadline",
    "mixed": "one FTP/TCP flow joined by two CBR/UDP flows",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _load_scenario(ref: str) -> tuple[Scenario, dict]:
    """A built-in name, a config file, or a run manifest (whose stored method/seed become defaults)."""
    if ref.endswith(".json") and os.path.exists(ref):
        with open(ref) as fh:
            manifest = json.load(fh)
        try:
            return parse(manifest["config"]), manifest
        except KeyError:
            raise ConfigError(f"{ref}: manifest has no 'config' entry") from None
    return load(ref), {}


def _prepare(args, method: str | None = None, seed: int | None = None) -> Scenario:
    scenario, manifest = _load_scenario(args.scenario)
    method = method or manifest.get("method")
    seed = seed if seed is not None else manifest.get("seed")
    duration = parse_duration(args.duration) if args.duration else None
    return scenario.with_overrides(method=method, seed=seed, duration=duration)


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def run_to_dir(scenario: Scenario, out: Path) -> list[dict]:
    """Run one simulation and write timeseries.csv, summary.csv and manifest.json."""
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror or exc}") from exc
    result = Simulation(scenario).run()
    config = serialize(scenario)
    rows = result.summary_rows()
    _write(out / "timeseries.csv", render_timeseries_csv(result.stats.values()))
    _write(out / "summary.csv", render_summary_csv(rows))
    manifest = {
        "tool": "dfdcf",
        "version": __version__,
        "scenario": scenario.name,
        "scenario_sha256": hashlib.sha256(config.encode()).hexdigest(),
        "method": scenario.mac.access_policy.value,
        "seed": scenario.seed,
        "duration_s": scenario.duration / 1e9,
        "config": config,
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return rows


def _parse_methods(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    for m in methods:
        AccessPolicy.parse(m)
    if len(set(methods)) != len(methods):
        raise UsageError(f"duplicate method in {text!r}")
    return methods


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part[1:]:
                a, b = part.split("-", 1)
                seeds.extend(range(int(a), int(b) + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise UsageError(f"bad seed list {text!r}; use e.g. 1,2,3 or 1-5") from None
    if not seeds:
        raise UsageError("at least one seed is required")
    dupes = sorted({s for s in seeds if seeds.count(s) > 1})
    if dupes:
        raise UsageError(f"duplicate seeds: {', '.join(map(str, dupes))}")
    return seeds


def cmd_run(args) -> int:
    method = AccessPolicy.parse(args.method).value if args.method else None
    scenario = _prepare(args, method, args.seed)
    run_to_dir(scenario, Path(args.out))
    print(f"{scenario.name} [{scenario.mac.access_policy.value}, seed {scenario.seed}] -> {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    methods = _parse_methods(args.methods)
    if len(methods) < 2:
        raise UsageError("compare needs at least two methods, e.g. --methods difs,dfdcf")
    out = Path(args.out)
    joined = []
    for m in methods:
        scenario = _prepare(args, m, args.seed)
        for row in run_to_dir(scenario, out / m):
            joined.append({"method": m, **row})
        print(f"{scenario.name} [{m}, seed {scenario.seed}] -> {out / m}")
    _write(out / "compare_summary.csv", render_summary_csv(joined, extra=("method", "window")))
    return EXIT_OK


def _sweep_one(job: tuple[str, str | None, int, str | None, str]) -> tuple[int, str | None]:
    ref, method, seed, duration, out = job
    ns = argparse.Namespace(scenario=ref, duration=duration)
    try:
        run_to_dir(_prepare(ns, method, seed), Path(out))
    except (ConfigError, ValueError, OSError) as exc:
        return seed, str(exc)
    return seed, None


def cmd_sweep(args) -> int:
    seeds = _parse_seeds(args.seeds)
    method = AccessPolicy.parse(args.method).value if args.method else None
    _prepare(args, method, seeds[0])
    out = Path(args.out)
    jobs = [(args.scenario, method, s, args.duration, str(out / f"seed-{s}")) for s in seeds]
    n = max(1, min(args.jobs or os.cpu_count() or 1, len(jobs)))
    if n == 1:
        results = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as ex:
            results = list(ex.map(_sweep_one, jobs))
    failed = 0
    for seed, err in results:
        if err is None:
            print(f"seed {seed}: ok -> {out / f'seed-{seed}'}")
        else:
            failed += 1
            print(f"seed {seed}: FAILED: {err}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_INVALID


def cmd_report(args) -> int:
    try:
        written = report(args.inputs, args.out)
    except FileNotFoundError as exc:
        raise OSError(str(exc)) from exc
    for p in written:
        print(p)
    return EXIT_OK


def cmd_list(args) -> int:
    for name in BUILTIN_NAMES:
        s = builtin(name)
        flows = ", ".join(f"{f.flow_id}@{f.start // 10**9}s" for f in s.flows)
        print(f"{name:11s} {DESCRIPTIONS[name]}  [{flows}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dfdcf", description="DCF / DIFS / DF-DCF wireless LAN simulator")
    p.add_argument("--version", action="version", version=f"dfdcf {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--scenario", required=True, help="built-in name, config file or manifest.json")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--duration", help="override run length, e.g. 30s")
        if seed:
            sp.add_argument("--seed", type=int)

    sp = sub.add_parser("run", help="run one scenario under one access method")
    common(sp)
    sp.add_argument("--method", help="dcf, difs or dfdcf (default: scenario's access_policy)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare", help="run one scenario under several methods, same seed")
    common(sp)
    sp.add_argument("--methods", required=True, help="comma-separated, e.g. difs,dfdcf")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("sweep", help="independent runs over several seeds")
    common(sp, seed=False)
    sp.add_argument("--method")
    sp.add_argument("--seeds", required=True, help="e.g. 1,2,3 or 1-5")
    sp.add_argument("--jobs", type=int, default=None, help="parallel runs (default: CPU count)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="render time-series CSVs as SVG charts")
    sp.add_argument("inputs", nargs="+", help="timeseries.csv files or run directories")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("list-scenarios", help="list built-in scenarios")
    sp.set_defaults(func=cmd_list)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError, ValueError) as exc:
        print(f"dfdcf: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"dfdcf: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
