"""Command-line entry point: ``tctsim {spectrum,dynamics,trajectories,liouvillian,all}``.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import figures
from .config import OUT_ENV, load_config
from .errors import ConfigError, NumericalError

COMMANDS = ("spectrum", "dynamics", "trajectories", "liouvillian", "all")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tctsim", description="Monitored two-transmon simulations.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="INI configuration file (defaults reproduce the published parameters)")
    p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./tctsim-out)")
    p.add_argument("--seed", type=int, help="trajectory RNG seed")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("--no-svg", action="store_true", help="skip SVG plots")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _report(name: str, summary: dict, seconds: float) -> None:
    print(f"[{name}] done in {seconds:.1f} s")
    for k, v in summary.items():
        if not isinstance(v, dict):
            print(f"  {k} = {v}")


def _needs_circuit(name: str, cfg) -> bool:
    if name == "dynamics":
        return True
    if name == "trajectories":
        return cfg.trajectories.g_eg_override is None
    return name == "liouvillian" and cfg.liouvillian.frame == "lab"


def run(command: str, cfg, out: Path, svg: bool) -> dict:
    """Run one pipeline (or all of them) and return their summaries."""
    out.mkdir(parents=True, exist_ok=True)
    steps = COMMANDS[:-1] if command == "all" else (command,)
    circuit = None
    results = {}
    for name in steps:
        t0 = time.perf_counter()
        if circuit is None and _needs_circuit(name, cfg):
            circuit = figures.derive_circuit(cfg)
        if name == "spectrum":
            results[name] = figures.run_spectrum(cfg, out, svg)
        elif name == "dynamics":
            results[name] = figures.run_dynamics(cfg, out, svg, circuit)
        elif name == "trajectories":
            results[name] = figures.run_trajectories(cfg, out, svg, circuit)
        else:
            results[name] = figures.run_liouvillian(cfg, out, svg, circuit)
        _report(name, results[name], time.perf_counter() - t0)
    return results


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, threads=args.threads, out_dir=args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run(args.command, cfg, Path(cfg.out_dir), not args.no_svg)
    except (ConfigError, ValueError) as exc:
        # model constructors reject unphysical values with ValueError
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
