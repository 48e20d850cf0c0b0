"""Command-line entry point: configure, run, and persist a flow simulation.

Exit status: 0 clean stop, 1 configuration error, 2 refused initial data,
3 flow breakdown or numeric blow-up.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import diagnostics, kernels
from .config import parse_config
from .errors import (
    ConfigurationError,
    FlowBreakdownError,
    GraphMCFError,
    NumericBlowupError,
    OutOfClassError,
)
from .field import make_grid
from .flow import FlowConfig, MonitorPlan, run
from .initial_maps import initial_map


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit-code policy in run_cli
        raise ConfigurationError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="graphmcf", description="mean curvature flow of graph maps")
    p.add_argument("--config", required=True, help="path to the run configuration")
    p.add_argument("--out-dir", help="override the configured output directory")
    p.add_argument("--max-steps", type=int, help="hard cap on time steps")
    p.add_argument("--resolution", help="override grid resolution, e.g. 64 or 64,128")
    p.add_argument("--verify", action="store_true",
                   help="enable the evolution identity/inequality verifiers")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return p


def run_cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigurationError as exc:
        print(parser.format_usage(), file=sys.stderr, end="")
        print(f"error {exc}", file=sys.stderr)
        return 1

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        print(f"error [config] cannot read {args.config}: {exc}", file=sys.stderr)
        return 1
    except ConfigurationError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1

    if args.out_dir:
        cfg.out_dir = args.out_dir
    if args.resolution:
        try:
            res = tuple(int(x) for x in args.resolution.split(","))
        except ValueError:
            print("error [config] bad --resolution value", file=sys.stderr)
            return 1
        cfg.resolution = res * cfg.product.sigma1.dim if len(res) == 1 else res
    if args.verify:
        cfg.verify = True

    try:
        os.makedirs(cfg.out_dir, exist_ok=True)
        grid = make_grid(cfg.product.sigma1, cfg.resolution)
        initial = initial_map(cfg.initial_name, cfg.initial_params, grid, cfg.product)
        flow_cfg = FlowConfig(
            product=cfg.product,
            resolution=tuple(cfg.resolution),
            cfl_safety=cfg.cfl_safety,
            t_max=cfg.t_max,
            stop_A_norm=cfg.stop_A_norm,
            stop_eta1=cfg.stop_eta1,
        )

        def progress(row):
            if not args.quiet:
                print(
                    f"t={row.time:.6g} min_eta={row.min_eta:.6g} "
                    f"min_eta1={row.min_eta1:.6g} max|A|^2={row.max_A_norm_sq:.6g}"
                )

        plan = MonitorPlan(
            interval=cfg.monitor_interval,
            verify=cfg.verify,
            snapshot_every=cfg.snapshot_every,
            out_dir=cfg.out_dir,
            max_steps=args.max_steps,
            progress=progress,
        )
        result = run(flow_cfg, initial, plan)
    except ConfigurationError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except OutOfClassError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2
    except (FlowBreakdownError, NumericBlowupError) as exc:
        print(f"error {exc}", file=sys.stderr)
        return 3
    except GraphMCFError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1

    csv_path = os.path.join(cfg.out_dir, "timeseries.csv")
    diagnostics.emit_timeseries(result.rows, csv_path)
    final = result.rows[-1]
    with open(os.path.join(cfg.out_dir, "summary.txt"), "w") as fh:
        fh.write(f"stop_reason={result.stop_reason}\n")
        fh.write(f"steps={result.final_state.step_index}\n")
        fh.write(f"dt={result.dt!r}\n")
        fh.write(f"backend={result.backend}\n")
        fh.write(f"time={final.time!r}\n")
        fh.write(f"min_eta={final.min_eta!r}\n")
        fh.write(f"min_eta1={final.min_eta1!r}\n")
        fh.write(f"max_product={final.max_product!r}\n")
        fh.write(f"max_A_norm_sq={final.max_A_norm_sq!r}\n")
        fh.write(f"energy_H={final.energy_H!r}\n")
        fh.write(f"area={final.area!r}\n")
    if not args.quiet:
        print(f"stopped: {result.stop_reason} after {result.final_state.step_index} steps "
              f"(backend {result.backend}); outputs in {cfg.out_dir}")
    return 0


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
