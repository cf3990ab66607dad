"""Command-line interface.

Subcommands:
  simulate    run a BER sweep and write CSV/JSON records (optionally a figure)
  validate    run invariant self-checks; nonzero exit on any failure
  complexity  node-count report for a scheme/order
  plot        render BER curves from previously written CSV files

Exit codes: 0 success, 1 configuration error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigurationError
from .harness import SimConfig, complexity_report, load_records_csv, run_ber_sweep, write_records
from .validate import run_validation


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; 2 is reserved for
    # validation failures here, so remap usage errors to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _snr_grid(start, stop, step):
    if step <= 0:
        raise ConfigurationError("--snr-step must be positive")
    if stop < start:
        raise ConfigurationError("--snr-stop must not be below --snr-start")
    count = int((stop - start) / step + 1e-9) + 1
    return tuple(start + k * step for k in range(count))


def _print_record(rec):
    print(
        f"{rec.scheme:6s} M={rec.order:<3d} snr={rec.snr_db:6.2f} dB  "
        f"trials={rec.trials:<9d} bit_errors={rec.bit_errors:<7d} "
        f"ber={rec.ber:.4e}  max_nodes={rec.max_nodes}",
        flush=True,
    )


def _cmd_simulate(args):
    cfg = SimConfig(
        scheme=args.scheme,
        order=args.mod,
        snr_db=_snr_grid(args.snr_start, args.snr_stop, args.snr_step),
        trials=args.trials,
        seed=args.seed,
        target_errors=args.target_errors,
        dim=args.dim,
        generator_path=args.generator,
        noiseless=args.no_noise,
        workers=args.workers,
    )
    records = run_ber_sweep(cfg, on_record=_print_record)
    write_records(records, args.out, fmt=args.format, include_timing=args.timing)
    print(f"wrote {args.out}")
    if args.plot is not None:
        from .plotting import save_ber_figure

        target = args.plot if args.plot != "auto" else str(Path(args.out).with_suffix(".png"))
        save_ber_figure(records, target)
        print(f"wrote {target}")
    return 0


def _cmd_validate(args):
    results = run_validation(trials=args.trials, channels=args.channels, seed=args.seed)
    failures = 0
    for name, passed, detail in results:
        tag = "PASS" if passed else "FAIL"
        print(f"{tag} {name}: {detail}")
        failures += 0 if passed else 1
    if failures:
        print(f"{failures} check(s) failed", file=sys.stderr)
        return 2
    print("all checks passed")
    return 0


def _cmd_complexity(args):
    cfg = SimConfig(
        scheme=args.scheme,
        order=args.mod,
        snr_db=tuple(args.snr_db),
        trials=args.trials,
        seed=args.seed,
        target_errors=0,
        dim=args.dim,
        generator_path=args.generator,
        workers=args.workers,
    )
    report = complexity_report(cfg)
    print(f"scheme={report.scheme} M={report.order} dim={report.dim} "
          f"snr_db={list(report.snr_db)}")
    print(f"subsystem decodes: {report.subsystem_decodes}")
    print(f"max nodes: {report.max_nodes}  (worst-case budget {report.budget}, "
          f"violations {report.violations})")
    print(f"mean nodes: {report.mean_nodes:.4f}")
    print("histogram (nodes: occurrences):")
    for nodes, occurrences in report.histogram.items():
        print(f"  {nodes:4d}: {occurrences}")
    if args.out:
        payload = {
            "scheme": report.scheme,
            "M": report.order,
            "dim": report.dim,
            "snr_db": list(report.snr_db),
            "subsystem_decodes": report.subsystem_decodes,
            "max_nodes": report.max_nodes,
            "mean_nodes": report.mean_nodes,
            "budget": report.budget,
            "violations": report.violations,
            "histogram": {str(k): v for k, v in report.histogram.items()},
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
        print(f"wrote {args.out}")
    if args.plot:
        from .plotting import save_complexity_figure

        save_complexity_figure(report, args.plot)
        print(f"wrote {args.plot}")
    return 0 if report.violations == 0 else 2


def _cmd_plot(args):
    records = []
    for path in args.records:
        records.extend(load_records_csv(path))
    if not records:
        raise ConfigurationError("no records found in the given files")
    from .plotting import save_ber_figure

    save_ber_figure(records, args.out, title=args.title)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gcmb", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser(
        "simulate", help="run a Monte Carlo BER sweep",
        description="Monte Carlo BER sweep. The FPMB baseline from the "
                    "comparison figures is not implemented: its constellation "
                    "precoder is external to this package.",
    )
    sim.add_argument("--scheme", required=True, choices=["gcmb", "gc-ml", "pcmb"])
    sim.add_argument("--mod", required=True, type=int, choices=[4, 16, 64, 256],
                     help="QAM order M")
    sim.add_argument("--snr-start", required=True, type=float)
    sim.add_argument("--snr-stop", required=True, type=float)
    sim.add_argument("--snr-step", required=True, type=float)
    sim.add_argument("--trials", required=True, type=int,
                     help="maximum trials per SNR point")
    sim.add_argument("--target-errors", type=int, default=200,
                     help="stop a point after this many bit errors (0 disables; default 200)")
    sim.add_argument("--seed", required=True, type=int)
    sim.add_argument("--dim", type=int, default=2, choices=[2, 4],
                     help="system dimension (pcmb only)")
    sim.add_argument("--generator", default=None,
                     help="generator file for pcmb with --dim 4")
    sim.add_argument("--out", required=True, help="output records path")
    sim.add_argument("--format", default="csv", choices=["csv", "json"])
    sim.add_argument("--workers", type=int, default=1,
                     help="worker threads (results are identical for any count)")
    sim.add_argument("--no-noise", action="store_true",
                     help="disable noise (validation mode; BER must be 0)")
    sim.add_argument("--timing", action="store_true",
                     help="write measured wall time into elapsed_seconds "
                          "(makes files non-reproducible)")
    sim.add_argument("--plot", nargs="?", const="auto", default=None, metavar="PATH",
                     help="also render the BER curve (default: next to --out)")
    sim.set_defaults(fn=_cmd_simulate)

    val = sub.add_parser("validate", help="run the invariant self-check suite")
    val.add_argument("--trials", type=int, default=2000,
                     help="decoder-oracle agreement trials")
    val.add_argument("--channels", type=int, default=20_000,
                     help="random channels for the realness check")
    val.add_argument("--seed", type=int, default=1)
    val.set_defaults(fn=_cmd_validate)

    comp = sub.add_parser("complexity", help="node-count distribution report")
    comp.add_argument("--scheme", required=True, choices=["gcmb", "gc-ml", "pcmb"])
    comp.add_argument("--mod", required=True, type=int, choices=[4, 16, 64, 256])
    comp.add_argument("--trials", required=True, type=int, help="trials per SNR point")
    comp.add_argument("--snr-db", type=float, nargs="+", default=[0.0, 10.0, 20.0])
    comp.add_argument("--seed", type=int, default=1)
    comp.add_argument("--dim", type=int, default=2, choices=[2, 4])
    comp.add_argument("--generator", default=None)
    comp.add_argument("--workers", type=int, default=1)
    comp.add_argument("--out", default=None, help="also write the report as JSON")
    comp.add_argument("--plot", default=None, metavar="PATH",
                      help="render the histogram to an image file")
    comp.set_defaults(fn=_cmd_complexity)

    plo = sub.add_parser("plot", help="render BER curves from CSV records")
    plo.add_argument("--records", nargs="+", required=True, help="CSV files from simulate")
    plo.add_argument("--out", required=True, help="image path")
    plo.add_argument("--title", default=None)
    plo.set_defaults(fn=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
