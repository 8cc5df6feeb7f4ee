"""Command-line entry point.

Subcommands
-----------
simulate   one trial, estimate printed as JSON
spectrum   per-frame spectra of the dual-chirp and baseline waveforms (CSV)
sweep      Monte Carlo NRMSE over the SNR grid (CSV)
validate   physics oracle suite (JSON report)
config     print a commented configuration template
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .errors import RydAfdmError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION_FAILED = 2
EXIT_IO = 3


def _load(args):
    if args.config is None:
        return harness.parse_config("")
    return harness.load_config(args.config)


def _output_dir(config, args):
    out = Path(args.output_dir or config.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args):
    config = _load(args)
    outcome = harness.run_trial(
        config, snr_db=args.snr_db, seed=args.seed, delta_c1=args.delta_c1,
        noise=False if args.no_noise else None,
    )
    report = outcome.as_dict()
    if outcome.ok:
        range_err, vel_err = outcome.errors(config.scenario)
        report["range_relative_error"] = range_err
        report["velocity_relative_error"] = vel_err
    print(json.dumps(report, indent=2))
    return EXIT_OK if outcome.ok else EXIT_ERROR


def cmd_spectrum(args):
    config = _load(args)
    path = Path(args.out) if args.out else _output_dir(config, args) / "spectrum.csv"
    seed = config.run.seed if args.seed is None else args.seed
    spectra = harness.export_spectrum(config, args.snr_db, seed, path,
                                      noise=False if args.no_noise else None)
    summary = {
        "path": str(path),
        "peaks_hz": {f"{s.variant}.{s.frame}": s.peak() for s in spectra},
        "bin_hz": spectra[0].bin_width,
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_sweep(args):
    config = _load(args)
    path = Path(args.out) if args.out else _output_dir(config, args) / "nrmse.csv"
    reports = harness.run_sweep(config, path)
    for rep in reports:
        for p in rep.points:
            logging.info("dc1=%g snr=%g range=%s velocity=%s failures=%d", rep.delta_c1,
                         p.snr_db, p.range_nrmse, p.velocity_nrmse, p.failures)
    print(str(path))
    return EXIT_OK


def cmd_validate(args):
    config = _load(args)
    report = harness.validate(config)
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["passed"] else EXIT_VALIDATION_FAILED


def cmd_config(args):
    print(harness.default_config_text())
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rydafdm", description="Dual-chirp AFDM sensing with a Rydberg receiver.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="configuration file (defaults if omitted)")
        p.add_argument("--seed", type=int, help="override the master seed")

    p = sub.add_parser("simulate", help="run one trial and print the estimate")
    common(p)
    p.add_argument("--snr-db", type=float, help="target average SNR in dB")
    p.add_argument("--delta-c1", type=float, help="use c1_b = c1_a + DELTA_C1")
    p.add_argument("--no-noise", action="store_true", help="disable noise injection")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="export frame spectra to CSV")
    common(p)
    p.add_argument("--snr-db", type=float, default=30.0)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("-o", "--out", help="CSV path (default OUTPUT_DIR/spectrum.csv)")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="Monte Carlo NRMSE sweep to CSV")
    p.add_argument("-c", "--config", help="configuration file (defaults if omitted)")
    p.add_argument("-o", "--out", help="CSV path (default OUTPUT_DIR/nrmse.csv)")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the physics oracle suite")
    p.add_argument("-c", "--config", help="configuration file (defaults if omitted)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("config", help="print a configuration template")
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RydAfdmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
