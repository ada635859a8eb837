"""Command-line entry point: ``hybridce {sweep,verify,codebook,demo}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from . import quantization as qz
from . import verification as vf
from .config import ConfigError, SystemConfig, format_bits

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="master seed (non-negative integer)")
    p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials, overrides the config")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridce", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", help="run an NMSE sweep described by a TOML config")
    p.add_argument("--config", required=True, type=Path)
    _add_common(p)
    p.add_argument("--out", type=Path, default=None, help="output file; stdout when omitted")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--mode", choices=[m.value for m in harness.SimulationMode], default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--no-figure", action="store_true", help="skip the PNG next to --out")

    p = sub.add_parser("verify", help="run the statistical self-check suites")
    _add_common(p)

    p = sub.add_parser("codebook", help="dump Lloyd-Max quantizer levels")
    p.add_argument("--bits", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("demo", help="small end-to-end run printing an NMSE table")
    _add_common(p)
    p.add_argument("--mode", choices=[m.value for m in harness.SimulationMode], default=None)
    return parser


def _check_seed_trials(args):
    if args.seed is not None and args.seed < 0:
        raise ConfigError("--seed must be non-negative")
    if args.trials is not None and args.trials < 1:
        raise ConfigError("--trials must be positive")


def cmd_sweep(args) -> int:
    spec = harness.load_spec(args.config)
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.mode is not None:
        changes["mode"] = args.mode
    if args.workers is not None:
        changes["workers"] = args.workers
    spec = spec.replace(**changes)
    records = harness.run_experiment(spec)
    if args.out is None:
        text = harness.records_to_csv(records) if args.format == "csv" else harness.records_to_json(records)
        sys.stdout.write(text)
        return EXIT_OK
    script = harness.emit_results(records, args.out, args.format)
    print(f"wrote {args.out} and {script}")
    if not args.no_figure:
        from .plotting import render_nmse_figure

        figure = render_nmse_figure(records, args.out.with_suffix(".png"), title=f"{spec.channel_kind.value} channel")
        print(f"wrote {figure}")
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = 0 if args.seed is None else args.seed
    trials = 1000 if args.trials is None else args.trials
    reports = []
    for noise_var in (0.1, 1.0):
        for bits in (1, 2, 3):
            r = vf.verify_effective_noise(vf.EFFECTIVE_NOISE_CONFIG.replace(noise_var=noise_var), bits, trials, rng=[seed, 1, bits, int(noise_var * 10)])
            reports.append((f"effective_noise b={bits} noise_var={noise_var}", r.passed, f"relative_error={r.relative_error:.4f}"))
    r = vf.verify_isotropy(vf.EFFECTIVE_NOISE_CONFIG, trials, rng=[seed, 2])
    reports.append(("isotropy", r.passed, f"max_relative_error={r.max_relative_error:.4f}"))
    r = vf.verify_stationarity(100, rng=[seed, 3])
    reports.append(("stationarity", r.passed, f"max_relative_gradient={r.max_relative_gradient:.2e}"))
    r = vf.verify_global_optimality(20, rng=[seed, 4])
    reports.append(("global_optimality", r.passed, f"max_improvement={r.max_improvement:.2e}"))
    r = vf.verify_mse_consistency(10, 10_000, rng=[seed, 5])
    reports.append(("mse_consistency", r.passed, f"max_relative_error={r.max_relative_error:.4f}"))
    ok = True
    for name, passed, detail in reports:
        print(f"{'PASS' if passed else 'FAIL'}  {name:<32} {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_codebook(args) -> int:
    books = [qz.build_codebook(b).to_dict() for b in args.bits]
    for b in books:
        b["table_distortion"] = qz.distortion_factor(b["bits"])
    text = json.dumps(books, indent=2) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    return EXIT_OK


DEMO_SYSTEM = SystemConfig(n_t=8, n_r=8, n_rf_t=2, n_rf_r=2, num_subcarriers=8, num_taps=2, pilot_power=1.0, channel_var=1.0)


def cmd_demo(args) -> int:
    spec = harness.ExperimentSpec(
        system=DEMO_SYSTEM,
        channel_kind="sparse",
        num_paths=2,
        snr_grid_db=(0.0, 10.0, 20.0),
        bits_grid=(1, 3, "inf"),
        estimators=("ProposedLMMSE", "ProposedOMP_LMMSE", "UnawareLMMSE"),
        trials=20 if args.trials is None else args.trials,
        master_seed=0 if args.seed is None else args.seed,
        mode="nonlinear" if args.mode is None else args.mode,
    )
    records = harness.run_experiment(spec)
    print(f"{'estimator':<20}{'bits':>6}{'snr_db':>8}{'nmse':>12}{'stderr':>12}")
    for r in records:
        print(f"{r.estimator:<20}{format_bits(r.bits):>6}{r.snr_db:>8.1f}{r.nmse_mean:>12.5f}{r.nmse_stderr:>12.5f}")
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "verify": cmd_verify, "codebook": cmd_codebook, "demo": cmd_demo}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if hasattr(args, "seed"):
            _check_seed_trials(args)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"hybridce: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - top-level runtime failure
        print(f"hybridce: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
