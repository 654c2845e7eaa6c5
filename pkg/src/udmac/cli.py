"""Command-line front end.

    udmac validate-prob --preset paper-2023 --dim 1
    udmac throughput --seed 3 --jobs 4 --out results/
    udmac sim --set sim.n_scf=20 --set sim.freeze_slots=50 --protocol UD-MAC

Every run writes ``<command>.csv`` plus ``<command>.manifest.json`` into the
output directory (``--out``, else ``$UDMAC_OUT_DIR``, else ``output.dir``).

Exit codes: 0 success, 1 invalid configuration, 2 solver non-convergence,
3 I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import config as C
from . import experiments as X
from .solver import ConvergenceError

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3
OUT_ENV = "UDMAC_OUT_DIR"

COMMANDS = {
    "validate-prob": "closed-form vs Monte Carlo SCF probability",
    "throughput": "analytic and simulated throughput, UD-MAC vs VeMAC",
    "freeze-tradeoff": "per-mode throughput against the freezing period",
    "sim": "single simulation point per seed and protocol",
    "compare": "protocols side by side over sweep.n_scf_grid",
}


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; argparse would otherwise exit 2, the solver code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected section.key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI-style config file layered over the preset")
    common.add_argument("--preset", default="paper-2023", choices=sorted(C.PRESETS))
    common.add_argument("--seed", type=int, help="run a single seed (also the Monte Carlo seed)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    common.add_argument("--dim", type=int, action="append", choices=(1, 2, 3), help="repeatable")
    common.add_argument("--protocol", action="append", choices=("UD-MAC", "VeMAC"), help="repeatable")
    common.add_argument(
        "--set", dest="overrides", action="append", type=_override, default=[],
        metavar="SECTION.KEY=VALUE", help="override one config value (repeatable)",
    )

    parser = _Parser(prog="udmac", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides += [("sweep.seeds", str(args.seed)), ("montecarlo.seed", str(args.seed))]
    if args.dim:
        overrides.append(("sweep.dims", ",".join(str(d) for d in args.dim)))
    if args.protocol:
        overrides.append(("sweep.protocols", ",".join(args.protocol)))
    cfg = C.load_config(args.config, args.preset, overrides)
    if args.jobs < 1:
        raise C.ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    return cfg


def output_dir(args: argparse.Namespace, cfg: dict) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or cfg["output"]["dir"])


def execute(args: argparse.Namespace) -> list[Path]:
    cfg = resolve(args)
    t_key = "freeze_t_grid" if args.command == "freeze-tradeoff" else "t_grid"
    out = output_dir(args, cfg)
    spec = C.sweep_spec(cfg, str(out), t_key=t_key)
    stem = args.command.replace("-", "_")
    written = []

    if args.command == "validate-prob":
        cols, rows, scols, srows = X.cmd_validate_probability(cfg, spec, args.jobs)
        for dim, points, max_err, max_p, frac in srows:
            print(f"dim={dim} points={points} max_abs_err={max_err:.6f} max_p={max_p:.6f} within_4se={frac:.3f}")
        summary = out / f"{stem}_summary.csv"
        X.write_csv(summary, scols, srows)
        written.append(summary)
    else:
        fn = {
            "throughput": X.cmd_throughput,
            "freeze-tradeoff": X.cmd_freeze_tradeoff,
            "sim": X.cmd_sim,
            "compare": X.cmd_compare,
        }[args.command]
        cols, rows = fn(cfg, spec, args.jobs)

    main_csv = out / f"{stem}.csv"
    X.write_csv(main_csv, cols, rows)
    written.insert(0, main_csv)
    X.write_manifest(out / f"{stem}.manifest.json", args.command, cfg, spec, written)
    print(f"wrote {len(rows)} rows to {main_csv}")
    return written


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        execute(args)
    except ConvergenceError as exc:
        print(f"error: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
