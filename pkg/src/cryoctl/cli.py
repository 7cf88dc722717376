"""Command-line entry point.

Exit codes: 0 success, 2 missing file / parse error / bad arguments,
3 configuration or invariant violation (the message names the module).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import scenario
from .errors import CryoCtlError, ParseError

log = logging.getLogger("cryoctl")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3


def _write(out_dir: Path, files: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text)


def _select(files: dict[str, str], fmt: str | None) -> dict[str, str]:
    if fmt is None:
        return files
    return {k: v for k, v in files.items() if k.endswith("." + fmt)}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cryoctl", description="Cryogenic qubit control system simulator")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scenario YAML file or shipped scenario name")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--out-dir", type=Path, default=Path("out"))
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="restrict written files to one format")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the full control/readout/feedback loop")
    sub.add_parser("calibrate", parents=[common], help="calibrate the discriminator")
    sw = sub.add_parser("sweep", parents=[common], help="sweep one parameter")
    sw.add_argument("--param", required=True)
    sw.add_argument("--values", required=True, help="comma-separated values")
    pr = sub.add_parser("power-report", parents=[common], help="per-block power accounting")
    pr.add_argument("--ungated", action="store_true", help="report every block without gating")
    sub.add_parser("fdma-plan", parents=[common], help="FDMA channel plan")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        path = scenario.resolve_config_path(args.config)
        sc = scenario.load_scenario(path, args.seed)
        if args.command == "simulate":
            result = scenario.simulate(sc)
            _write(args.out_dir, _select(result.files, args.format))
            bad = [k for k, ok in result.report["consistency"].items() if not ok]
            if bad:
                print(f"error [cli-harness]: report consistency checks failed: {', '.join(bad)}",
                      file=sys.stderr)
                return EXIT_INVALID
        elif args.command == "calibrate":
            result = scenario.calibrate_only(sc)
            _write(args.out_dir, _select(result.files, args.format))
        elif args.command == "sweep":
            if args.param not in scenario.SWEEPABLE:
                print(f"error: unknown sweep parameter {args.param!r}; valid: "
                      f"{', '.join(scenario.SWEEPABLE)}", file=sys.stderr)
                return EXIT_USAGE
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            if not values:
                print("error: --values is empty", file=sys.stderr)
                return EXIT_USAGE
            header, rows = scenario.sweep(sc, args.param, values)
            text = scenario.sweep_csv(header, rows)
            files = {f"sweep_{args.param}.csv": text}
            if args.format == "json":
                files = {f"sweep_{args.param}.json": scenario.dump_json([dict(zip(header, r)) for r in rows])}
            _write(args.out_dir, files)
        elif args.command == "power-report":
            from .power import GatingMode
            result = scenario.power_only(sc, GatingMode.NONE if args.ungated else None)
            _write(args.out_dir, _select(result.files, args.format))
        elif args.command == "fdma-plan":
            result = scenario.fdma_only(sc)
            _write(args.out_dir, _select(result.files, args.format))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"error [sequencer]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CryoCtlError as exc:
        print(f"error [{exc.module}]: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"wrote results to {args.out_dir}")
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
