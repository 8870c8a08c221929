"""Command-line entry point.

Exit codes: 0 on success, 1 for configuration errors, 2 for I/O errors.
--config accepts either a JSON file path or a packaged preset name (S1..S6).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, pipeline
from .scenario import ConfigError, ScenarioConfig, load_config, preset_names, preset_path

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def _resolve_config(value: str) -> tuple[ScenarioConfig, str]:
    path = Path(value)
    if path.is_file():
        return load_config(path), path.stem
    if value in preset_names():
        return load_config(preset_path(value)), value
    raise ConfigError(
        f"config {value!r} is neither a file nor a preset ({', '.join(preset_names())})"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedcell",
        description="Synthetic small-cell telemetry, fault labeling, and "
        "centralized-vs-federated training.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_config: bool = True, with_dump: bool = False):
        if with_config:
            p.add_argument(
                "--config",
                required=True,
                help="scenario config JSON file or preset name (S1..S6)",
            )
        p.add_argument("--out", required=True, help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override the config master_seed")
        if with_dump:
            p.add_argument(
                "--dump-predictions",
                action="store_true",
                help="also write per-window prediction CSVs",
            )

    add_common(sub.add_parser("simulate", help="generate telemetry CSV plus fault sidecar"))
    add_common(sub.add_parser("encode", help="simulate and export the labeled window dataset"))
    add_common(
        sub.add_parser("train-central", help="train one model on the pooled data"),
        with_dump=True,
    )
    add_common(
        sub.add_parser("train-fed", help="run federated rounds across per-gNB clients"),
        with_dump=True,
    )
    add_common(
        sub.add_parser("compare", help="run both pipelines on identical data and report the gap"),
        with_dump=True,
    )
    add_common(
        sub.add_parser("sweep", help="run compare across all packaged presets"),
        with_config=False,
        with_dump=True,
    )
    return parser


def _run(args: argparse.Namespace) -> None:
    if args.command == "sweep":
        res = pipeline.cmd_sweep(
            args.out, seed_override=args.seed, dump_predictions=args.dump_predictions
        )
        for row in res["rows"]:
            print(f"{row['scenario']} {row['mode']}: exact-match {row['exact_match']:.3f}")
        return
    cfg, name = _resolve_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.command == "simulate":
        paths = pipeline.cmd_simulate(cfg, args.out, name)
        print(f"wrote {paths['telemetry']} and {paths['faults']}")
    elif args.command == "encode":
        paths = pipeline.cmd_encode(cfg, args.out, name)
        print(f"wrote {paths['dataset']}")
    elif args.command == "train-central":
        res = pipeline.cmd_train_central(cfg, args.out, name, args.dump_predictions)
        print(f"centralized exact-match {res['metrics'].exact_match:.3f}")
    elif args.command == "train-fed":
        res = pipeline.cmd_train_fed(cfg, args.out, name, args.dump_predictions)
        print(f"federated exact-match {res['metrics'].exact_match:.3f}")
    elif args.command == "compare":
        res = pipeline.cmd_compare(cfg, args.out, name, args.dump_predictions)
        print(
            f"centralized {res['centralized'].exact_match:.3f} "
            f"federated {res['federated'].exact_match:.3f} "
            f"gap {res['report']['exact_match_gap']:+.3f}"
        )
    else:  # pragma: no cover - argparse enforces the choices
        raise AssertionError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
