"""Command line entry point: ``run``, ``simulate`` and ``check``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigInvalid, InfeasibleTarget, IoFailure, NonPDPsi
from .pipeline import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, default_config, load_config, run_pipeline
from .synth import GeneratorSpec, simulate_couple_dataset, write_bundle

log = logging.getLogger("tolerance_index")


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigInvalid as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        result = run_pipeline(cfg)
    except IoFailure as exc:
        log.error("%s", exc)
        return EXIT_STAGE
    if result.error is not None:
        log.error("%s", result.error)
    else:
        log.info("reports written to %s", result.output_dir)
    return result.exit_code


def _cmd_check(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigInvalid as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    log.info("config OK: %d regression(s), %d probit(s), output to %s", len(cfg.regressions), len(cfg.probits), cfg.output_dir)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    try:
        raw = json.loads(Path(args.spec).read_text(encoding="utf-8")) if args.spec else {}
        spec = GeneratorSpec.from_dict(raw)
    except (OSError, ValueError, NonPDPsi) as exc:
        log.error("generator spec error: %s", exc)
        return EXIT_CONFIG
    try:
        bundle = simulate_couple_dataset(spec)
    except InfeasibleTarget as exc:
        log.error("%s", exc)
        return EXIT_STAGE
    paths = write_bundle(bundle, args.out, default_config())
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tolerance-index", description=__doc__)
    parser.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("check", help="validate a config without running it")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("simulate", help="write a synthetic survey/diary bundle")
    p.add_argument("--spec", help="JSON generator spec (fields override defaults)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
