"""Command-line front end.

Exit codes: 0 success, 1 tolerance or audit failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import experiments
from .errors import AuditFailure, ConfigError, HorizonError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

log = logging.getLogger("repinsure")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="repinsure", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    rp = sub.add_parser("reproduce", help="recompute a published table and check it")
    rp.add_argument("table", choices=[*experiments.TABLE_IDS, "insurance"])
    rp.add_argument("--simulate", action="store_true", help="add Monte Carlo estimates")
    rp.add_argument("--runs", type=int, default=10_000)
    rp.add_argument("--seed", type=int, default=0)
    rp.add_argument("-o", "--output", type=Path, help="CSV file (default: stdout)")

    for name, helptext in (
        ("run", "run a parameter sweep and write CSV"),
        ("compare", "analytic vs simulated z-scores"),
        ("price", "insurance price, deposit threshold and clearing time"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", type=Path)
        p.add_argument("--seed", type=int, help="override sim.seed")
        if name == "run":
            p.add_argument("-o", "--output", type=Path, help="override output.path")
            p.add_argument("-j", "--jobs", type=int, default=1, help="parallel sweep points")
            p.add_argument("--timing", action="store_true", help="fill the runtime_s column")
    return ap


def _write(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    if not path.is_absolute():
        path = Path(os.environ.get(experiments.OUTPUT_DIR_ENV, ".")) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log.info("wrote %s", path)


def _reproduce(args) -> int:
    res = experiments.reproduce_table(args.table, simulate=args.simulate, runs=args.runs, seed=args.seed)
    _write(res.to_csv(), args.output)
    n_bad = len(res.failures)
    log.info("%s: %d cells, %d outside tolerance, %.2f s", res.table_id, len(res.rows), n_bad, res.runtime_s)
    if n_bad:
        print(res.diff_report(), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _run(args) -> int:
    cfg = experiments.load_config(args.config, seed=args.seed)
    if args.timing:
        cfg = experiments.dataclasses.replace(cfg, record_runtime=True)
    output = args.output
    if output is not None and not output.is_absolute():
        output = Path(os.environ.get(experiments.OUTPUT_DIR_ENV, ".")) / output
    path = experiments.run_experiment(cfg, jobs=args.jobs, output=output)
    log.info("wrote %s", path)
    return EXIT_OK


def _compare(args) -> int:
    cfg = experiments.load_config(args.config, seed=args.seed)
    rows = experiments.compare(cfg)
    print(experiments.format_comparison(rows))
    flagged = sum(r.flagged for r in rows)
    if flagged:
        print(f"{flagged} of {len(rows)} measures exceed z = 3", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _price(args) -> int:
    cfg = experiments.load_config(args.config, seed=args.seed)
    for rep in experiments.price(cfg):
        label = " ".join(f"{k}={v}" for k, v in rep.point.items()) or "base"
        print(f"[{label}]")
        print(f"max_insurance_price = {rep.max_insurance_price:.10g}")
        print(f"min_deposit_threshold(epsilon={rep.epsilon:g}) = {rep.min_deposit_threshold:.10g}")
        print(f"min_clearing_time = {rep.min_clearing_time:.10g}")
        for msg in rep.warnings:
            print(f"warning: {msg}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    handler = {"reproduce": _reproduce, "run": _run, "compare": _compare, "price": _price}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AuditFailure, HorizonError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
