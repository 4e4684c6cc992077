"""Command-line entry point ``eulerpoisson``.

Exit codes: 0 all enabled checks passed, 1 a check failed, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .constitutive import PressureLaw
from .properties import run_all
from .runner import MODES, run
from .spectral import Grid
from .waveforms import NoSolitaryWave, solitary_profile

SOLITARY_TOL = 1e-8
SWEEP_COLUMNS = (
    "value", "exit_code", "energy_drift", "min_margin_I", "max_margin_I",
    "min_margin_L", "max_margin_L", "avbound_C", "avbound2_C",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eulerpoisson", description="Euler-Poisson simulations and virial diagnostics.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, text in (
        ("simulate", "single run; writes series.csv, summary.json, config.echo"),
        ("virial-slow", "slow-regime run checking the I margin and the averaged bound"),
        ("virial-fast", "fast-regime run checking the L margin"),
    ):
        s = sub.add_parser(name, help=text, description=text)
        s.add_argument("config", type=Path)
        s.add_argument("--out", type=Path, help="artifact directory (default: output.dir)")

    s = sub.add_parser("solitary", help="solitary-wave profile as CSV plus residual report")
    s.add_argument("--k", type=float, default=1.0, help="isothermal p'(1)")
    s.add_argument("--c-over-sonic", type=float, required=True)
    s.add_argument("--length", type=float, default=160.0)
    s.add_argument("--points", type=int, default=2048)
    s.add_argument("--out", type=Path, default=Path("solitary"))

    s = sub.add_parser("poisson-test", help="randomized resolvent and potential-solve suite")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path, help="also write the JSON report here")

    s = sub.add_parser("sweep", help="parallel sweep of one config key")
    s.add_argument("--vary", required=True, help="config key, e.g. path.c")
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--mode", choices=MODES, default="simulate")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out", type=Path, help="sweep directory (default: output.dir)")
    s.add_argument("config", type=Path)
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run(cfg, args.command, args.out)
    _report_checks(result.summary)
    return result.exit_code


def _report_checks(summary):
    for name, chk in summary["checks"].items():
        status = "PASS" if chk["pass"] else "FAIL"
        print(f"{status} {name}: {chk.get('value')}")


def _cmd_solitary(args) -> int:
    law = PressureLaw.isothermal(args.k)
    c = args.c_over_sonic * law.thresholds().sonic
    try:
        prof = solitary_profile(c, law, Grid(args.length, args.points))
    except NoSolitaryWave as exc:
        print(f"no solitary wave: {exc}", file=sys.stderr)
        return 1
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    x = prof.grid.x
    _write_columns(out / "profile.csv", ("x", "n", "u"), (x, prof.n, prof.u))
    _write_columns(out / "potential.csv", ("x", "phi"), (x, prof.phi))
    report = {
        "k": args.k,
        "c": c,
        "c_over_sonic": args.c_over_sonic,
        "phi_max": prof.phi_max,
        "n_max": float(np.max(prof.n)),
        "residuals": prof.residuals,
        "residual": prof.residual,
        "pass": prof.residual <= SOLITARY_TOL,
    }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(json.dumps(report, indent=2))
    return 0 if report["pass"] else 1


def _write_columns(path, header, cols):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def _cmd_poisson_test(args) -> int:
    if args.samples < 1:
        raise ConfigError("--samples must be positive")
    report = run_all(args.samples, args.seed)
    text = json.dumps(report, indent=2)
    if args.out:
        args.out.write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0 if all(report["checks"].values()) else 1


def _sweep_member(job):
    config_path, key, value, mode, out = job
    cfg = load_config(config_path).with_value(key, value)
    result = run(cfg, mode, out)
    s = result.summary
    fitted = s.get("fitted", {})
    return {
        "value": value,
        "exit_code": result.exit_code,
        "energy_drift": s.get("energy_drift"),
        "min_margin_I": s.get("min_margin_I"),
        "max_margin_I": s.get("max_margin_I"),
        "min_margin_L": s.get("min_margin_L"),
        "max_margin_L": s.get("max_margin_L"),
        "avbound_C": fitted.get("avbound_C"),
        "avbound2_C": fitted.get("avbound2_C"),
    }


def _cmd_sweep(args) -> int:
    base = load_config(args.config)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values is empty")
    for v in values:
        base.with_value(args.vary, v)  # validate every member before launching
    root = args.out or base.output_dir()
    root.mkdir(parents=True, exist_ok=True)
    jobs = [
        (args.config, args.vary, v, args.mode, root / f"{args.vary}={v}") for v in values
    ]
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        rows = list(pool.map(_sweep_member, jobs))
    with open(root / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=("key",) + SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({"key": args.vary, **{k: _cell(row[k]) for k in SWEEP_COLUMNS}})
    for row in rows:
        print(", ".join(f"{k}={_cell(row[k])}" for k in SWEEP_COLUMNS))
    return max(r["exit_code"] for r in rows)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


COMMANDS = {
    "simulate": _cmd_run,
    "virial-slow": _cmd_run,
    "virial-fast": _cmd_run,
    "solitary": _cmd_solitary,
    "poisson-test": _cmd_poisson_test,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # regime preconditions (e.g. slow run with a fast path)
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
