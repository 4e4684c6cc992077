"""Single runs: integrate, sample diagnostics, write artifacts, grade checks."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dynamics import EulerPoisson
from .virial import SERIES_KEYS, Virial, VirialProbe, add_numeric_derivatives

logger = logging.getLogger(__name__)

MASS_FLOOR = 1e-10
MODES = ("simulate", "virial-slow", "virial-fast")


def series_header(n_radii: int) -> list[str]:
    cols = ["t", "E", "mass", *SERIES_KEYS]
    cols += [f"d{x}dt_a" for x in SERIES_KEYS] + [f"d{x}dt_n" for x in SERIES_KEYS]
    cols += ["loc_mass"]
    cols += [f"tail_nu_R{i}" for i in range(1, n_radii + 1)]
    cols += [f"tail_phi_R{i}" for i in range(1, n_radii + 1)]
    return cols


@dataclass
class RunResult:
    exit_code: int
    summary: dict
    record: object
    out_dir: Path


def _clean(x):
    """JSON-safe scalar: non-finite floats become ``null``."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    return x


def _margins(num, loc):
    ok = loc >= MASS_FLOOR
    if not np.any(ok):
        return math.nan, math.nan
    m = num[ok] / loc[ok]
    return float(m.min()), float(m.max())


def derivative_mismatch(record, key: str) -> float:
    """Worst ``|numeric - analytic| / max(1, |analytic|)`` over interior samples."""
    if len(record) < 3:
        return math.nan
    a = record[f"d{key}dt_a"][1:-1]
    n = record[f"d{key}dt_n"][1:-1]
    return float(np.max(np.abs(n - a) / np.maximum(1.0, np.abs(a))))


def summarize(record, virial: Virial, law) -> dict:
    """Drifts, margin ranges and fitted constants of one run."""
    if len(record) == 0:
        return {"samples": 0}
    t = record["t"]
    E = record["E"]
    drift = np.abs(E - E[0])
    energy_drift = float(np.max(drift / E[0])) if E[0] > 0 else float(np.max(drift))
    loc = record["loc_mass"]
    A = virial.cfg.A
    sup_u, sup_n = float(np.max(record["u_l2"])), float(np.max(record["n_l2"]))
    integral = float(np.trapezoid(loc, t)) if len(t) > 1 else 0.0
    denom = A * sup_u * sup_n
    lo_speed = virial.cfg.path.speed_range()[0]
    sonic = law.thresholds().sonic
    fast = lo_speed > sonic and E[0] > 0
    mass_nu = record["u_l2"] ** 2 + record["n_l2"] ** 2
    ratio = record["energy_ratio"]
    ratio = ratio[mass_nu > 0]
    min_I, max_I = _margins(record["dIdt_a"], loc)
    min_L, max_L = _margins(-record["dLdt_a"], loc)
    return {
        "samples": len(record),
        "t_final": float(t[-1]),
        "energy_drift": energy_drift,
        "mass_drift": float(np.max(np.abs(record["mass"] - record["mass"][0]))),
        "momentum_drift": float(np.max(np.abs(record["momentum"] - record["momentum"][0]))),
        "min_energy_density": float(np.min(record["e_min"])),
        "derivative_mismatch": {k: derivative_mismatch(record, k) for k in SERIES_KEYS},
        "min_margin_I": min_I,
        "max_margin_I": max_I,
        "min_margin_L": min_L,
        "max_margin_L": max_L,
        "fitted": {
            "energy_equivalence_c1": float(ratio.min()) if ratio.size else math.nan,
            "energy_equivalence_c2": float(ratio.max()) if ratio.size else math.nan,
            "localized_mass_integral": integral,
            "avbound_C": integral / denom if denom > 0 else math.nan,
            "avbound2_C": float(integral * (lo_speed - sonic) / (A * E[0])) if fast else math.nan,
        },
    }


CHECKS = {
    # name: (mode set, summary getter, threshold key, comparison)
    "energy_drift": (MODES, lambda s: s["energy_drift"], "checks.energy_drift", "le"),
    "derivative_match": (
        MODES, lambda s: max(s["derivative_mismatch"].values()), "checks.derivative_match", "le",
    ),
    "min_margin_I": (("virial-slow",), lambda s: s["min_margin_I"], "checks.min_margin_I", "ge"),
    "avbound": (("virial-slow",), lambda s: s["fitted"]["avbound_C"], "checks.avbound", "le"),
    "min_margin_L": (("virial-fast",), lambda s: s["min_margin_L"], "checks.min_margin_L", "ge"),
    "avbound2": (("virial-fast",), lambda s: s["fitted"]["avbound2_C"], "checks.avbound2", "le"),
}


def grade(summary: dict, cfg: RunConfig, mode: str, error: str | None) -> dict:
    checks = {"run_completed": {"value": error, "pass": error is None}}
    if not summary.get("samples"):
        return checks
    for name, (modes, get, key, op) in CHECKS.items():
        threshold = cfg[key]
        if mode not in modes or threshold is None:
            continue
        value = get(summary)
        if value is None or not math.isfinite(value):
            # degenerate data (zero state, too few samples): nothing to grade
            checks[name] = {"value": None, "threshold": threshold, "pass": True, "degenerate": True}
            continue
        ok = value <= threshold if op == "le" else value >= threshold
        checks[name] = {"value": value, "threshold": threshold, "pass": bool(ok)}
    return checks


def run(cfg: RunConfig, mode: str = "simulate", out_dir=None) -> RunResult:
    """Integrate ``cfg`` and write ``series.csv``, ``summary.json``, ``config.echo``.

    The exit code is 0 iff every enabled check passes, 1 otherwise.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    out = Path(out_dir) if out_dir is not None else cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(cfg.echo(), encoding="utf-8")

    regime = {"virial-slow": "slow", "virial-fast": "fast"}.get(mode, "any")
    law = cfg.law()
    stepper = cfg.stepper()
    system = EulerPoisson(cfg.grid(), law, dealias=stepper.dealias)
    virial = Virial(system, cfg.virial(regime))
    radii = cfg["output.tail_radii"]
    probe = VirialProbe(virial, radii)

    s0 = cfg.initial_state()
    record = system.integrate(s0, stepper, [probe])
    add_numeric_derivatives(record)
    header = series_header(len(radii))
    if len(record):
        record.write_csv(out / "series.csv", header)

    summary = summarize(record, virial, law)
    summary.update(
        mode=mode,
        regime=virial.cfg.regime(law),
        A=virial.cfg.A,
        epsilon=virial.cfg.epsilon,
        seed=cfg["seed"],
        error=record.error,
    )
    checks = grade(summary, cfg, mode, record.error)
    summary["checks"] = checks
    failed = [k for k, v in checks.items() if not v["pass"]]
    summary["passed"] = not failed
    (out / "summary.json").write_text(
        json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for name in failed:
        logger.error("check failed: %s (%s)", name, checks[name].get("value"))
    return RunResult(0 if not failed else 1, summary, record, out)
