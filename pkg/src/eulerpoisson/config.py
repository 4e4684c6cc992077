"""Flat ``section.key = value`` run configuration.

Lines are ``key = value``; ``#`` starts a comment.  Unknown keys, duplicate
keys and malformed lines are rejected with their line number.  After
parsing, every physical constraint of the owning modules is re-checked by
constructing the corresponding objects.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constitutive import PressureLaw
from .dynamics import State, StepperConfig
from .spectral import Grid
from .virial import ObserverPath, VirialConfig
from .waveforms import NoSolitaryWave, find_phi_max, packet, solitary_profile

REQUIRED = object()
FILE_KEYS = ("init.file", "path.file", "output.dir")


class ConfigError(ValueError):
    """Invalid configuration text or values."""


def _float(s):
    return float(s)


def _int(s):
    return int(s)


def _str(s):
    return s


def _opt_float(s):
    return None if s.lower() in ("auto", "none", "off") else float(s)


def _path(s):
    return "" if s.lower() == "none" else s


def _float_list(s):
    if s.strip().lower() == "none":
        return ()
    return tuple(float(v) for v in s.replace(",", " ").split())


# key -> (parser, default)
SCHEMA = {
    "domain.length": (_float, REQUIRED),
    "domain.points": (_int, REQUIRED),
    "pressure.kind": (_str, REQUIRED),
    "pressure.k": (_float, 1.0),
    "pressure.gamma": (_opt_float, None),
    "pressure.coefficient": (_float, 1.0),
    "time.dt": (_opt_float, None),
    "time.cfl": (_float, 0.4),
    "time.t_end": (_float, REQUIRED),
    "time.probe_stride": (_int, 4),
    "time.adaptive": (_str, "false"),
    "time.dealias": (_str, "true"),
    "init.kind": (_str, REQUIRED),
    "init.amplitude": (_float, 0.01),
    "init.width": (_float, 2.0),
    "init.center": (_float, 0.0),
    "init.velocity": (_str, "still"),
    "init.c": (_opt_float, None),
    "init.c_over_sonic": (_opt_float, None),
    "init.file": (_path, ""),
    "virial.A": (_float, 50.0),
    "virial.epsilon": (_opt_float, None),
    "path.kind": (_str, "static"),
    "path.c": (_float, 0.0),
    "path.y0": (_float, 0.0),
    "path.file": (_path, ""),
    "output.dir": (_str, "run"),
    "output.tail_radii": (_float_list, ()),
    "checks.energy_drift": (_opt_float, 1e-6),
    "checks.derivative_match": (_opt_float, 1e-6),
    "checks.min_margin_I": (_opt_float, 0.02),
    "checks.min_margin_L": (_opt_float, 0.05),
    "checks.avbound": (_opt_float, 10.0),
    "checks.avbound2": (_opt_float, None),
    "seed": (_int, 0),
}


def _bool(key, s):
    v = s.strip().lower()
    if v in ("true", "yes", "1", "on"):
        return True
    if v in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {s!r}")


def _fmt(v, key=""):
    if v is None:
        return "off" if key.startswith("checks.") else "auto"
    if v == "" or v == ():
        return "none"
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration; ``values`` maps every schema key to a value."""

    values: dict
    base_dir: Path = Path(".")

    def __getitem__(self, key):
        return self.values[key]

    def with_value(self, key: str, text: str) -> "RunConfig":
        """Copy with one key overridden from its text form (re-validated)."""
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        raw = {k: _fmt(v, k) for k, v in self.values.items()}
        raw[key] = text
        return _build(raw, self.base_dir)

    def echo(self) -> str:
        """Every key with its resolved value; file paths are made absolute."""
        out = dict(self.values)
        for key in FILE_KEYS:
            if out[key]:
                out[key] = str(self._resolve(out[key]).resolve())
        return "".join(f"{k} = {_fmt(out[k], k)}\n" for k in SCHEMA)

    def output_dir(self) -> Path:
        return self._resolve(self["output.dir"])

    # object builders ------------------------------------------------------

    def grid(self) -> Grid:
        return Grid(self["domain.length"], self["domain.points"])

    def law(self) -> PressureLaw:
        kind = self["pressure.kind"]
        if kind == "isothermal":
            return PressureLaw.isothermal(self["pressure.k"])
        if kind == "polytropic":
            if self["pressure.gamma"] is None:
                raise ConfigError("polytropic pressure needs pressure.gamma")
            return PressureLaw.polytropic(self["pressure.gamma"], self["pressure.coefficient"])
        raise ConfigError(f"pressure.kind must be isothermal or polytropic, got {kind!r}")

    def stepper(self) -> StepperConfig:
        return StepperConfig(
            t_end=self["time.t_end"],
            dt=self["time.dt"],
            cfl=self["time.cfl"],
            dealias=_bool("time.dealias", self["time.dealias"]),
            adaptive=_bool("time.adaptive", self["time.adaptive"]),
            probe_stride=self["time.probe_stride"],
        )

    def init_speed(self) -> float | None:
        if self["init.c"] is not None:
            return self["init.c"]
        if self["init.c_over_sonic"] is not None:
            return self["init.c_over_sonic"] * self.law().thresholds().sonic
        return None

    def path(self) -> ObserverPath:
        kind = self["path.kind"]
        if kind == "sampled":
            table = _read_csv(self._resolve(self["path.file"]), min_cols=2)
            return ObserverPath("sampled", y0=self["path.y0"], samples=tuple(table.T))
        if kind == "matched":
            c = self.init_speed()
            if c is None:
                raise ConfigError("path.kind = matched needs init.c or init.c_over_sonic")
            return ObserverPath("constant-speed", c=c, y0=self["init.center"])
        return ObserverPath(kind, c=self["path.c"], y0=self["path.y0"])

    def virial(self, regime: str = "any") -> VirialConfig:
        law, path, A, eps = self.law(), self.path(), self["virial.A"], self["virial.epsilon"]
        if regime == "slow":
            return VirialConfig.slow(law, A, path, eps)
        if regime == "fast":
            return VirialConfig.fast(law, A, path, eps)
        return VirialConfig.resolve(law, A, path, eps)

    def _resolve(self, name: str) -> Path:
        if not name:
            raise ConfigError("a file path is required here")
        p = Path(name)
        return p if p.is_absolute() else self.base_dir / p

    def initial_state(self) -> State:
        g, kind = self.grid(), self["init.kind"]
        if kind in ("gaussian", "sech2"):
            return packet(
                g, kind, self["init.amplitude"], self["init.width"], self["init.center"],
                self["init.velocity"], self.law(),
            )
        if kind == "solitary":
            prof = solitary_profile(self.init_speed(), self.law(), g)
            s = prof.state()
            if self["init.center"]:
                s = State(g.translate(s.n, self["init.center"]), g.translate(s.u, self["init.center"]))
            return s
        if kind == "file":
            table = _read_csv(self._resolve(self["init.file"]), min_cols=3)
            if table.shape[0] != g.points:
                raise ConfigError(
                    f"init.file has {table.shape[0]} rows, the grid has {g.points} points"
                )
            if not np.allclose(table[:, 0], g.x, rtol=0.0, atol=1e-9 * g.length):
                raise ConfigError("init.file x column does not match the grid nodes")
            return State(table[:, 1].copy(), table[:, 2].copy())
        raise ConfigError(f"init.kind must be gaussian, sech2, solitary or file, got {kind!r}")


def _read_csv(path: Path, min_cols: int) -> np.ndarray:
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed CSV ({exc})") from exc
    if table.shape[1] < min_cols:
        raise ConfigError(f"{path}: expected at least {min_cols} columns")
    return table


def _validate(cfg: RunConfig):
    try:
        g = cfg.grid()
        law = cfg.law()
        cfg.stepper()
        path = cfg.path()
        cfg.virial()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    for R in cfg["output.tail_radii"]:
        if not 0 < R < 0.5 * g.length:
            raise ConfigError(f"output.tail_radii: R = {R} must lie in (0, length/2)")
    if path.kind == "sampled" and path.samples[0][0] > 0:
        raise ConfigError("path.file must start at t <= 0")
    kind = cfg["init.kind"]
    try:
        if kind in ("gaussian", "sech2"):
            packet(g, kind, cfg["init.amplitude"], cfg["init.width"], cfg["init.center"],
                   cfg["init.velocity"], law)
        elif kind == "solitary":
            c = cfg.init_speed()
            if c is None:
                raise ConfigError("init.kind = solitary needs init.c or init.c_over_sonic")
            find_phi_max(c, law)
        elif kind == "file":
            cfg.initial_state()  # row count and node positions checked against the grid
        else:
            raise ConfigError(f"init.kind must be gaussian, sech2, solitary or file, got {kind!r}")
    except NoSolitaryWave as exc:
        raise ConfigError(f"init: {exc}") from exc
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"init: {exc}") from exc


def _build(raw: dict, base_dir: Path) -> RunConfig:
    missing = [k for k, (_, d) in SCHEMA.items() if d is REQUIRED and k not in raw]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))
    values = {}
    for key, (parse, default) in SCHEMA.items():
        if key in raw:
            try:
                values[key] = parse(raw[key])
            except ValueError as exc:
                raise ConfigError(f"{key}: cannot parse {raw[key]!r} ({exc})") from exc
        else:
            values[key] = default
    cfg = RunConfig(values, base_dir)
    _validate(cfg)
    # resolve automatic epsilon so the echo is fully explicit
    values["virial.epsilon"] = cfg.virial().epsilon
    return cfg


def parse_config(text: str, base_dir=".") -> RunConfig:
    raw, where = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first on line {where[key]})")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        raw[key], where[key] = value, lineno
    try:
        return _build(raw, Path(base_dir))
    except ConfigError as exc:
        key = next((k for k in where if str(exc).startswith(k)), None)
        if key is not None:
            raise ConfigError(f"line {where[key]}: {exc}") from exc
        raise


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)
