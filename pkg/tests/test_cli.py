import csv
import json
import math

import numpy as np
import pytest

from eulerpoisson.cli import main
from eulerpoisson.config import parse_config
from eulerpoisson.runner import run, series_header

SMALL = """\
domain.length = 80
domain.points = 512
pressure.kind = isothermal
pressure.k = 1
time.t_end = 2
init.kind = gaussian
init.amplitude = {amp}
init.width = 2
virial.A = 20
path.kind = static
output.tail_radii = 10, 20
seed = 3
"""


def _write(tmp_path, amp=0.01, extra=""):
    p = tmp_path / "run.cfg"
    p.write_text(SMALL.format(amp=amp) + extra)
    return p


def _read_series(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_zero_amplitude_run(tmp_path, capsys):
    cfg = _write(tmp_path, amp=0.0)
    out = tmp_path / "zero"
    assert main(["simulate", str(cfg), "--out", str(out)]) == 0
    header, data = _read_series(out / "series.csv")
    assert header == series_header(2)
    assert not np.any(data[:, 1:])
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"]
    assert (out / "config.echo").exists()


def test_simulate_artifacts(tmp_path):
    cfg = _write(tmp_path)
    out = tmp_path / "sim"
    assert main(["simulate", str(cfg), "--out", str(out)]) == 0
    header, data = _read_series(out / "series.csv")
    assert header[:16] == [
        "t", "E", "mass", "J", "K", "I", "L", "dJdt_a", "dKdt_a", "dIdt_a", "dLdt_a",
        "dJdt_n", "dKdt_n", "dIdt_n", "dLdt_n", "loc_mass",
    ]
    assert header[16:] == ["tail_nu_R1", "tail_nu_R2", "tail_phi_R1", "tail_phi_R2"]
    assert data[-1, 0] == pytest.approx(2.0)
    s = json.loads((out / "summary.json").read_text())
    assert s["energy_drift"] <= 1e-6
    assert s["min_margin_I"] > 0
    assert set(s["derivative_mismatch"]) == {"J", "K", "I", "L"}


def test_failed_check_exits_one(tmp_path):
    cfg = _write(tmp_path, extra="checks.energy_drift = 1e-30\n")
    out = tmp_path / "strict"
    assert main(["simulate", str(cfg), "--out", str(out)]) == 1
    s = json.loads((out / "summary.json").read_text())
    assert not s["checks"]["energy_drift"]["pass"]


def test_fast_run(tmp_path):
    extra = "path.kind = constant-speed\npath.c = 2.8284271247461903\n"
    cfg = _write(tmp_path, amp=0.005, extra="").read_text().replace("path.kind = static\n", extra)
    p = tmp_path / "fast.cfg"
    p.write_text(cfg)
    out = tmp_path / "fast"
    assert main(["virial-fast", str(p), "--out", str(out)]) == 0
    s = json.loads((out / "summary.json").read_text())
    assert s["regime"] == "fast"
    assert s["min_margin_L"] > 0.05
    assert math.isfinite(s["fitted"]["avbound2_C"])


def test_slow_run_rejects_fast_path(tmp_path, capsys):
    cfg = _write(tmp_path, extra="").read_text().replace(
        "path.kind = static\n", "path.kind = constant-speed\npath.c = 3\n"
    )
    p = tmp_path / "bad.cfg"
    p.write_text(cfg)
    assert main(["virial-slow", str(p), "--out", str(tmp_path / "x")]) == 2


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["solitary", "--bogus"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_config_error_exit_two(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("domain.length = 80\nwhat = 1\n")
    assert main(["simulate", str(p)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_help_on_every_subcommand(capsys):
    for cmd in ("simulate", "virial-slow", "virial-fast", "solitary", "poisson-test", "sweep"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0


def test_solitary_subcommand(tmp_path, capsys):
    out = tmp_path / "sol"
    assert main(["solitary", "--k", "1", "--c-over-sonic", "1.05", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["residual"] <= 1e-8
    header, data = _read_series(out / "profile.csv")
    assert header == ["x", "n", "u"] and data.shape == (2048, 3)
    assert (out / "potential.csv").exists()


def test_solitary_outside_existence_range(tmp_path, capsys):
    out = tmp_path / "none"
    assert main(["solitary", "--c-over-sonic", "1.2", "--out", str(out)]) == 1
    assert "no solitary wave" in capsys.readouterr().err


def test_poisson_test_subcommand(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert main(["poisson-test", "--samples", "10", "--seed", "7", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["resolvent"]["commutation_holds"] == 10


def test_determinism(tmp_path):
    cfg = _write(tmp_path)
    for name in ("a", "b"):
        assert main(["simulate", str(cfg), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()


def test_echo_reruns_to_identical_summary(tmp_path):
    cfg = parse_config(SMALL.format(amp=0.01), base_dir=tmp_path)
    first = run(cfg, "simulate", tmp_path / "one")
    echo = (tmp_path / "one" / "config.echo").read_text()
    second = run(parse_config(echo, base_dir=tmp_path), "simulate", tmp_path / "two")
    assert first.exit_code == second.exit_code == 0
    a = (tmp_path / "one" / "summary.json").read_text()
    b = (tmp_path / "two" / "summary.json").read_text()
    assert a == b


def test_sweep(tmp_path, capsys):
    cfg = _write(tmp_path, amp=0.005).read_text().replace(
        "path.kind = static\n", "path.kind = constant-speed\npath.c = 3\n"
    )
    p = tmp_path / "sweep.cfg"
    p.write_text(cfg)
    sonic = math.sqrt(2)
    values = ",".join(repr(r * sonic) for r in (1.5, 2.0, 3.0))
    out = tmp_path / "sweep"
    code = main(["sweep", "--vary", "path.c", "--values", values, "--mode", "virial-fast",
                 "--workers", "2", "--out", str(out), str(p)])
    assert code == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["key"] for r in rows] == ["path.c"] * 3
    margins = [float(r["min_margin_L"]) for r in rows]
    assert margins[0] < margins[1] < margins[2]
    for v in values.split(","):
        assert (out / f"path.c={v}" / "series.csv").exists()


def test_sweep_validates_members_first(tmp_path, capsys):
    p = _write(tmp_path)
    code = main(["sweep", "--vary", "domain.points", "--values", "256,300", str(p),
                 "--out", str(tmp_path / "s")])
    assert code == 2
    assert not (tmp_path / "s").exists()
