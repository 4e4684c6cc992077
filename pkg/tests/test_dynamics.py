import numpy as np
import pytest

from eulerpoisson.constitutive import PressureLaw, VacuumError
from eulerpoisson.dynamics import (
    EulerPoisson,
    RunRecord,
    State,
    StepperConfig,
    reversibility_defect,
)
from eulerpoisson.spectral import Grid
from eulerpoisson.waveforms import packet, solitary_profile


@pytest.fixture(scope="module")
def system():
    return EulerPoisson(Grid(60.0, 512), PressureLaw.isothermal(1.0))


def _zero(g):
    return State(np.zeros(g.points), np.zeros(g.points))


def test_rhs_of_zero_state(system):
    dn, du = system.rhs(_zero(system.grid))
    assert not np.any(dn) and not np.any(du)


@pytest.mark.parametrize("mode", [3, 10, 40])
@pytest.mark.parametrize("k", [1.0, 2.0])
def test_linear_dispersion(mode, k):
    g = Grid(60.0, 512)
    system = EulerPoisson(g, PressureLaw.isothermal(k))
    xi = 2 * np.pi * mode / g.length
    a = 1e-6
    n = a * np.cos(xi * g.x)
    _, du = system.rhs(State(n, np.zeros_like(n)))
    expect = a * (k + 1 / (1 + xi**2)) * xi * np.sin(xi * g.x)
    assert g.l2(du - expect) <= 10 * a * g.l2(expect)


def test_solitary_wave_is_a_travelling_solution(law):
    g = Grid(160.0, 2048)
    c = 1.05 * law.thresholds().sonic
    prof = solitary_profile(c, law, g)
    system = EulerPoisson(g, law)
    dn, du = system.rhs(prof.state())
    tn, tu = -c * g.derivative(prof.n), -c * g.derivative(prof.u)
    err = np.hypot(g.l2(dn - tn), g.l2(du - tu))
    assert err <= 1e-7 * (g.l2(g.derivative(prof.n)) + g.l2(g.derivative(prof.u)))


def test_step_of_zero_state(system):
    s = system.step_rk4(_zero(system.grid), 0.01)
    assert s.t == 0.01 and not np.any(s.n) and not np.any(s.u)


def test_rk4_fourth_order():
    g = Grid(40.0, 256)
    system = EulerPoisson(g, PressureLaw.isothermal(1.0))
    s0 = packet(g, amplitude=0.1, width=2.0, velocity_mode="right-moving")
    T = 1.0

    def run(dt):
        s = s0
        for _ in range(round(T / dt)):
            s = system.step_rk4(s, dt)
        return s

    dt = 0.05
    ref = run(dt / 8)
    errs = []
    for h in (dt, dt / 2):
        s = run(h)
        errs.append(np.hypot(g.l2(s.n - ref.n), g.l2(s.u - ref.u)))
    assert 14 <= errs[0] / errs[1] <= 18


def test_zero_duration_gives_one_sample(system):
    s0 = packet(system.grid, amplitude=0.01)
    rec = system.integrate(s0, StepperConfig(t_end=0.0), [lambda s, phi: {"m": s.n.sum()}])
    assert len(rec) == 1 and rec["t"][0] == 0.0


def test_zero_data_stays_zero():
    g = Grid(20.0, 64)
    system = EulerPoisson(g, PressureLaw.isothermal(1.0))
    s = _zero(g)
    for _ in range(1000):
        s = system.step_rk4(s, 0.05)
    assert not np.any(s.n) and not np.any(s.u)


def test_mass_and_momentum_conserved(system):
    g = system.grid
    s0 = packet(g, amplitude=0.05, width=2.0, velocity_mode="right-moving")

    def probe(s, phi):
        return {"mass": g.integrate(s.n), "mom": g.integrate(s.n * s.u)}

    rec = system.integrate(s0, StepperConfig(t_end=5.0), [probe])
    assert rec.error is None
    assert np.max(np.abs(rec["mass"] - rec["mass"][0])) <= 1e-14
    mom = rec["mom"]
    assert np.max(np.abs(mom - mom[0])) <= 1e-8 * abs(mom[0])


def test_time_reversal_symmetry(system):
    s0 = packet(system.grid, amplitude=0.1, width=2.0, velocity_mode="right-moving")
    d = [reversibility_defect(system, s0, h) for h in (0.1, 0.05)]
    assert d[1] <= d[0] / 16
    # flipping twice is the identity
    np.testing.assert_array_equal(s0.flip().flip().u, s0.u)


def test_stride_and_uniform_sampling(system):
    s0 = packet(system.grid, amplitude=0.01)
    cfg = StepperConfig(t_end=1.0, probe_stride=4)
    rec = system.integrate(s0, cfg, [])
    t = rec["t"]
    assert t[-1] == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(np.diff(t), t[1], rtol=1e-10)
    dt = t[1] / 4
    assert dt <= 0.4 * system.grid.dx / system.sonic


def test_adaptive_reaches_end(system):
    s0 = packet(system.grid, amplitude=0.05, velocity_mode="right-moving")
    rec = system.integrate(s0, StepperConfig(t_end=0.7, adaptive=True), [])
    assert rec["t"][-1] == pytest.approx(0.7, abs=1e-12)
    assert np.all(np.diff(rec["t"]) > 0)


def test_abort_keeps_partial_record():
    g = Grid(20.0, 64)

    class Failing(EulerPoisson):
        calls = 0

        def step_rk4(self, state, dt):
            self.calls += 1
            if self.calls > 10:
                raise VacuumError("vacuum floor violated (test)")
            return super().step_rk4(state, dt)

    system = Failing(g, PressureLaw.isothermal(1.0))
    rec = system.integrate(packet(g, amplitude=0.01), StepperConfig(t_end=5.0), [])
    assert rec.error.startswith("VacuumError")
    assert len(rec) == 3  # t = 0 and two strides of four steps


def test_vacuum_floor_enforced(system):
    n = np.zeros(system.grid.points)
    n[10] = -0.9995
    with pytest.raises(VacuumError):
        system.rhs(State(n, np.zeros_like(n)))


def test_stepper_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(t_end=-1.0)
    with pytest.raises(ValueError):
        StepperConfig(t_end=1.0, cfl=1.5)
    with pytest.raises(ValueError):
        StepperConfig(t_end=1.0, dt=0.0)


def test_run_record(tmp_path):
    rec = RunRecord()
    rec.append({"t": 0.0, "a": 1.0})
    rec.append({"t": 0.5, "a": 0.1 + 0.2})
    with pytest.raises(ValueError):
        rec.append({"t": 1.0})
    rec.write_csv(tmp_path / "s.csv", ["t", "a"])
    text = (tmp_path / "s.csv").read_text()
    assert text == "t,a\n0.0,1.0\n0.5,0.30000000000000004\n"
