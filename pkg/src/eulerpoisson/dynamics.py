"""Method-of-lines integration of the Euler-Poisson system

    n_t = -((1 + n) u)_x
    u_t = -(u^2/2 + w(n) + phi)_x
    -phi'' + exp(phi) - 1 = n
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .constitutive import PressureLaw, VacuumError
from .poisson import solve_phi_fixedpoint, solve_phi_newton
from .spectral import ConvergenceError, Grid

logger = logging.getLogger(__name__)

N_FLOOR = 1e-3


class StepError(RuntimeError):
    """A time step left the admissible state space."""


@dataclass(frozen=True)
class State:
    n: np.ndarray
    u: np.ndarray
    t: float = 0.0

    def flip(self) -> "State":
        """The time-reversal image ``(n, u) -> (n, -u)``."""
        return State(self.n, -self.u, self.t)


@dataclass
class StepperConfig:
    """Time stepping controls.

    With ``dt=None`` the step is ``cfl*dx/(max|u0| + sonic)``, shrunk so that
    ``t_end`` is a whole number of probe strides.  ``adaptive=True`` instead
    recomputes the CFL step from the current state every step.
    """

    t_end: float
    dt: float | None = None
    cfl: float = 0.4
    dealias: bool = True
    adaptive: bool = False
    probe_stride: int = 4

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.probe_stride < 1:
            raise ValueError("probe_stride must be >= 1")


@dataclass
class RunRecord:
    """Column-oriented time series; ``error`` is set when a run aborted."""

    columns: dict = field(default_factory=dict)
    error: str | None = None

    def append(self, row: dict):
        if self.columns and set(row) != set(self.columns):
            raise ValueError("probe rows must always carry the same keys")
        for key, value in row.items():
            self.columns.setdefault(key, []).append(value)

    def __getitem__(self, key) -> np.ndarray:
        return np.asarray(self.columns[key], dtype=float)

    def __contains__(self, key) -> bool:
        return key in self.columns

    def __len__(self) -> int:
        return len(self.columns.get("t", ()))

    def write_csv(self, path, header: list[str]):
        rows = zip(*(self.columns[h] for h in header))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(v)) for v in row])


Probe = Callable[[State, np.ndarray], dict]


class EulerPoisson:
    """The semi-discrete system on a fixed grid and pressure law.

    Keeps the last potential as a warm start, so one instance belongs to one
    simulation at a time.
    """

    def __init__(self, grid: Grid, law: PressureLaw, dealias: bool = True, poisson_tol=1e-12):
        self.grid = grid
        self.law = law
        self.dealias = dealias
        self.poisson_tol = poisson_tol
        self.sonic = law.thresholds().sonic
        xi = grid.xi
        sym = 1j * xi
        sym[-1] = 0.0
        if dealias:
            sym = sym * (xi <= (2.0 / 3.0) * xi[-1])
        self._dsym = sym
        self._phi = None

    def potential(self, n) -> np.ndarray:
        """Solve the constraint for ``n``; Newton is the fallback."""
        n = np.asarray(n, dtype=float)
        guess = self._phi if self._phi is not None and self._phi.shape == n.shape else None
        try:
            sol = solve_phi_fixedpoint(self.grid, n, tol=self.poisson_tol, phi0=guess)
        except ConvergenceError:
            logger.info("fixed-point solve failed, falling back to Newton")
            sol = solve_phi_newton(self.grid, n, tol=self.poisson_tol, phi0=guess)
        self._phi = sol.phi
        return sol.phi

    def _dflux(self, f):
        g = self.grid
        return g.ifft(g.fft(f) * self._dsym)

    def rhs(self, state: State, phi=None):
        n, u = state.n, state.u
        if np.min(n) < N_FLOOR - 1.0:
            raise VacuumError(f"vacuum floor violated: min(1+n) = {1 + np.min(n):.3g}")
        if phi is None:
            phi = self.potential(n)
        dn = -self._dflux((1.0 + n) * u)
        du = -self._dflux(0.5 * u * u + self.law.w(n) + phi)
        return dn, du

    def step_rk4(self, state: State, dt: float) -> State:
        n, u = state.n, state.u
        k1n, k1u = self.rhs(state)
        k2n, k2u = self.rhs(State(n + 0.5 * dt * k1n, u + 0.5 * dt * k1u))
        k3n, k3u = self.rhs(State(n + 0.5 * dt * k2n, u + 0.5 * dt * k2u))
        k4n, k4u = self.rhs(State(n + dt * k3n, u + dt * k3u))
        n1 = n + dt / 6.0 * (k1n + 2 * k2n + 2 * k3n + k4n)
        u1 = u + dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        if not (np.all(np.isfinite(n1)) and np.all(np.isfinite(u1))):
            raise StepError(f"non-finite values at t = {state.t + dt:.6g}")
        if np.min(n1) < N_FLOOR - 1.0:
            raise VacuumError(f"vacuum floor violated at t = {state.t + dt:.6g}")
        return State(n1, u1, state.t + dt)

    def cfl_dt(self, state: State, cfl: float) -> float:
        return cfl * self.grid.dx / (float(np.max(np.abs(state.u))) + self.sonic)

    def integrate(
        self, s0: State, cfg: StepperConfig, probes: Iterable[Probe] = ()
    ) -> RunRecord:
        """Run to ``cfg.t_end``, sampling the probes every ``probe_stride`` steps.

        Step failures end the run early with ``record.error`` set; samples
        taken so far are kept.
        """
        probes = list(probes)
        record = RunRecord()
        stride = cfg.probe_stride

        def sample(s):
            phi = self.potential(s.n)
            row = {"t": s.t}
            for probe in probes:
                row.update(probe(s, phi))
            record.append(row)

        state = s0
        t0 = s0.t
        t_stop = t0 + cfg.t_end
        try:
            sample(state)
            if cfg.t_end == 0:
                return record
            if cfg.adaptive:
                step = 0
                while state.t < t_stop - 1e-12 * max(1.0, abs(t_stop)):
                    dt = min(self.cfl_dt(state, cfg.cfl), t_stop - state.t)
                    state = self.step_rk4(state, dt)
                    step += 1
                    if step % stride == 0 or state.t >= t_stop - 1e-12 * max(1.0, abs(t_stop)):
                        sample(state)
            else:
                dt_max = cfg.dt if cfg.dt is not None else self.cfl_dt(s0, cfg.cfl)
                nsteps = stride * math.ceil(cfg.t_end / (dt_max * stride) - 1e-9)
                dt = cfg.t_end / nsteps
                for step in range(1, nsteps + 1):
                    state = replace(self.step_rk4(state, dt), t=t0 + step * dt)
                    if step % stride == 0:
                        sample(state)
        except (StepError, VacuumError, ConvergenceError, ValueError) as exc:
            record.error = f"{type(exc).__name__}: {exc}"
            logger.warning("run aborted at t = %.6g: %s", state.t, exc)
        return record


def reversibility_defect(system: EulerPoisson, s0: State, dt: float) -> float:
    """L^2 distance between ``s0`` and forward-flip-forward-flip of ``s0``."""
    s1 = system.step_rk4(s0, dt).flip()
    s2 = system.step_rk4(s1, dt).flip()
    g = system.grid
    return math.hypot(g.l2(s2.n - s0.n), g.l2(s2.u - s0.u))
