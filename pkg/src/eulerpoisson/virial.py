"""Energy/momentum densities, their fluxes, and the virial functionals.

With ``phi_A(x) = A tanh(x/A)`` centred on an observer path ``y(t)``::

    J = int phi_A(x - y) n u            K = -1/2 int phi_A'(x - y) u phi'
    I = J + (1 - eps) K                 L = int phi_A(x - y) e

Time derivatives are evaluated from the exact flux identities, so they agree
with finite differences of the functionals up to discretisation error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .constitutive import PressureLaw, Q, R, q
from .dynamics import EulerPoisson, RunRecord, State
from .poisson import phi_rate
from .spectral import WeightFamily

SERIES_KEYS = ("J", "K", "I", "L")


@dataclass(frozen=True)
class ObserverPath:
    """Centre ``y(t)`` of the weight.

    ``static`` sits at ``y0``; ``constant-speed`` is ``y0 + c t``; ``sampled``
    interpolates a ``(t, y)`` or ``(t, y, ydot)`` table by a monotone cubic
    (PCHIP) or, when velocities are given, a cubic Hermite spline.
    """

    kind: str = "static"
    c: float = 0.0
    y0: float = 0.0
    samples: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("static", "constant-speed", "sampled"):
            raise ValueError(f"unknown path kind {self.kind!r}")
        if self.kind == "sampled":
            if self.samples is None or len(self.samples) not in (2, 3):
                raise ValueError("sampled path needs (t, y) or (t, y, ydot) samples")
            t = np.asarray(self.samples[0], dtype=float)
            if t.size < 2 or np.any(np.diff(t) <= 0):
                raise ValueError("sampled path times must be strictly increasing")

    @property
    def _spline(self):
        t, y = (np.asarray(a, dtype=float) for a in self.samples[:2])
        if len(self.samples) == 3:
            return CubicHermiteSpline(t, y, np.asarray(self.samples[2], dtype=float))
        return PchipInterpolator(t, y)

    def y(self, t: float) -> float:
        if self.kind == "static":
            return self.y0
        if self.kind == "constant-speed":
            return self.y0 + self.c * t
        return float(self._spline(t))

    def ydot(self, t: float) -> float:
        if self.kind == "static":
            return 0.0
        if self.kind == "constant-speed":
            return self.c
        return float(self._spline.derivative()(t))

    def speed_range(self) -> tuple[float, float]:
        """``(inf |ydot|, sup |ydot|)`` over the path's domain."""
        if self.kind == "static":
            return 0.0, 0.0
        if self.kind == "constant-speed":
            return abs(self.c), abs(self.c)
        t = np.asarray(self.samples[0], dtype=float)
        tt = np.linspace(t[0], t[-1], 50 * t.size)
        v = np.abs(self._spline.derivative()(tt))
        return float(v.min()), float(v.max())


@dataclass(frozen=True)
class VirialConfig:
    A: float
    epsilon: float
    path: ObserverPath = ObserverPath()

    def __post_init__(self):
        if self.A < 10:
            raise ValueError(f"virial weight scale A must be >= 10, got {self.A}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @staticmethod
    def slow_interval(law: PressureLaw, path: ObserverPath) -> tuple[float, float]:
        """Admissible ``eps`` range ``(c^2/k, k/(1+k))`` with ``c = sup|ydot|``."""
        c = path.speed_range()[1]
        k = law.k
        return c * c / k, k / (1.0 + k)

    @classmethod
    def slow(cls, law: PressureLaw, A: float = 50.0, path=ObserverPath(), epsilon=None):
        """Slow-regime configuration; ``epsilon=None`` takes the interval midpoint."""
        lo, hi = cls.slow_interval(law, path)
        if not lo < hi:
            c = path.speed_range()[1]
            raise ValueError(
                f"slow regime needs sup|ydot| < k/sqrt(1+k) = {law.thresholds().slow:.6g}, "
                f"got {c:.6g}"
            )
        if epsilon is None:
            epsilon = 0.5 * (lo + hi)
        elif not lo < epsilon < hi:
            raise ValueError(f"epsilon = {epsilon} outside ({lo:.6g}, {hi:.6g})")
        return cls(float(A), float(epsilon), path)

    @classmethod
    def fast(cls, law: PressureLaw, A: float = 50.0, path=None, epsilon=None):
        """Fast-regime configuration; requires ``inf|ydot| > sqrt(1+k)``."""
        th = law.thresholds()
        path = path or ObserverPath("constant-speed", c=2.0 * th.sonic)
        inf_speed = path.speed_range()[0]
        if not inf_speed > th.sonic:
            raise ValueError(
                f"fast regime needs inf|ydot| > sqrt(1+k) = {th.sonic:.6g}, got {inf_speed:.6g}"
            )
        return cls.resolve(law, A, path, epsilon)

    @classmethod
    def resolve(cls, law: PressureLaw, A: float = 50.0, path=ObserverPath(), epsilon=None):
        """Any regime.  Automatic ``epsilon`` is the slow-interval midpoint
        when that interval is non-empty, else the midpoint of ``(0, k/(1+k))``."""
        if epsilon is None:
            lo, hi = cls.slow_interval(law, path)
            if not lo < hi:
                lo = 0.0
            epsilon = 0.5 * (lo + hi)
        return cls(float(A), float(epsilon), path)

    def regime(self, law: PressureLaw) -> str:
        th = law.thresholds()
        lo_speed, hi_speed = self.path.speed_range()
        if hi_speed < th.slow:
            lo, hi = self.slow_interval(law, self.path)
            return "slow" if lo < self.epsilon < hi else "slow-bad-epsilon"
        if lo_speed > th.sonic:
            return "fast"
        return "intermediate"


class Virial:
    """Density, flux and virial evaluations for one system and weight."""

    def __init__(self, system: EulerPoisson, cfg: VirialConfig):
        self.system = system
        self.grid = system.grid
        self.law = system.law
        self.cfg = cfg

    # densities and fluxes -------------------------------------------------

    def energy_density(self, s: State, phi):
        n, u = s.n, s.u
        dphi = self.grid.derivative(phi)
        return 0.5 * (1.0 + n) * u * u + self.law.W(n) + 0.5 * dphi * dphi + R(phi)

    def phi_rate(self, s: State, phi, dn=None):
        if dn is None:
            dn, _ = self.system.rhs(s, phi)
        return phi_rate(self.grid, dn, phi)

    def energy_flux(self, s: State, phi, phidot=None):
        n, u = s.n, s.u
        if phidot is None:
            phidot = self.phi_rate(s, phi)
        m1 = (1.0 + n) * u
        return 0.5 * m1 * u * u + m1 * self.law.w(n) + m1 * phi - phi * self.grid.derivative(phidot)

    def momentum_density_flux(self, s: State, phi):
        n, u = s.n, s.u
        dphi = self.grid.derivative(phi)
        flux = (0.5 + n) * u * u + self.law.S(n) - 0.5 * dphi * dphi + Q(phi)
        return n * u, flux

    # weights ----------------------------------------------------------------

    def weight(self, t: float) -> WeightFamily:
        return WeightFamily(self.cfg.A, self.cfg.path.y(t))

    def _weights(self, t):
        w = self.weight(t)
        x = self.grid.x
        return w(x, 0), w(x, 1), w(x, 2)

    def localized_mass(self, s: State) -> float:
        wp = self.weight(s.t)(self.grid.x, 1)
        return self.grid.integrate(wp * (s.u**2 + s.n**2))

    # functionals ------------------------------------------------------------

    def J_K_I_eval(self, s: State, phi) -> dict:
        wa, wp, _ = self._weights(s.t)
        g = self.grid
        J = g.integrate(wa * s.n * s.u)
        K = -0.5 * g.integrate(wp * s.u * g.derivative(phi))
        return {"J": J, "K": K, "I": J + (1.0 - self.cfg.epsilon) * K}

    def L_eval(self, s: State, phi) -> float:
        wa = self.weight(s.t)(self.grid.x, 0)
        return self.grid.integrate(wa * self.energy_density(s, phi))

    def dJdt_analytic(self, s: State, phi) -> float:
        _, wp, _ = self._weights(s.t)
        m, flux = self.momentum_density_flux(s, phi)
        ydot = self.cfg.path.ydot(s.t)
        return self.grid.integrate(wp * flux) - ydot * self.grid.integrate(wp * m)

    def dKdt_analytic(self, s: State, phi, rates=None) -> float:
        g = self.grid
        _, wp, wpp = self._weights(s.t)
        dn, du = self.system.rhs(s, phi) if rates is None else rates
        phidot = phi_rate(g, dn, phi)
        dphi = g.derivative(phi)
        ydot = self.cfg.path.ydot(s.t)
        two_kdot = (
            -g.integrate(wp * du * dphi)
            - g.integrate(wp * s.u * g.derivative(phidot))
            + ydot * g.integrate(wpp * s.u * dphi)
        )
        return 0.5 * two_kdot

    def dIdt_analytic(self, s: State, phi) -> float:
        return self.dJdt_analytic(s, phi) + (1.0 - self.cfg.epsilon) * self.dKdt_analytic(s, phi)

    def dLdt_analytic(self, s: State, phi) -> float:
        _, wp, _ = self._weights(s.t)
        e = self.energy_density(s, phi)
        flux = self.energy_flux(s, phi)
        ydot = self.cfg.path.ydot(s.t)
        return self.grid.integrate(wp * flux) - ydot * self.grid.integrate(wp * e)

    # leading-order parts ----------------------------------------------------

    def _moments(self, s: State, phi, wp) -> dict:
        g = self.grid
        dphi = g.derivative(phi)
        ddphi = g.derivative(phi, 2)
        Gu = g.helmholtz_inverse(s.u)

        def wint(f):
            return g.integrate(wp * f)

        return {
            "u2": wint(s.u**2),
            "n2": wint(s.n**2),
            "nu": wint(s.n * s.u),
            "phi2": wint(phi**2),
            "dphi2": wint(dphi**2),
            "ddphi2": wint(ddphi**2),
            "uGu": wint(s.u * Gu),
            "phiGu": wint(phi * Gu),
        }

    def principal_dJdt(self, s, phi, mom=None) -> float:
        wp = self.weight(s.t)(self.grid.x, 1)
        M = mom or self._moments(s, phi, wp)
        k = self.law.k
        ydot = self.cfg.path.ydot(s.t)
        return 0.5 * (M["u2"] + k * M["n2"] - M["dphi2"] + M["phi2"]) - ydot * M["nu"]

    def principal_dKdt(self, s, phi, mom=None) -> float:
        # u d(-d^2+1)^{-1}d u = u (G u - u)
        wp = self.weight(s.t)(self.grid.x, 1)
        M = mom or self._moments(s, phi, wp)
        k = self.law.k
        return 0.5 * (M["uGu"] - M["u2"] + k * M["ddphi2"] + (1.0 + k) * M["dphi2"])

    def principal_dLdt(self, s, phi, mom=None) -> float:
        wp = self.weight(s.t)(self.grid.x, 1)
        M = mom or self._moments(s, phi, wp)
        k = self.law.k
        ydot = self.cfg.path.ydot(s.t)
        lead = -0.5 * ydot * (M["u2"] + k * M["n2"] + M["dphi2"] + M["phi2"])
        return lead + k * M["nu"] + M["phiGu"]

    def positivity(self, u, t: float = 0.0) -> float:
        """``int phi_A' u (-d^2+1)^{-1} u``, non-negative for ``A >= 1``."""
        wp = self.weight(t)(self.grid.x, 1)
        return self.grid.integrate(wp * u * self.grid.helmholtz_inverse(u))

    # coercivity and decay ---------------------------------------------------

    def dIdt_coercivity(self, s: State, phi) -> dict:
        """Slow-regime monotonicity of ``I`` relative to the localized mass.

        ``budget`` holds the five groups that bound ``dI/dt`` from below,
        with the Young splitting parameter ``a`` taken midway in
        ``(c/k, eps/c)``.
        """
        wp = self.weight(s.t)(self.grid.x, 1)
        M = self._moments(s, phi, wp)
        k, eps = self.law.k, self.cfg.epsilon
        c = self.cfg.path.speed_range()[1]
        dIdt = self.dIdt_analytic(s, phi)
        loc = M["u2"] + M["n2"]
        if c > 0:
            a = 0.5 * (c / k + eps / c)
            cross_u, cross_n = c * a, c / a
        else:
            cross_u = cross_n = 0.0
        budget = {
            "u2": 0.5 * (eps - cross_u) * M["u2"],
            "n2": 0.5 * (k - cross_n) * M["n2"],
            "ddphi2": 0.5 * (1.0 - eps) * k * M["ddphi2"],
            "dphi2": 0.5 * (k - eps * (1.0 + k)) * M["dphi2"],
            "phi2": 0.5 * M["phi2"],
        }
        principal = self.principal_dJdt(s, phi, M) + (1.0 - eps) * self.principal_dKdt(s, phi, M)
        return {
            "dIdt": dIdt,
            "localized_mass": loc,
            "margin": dIdt / loc if loc > 0 else math.nan,
            "degenerate": not loc > 0,
            "budget": budget,
            "principal": principal,
            "remainder": dIdt - principal,
            "regime": self.cfg.regime(self.law),
        }

    def dLdt_decay(self, s: State, phi) -> dict:
        wp = self.weight(s.t)(self.grid.x, 1)
        M = self._moments(s, phi, wp)
        dLdt = self.dLdt_analytic(s, phi)
        loc = M["u2"] + M["n2"]
        principal = self.principal_dLdt(s, phi, M)
        return {
            "dLdt": dLdt,
            "localized_mass": loc,
            "margin": -dLdt / loc if loc > 0 else math.nan,
            "degenerate": not loc > 0,
            "principal": principal,
            "remainder": dLdt - principal,
            "regime": self.cfg.regime(self.law),
        }

    def tail_mass(self, s: State, phi, y: float, R: float) -> dict:
        g = self.grid
        if not R < 0.5 * g.length:
            raise ValueError("tail radius must be below half the domain length")
        out = np.abs(g.x - y) > R
        ddphi = g.derivative(phi, 2)
        return {
            "nu_tail": g.integrate(np.where(out, s.n**2 + s.u**2, 0.0)),
            "phi_tail": g.integrate(np.where(out, ddphi**2 + phi**2, 0.0)),
        }

    # sampling -------------------------------------------------------------

    def snapshot(self, s: State, phi) -> dict:
        """Every scalar diagnostic at one instant, sharing intermediate fields."""
        g = self.grid
        wa, wp, wpp = self._weights(s.t)
        ydot = self.cfg.path.ydot(s.t)
        n, u = s.n, s.u
        dn, du = self.system.rhs(s, phi)
        phidot = phi_rate(g, dn, phi)
        dphi = g.derivative(phi)
        e = self.energy_density(s, phi)
        m, fm = self.momentum_density_flux(s, phi)
        fe = self.energy_flux(s, phi, phidot)

        J = g.integrate(wa * m)
        K = -0.5 * g.integrate(wp * u * dphi)
        dJ = g.integrate(wp * fm) - ydot * g.integrate(wp * m)
        dK = 0.5 * (
            -g.integrate(wp * du * dphi)
            - g.integrate(wp * u * g.derivative(phidot))
            + ydot * g.integrate(wpp * u * dphi)
        )
        eps = self.cfg.epsilon
        E = g.integrate(e)
        mass_nu = g.integrate(u * u + n * n)
        return {
            "E": E,
            "mass": g.integrate(n),
            "momentum": g.integrate(m),
            "J": J,
            "K": K,
            "I": J + (1.0 - eps) * K,
            "L": g.integrate(wa * e),
            "dJdt_a": dJ,
            "dKdt_a": dK,
            "dIdt_a": dJ + (1.0 - eps) * dK,
            "dLdt_a": g.integrate(wp * fe) - ydot * g.integrate(wp * e),
            "loc_mass": g.integrate(wp * (u * u + n * n)),
            "loc_energy": g.integrate(wp * e),
            "e_min": float(np.min(e)),
            "n_l2": g.l2(n),
            "u_l2": g.l2(u),
            "n_linf": float(np.max(np.abs(n))),
            "energy_ratio": E / mass_nu if mass_nu > 0 else math.nan,
            "y": self.cfg.path.y(s.t),
            "ydot": ydot,
        }


class VirialProbe:
    """Read-only probe sampling :meth:`Virial.snapshot` and tail masses."""

    def __init__(self, virial: Virial, tail_radii=(), prefix: str = ""):
        self.virial = virial
        self.tail_radii = tuple(tail_radii)
        self.prefix = prefix

    def __call__(self, s: State, phi) -> dict:
        row = self.virial.snapshot(s, phi)
        y = row["y"]
        for i, R in enumerate(self.tail_radii, start=1):
            tm = self.virial.tail_mass(s, phi, y, R)
            row[f"tail_nu_R{i}"] = tm["nu_tail"]
            row[f"tail_phi_R{i}"] = tm["phi_tail"]
        return {self.prefix + k: v for k, v in row.items()}


def add_numeric_derivatives(record: RunRecord, prefix: str = ""):
    """Centered differences of J, K, I, L over neighbouring samples."""
    t = record["t"]
    for key in SERIES_KEYS:
        col = prefix + key
        if len(t) >= 3:
            d = np.gradient(record[col], t, edge_order=2)
        else:
            d = np.full(len(t), math.nan)
        record.columns[f"{prefix}d{key}dt_n"] = list(d)
    return record


def flux_residuals(system: EulerPoisson, s: State, h: float) -> dict:
    """L^2 norms of ``de/dt + dF_e/dx`` and ``dm/dt + dF_m/dx`` at ``s``.

    The time derivatives are centered differences over one RK4 step of
    ``+-h`` from ``s``.
    """
    g = system.grid
    v = Virial(system, VirialConfig(10.0, 0.5))
    sp = system.step_rk4(s, h)
    sm = system.step_rk4(s, -h)
    phi = system.potential(s.n)
    e_p = v.energy_density(sp, system.potential(sp.n))
    e_m = v.energy_density(sm, system.potential(sm.n))
    m_p, _ = v.momentum_density_flux(sp, system.potential(sp.n))
    m_m, _ = v.momentum_density_flux(sm, system.potential(sm.n))
    _, fm = v.momentum_density_flux(s, phi)
    fe = v.energy_flux(s, phi)
    return {
        "energy": g.l2((e_p - e_m) / (2 * h) + g.derivative(fe)),
        "momentum": g.l2((m_p - m_m) / (2 * h) + g.derivative(fm)),
    }
