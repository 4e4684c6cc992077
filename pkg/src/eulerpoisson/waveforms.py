"""Initial data: localized packets and solitary waves.

A wave travelling at speed ``c`` satisfies, after integrating the mass and
momentum equations once,

    u = c n / (1 + n),        phi = c^2/2 (1 - (1 + n)^-2) - w(n),

and the potential obeys ``phi'' = q(phi) - n(phi)``, whose first integral
is ``phi'^2 / 2 = V(phi) = int_0^phi (q(s) - n(s)) ds``.  A solitary wave is
the homoclinic orbit leaving ``phi = 0`` and turning at the first positive
zero ``phi_max`` of ``V``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .constitutive import Q, PressureLaw, q
from .dynamics import State
from .spectral import Grid


class FoldError(ValueError):
    """The requested potential lies beyond the sonic fold of the branch."""


class NoSolitaryWave(ValueError):
    """No homoclinic orbit exists for the requested speed."""


def bernoulli_phi(n, c: float, law: PressureLaw):
    """Forward map ``n -> phi`` of the travelling-wave reduction."""
    return 0.5 * c * c * -np.expm1(-2.0 * np.log1p(n)) - law.w(n)


def fold_density(c: float, law: PressureLaw) -> float:
    """Density where ``d phi / d n = c^2 (1+n)^-3 - w'(n)`` first vanishes."""
    if c * c <= law.k:
        raise FoldError(f"branch degenerate: c^2 = {c * c:.6g} <= k = {law.k:.6g}")

    def slope(n):
        return c * c * (1.0 + n) ** -3 - law.dw(n)

    hi = 1.0
    while slope(hi) > 0:
        hi *= 2.0
        if hi > 1e8:
            raise FoldError("no sonic fold found")
    return brentq(slope, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def phi_sonic(c: float, law: PressureLaw) -> float:
    return float(bernoulli_phi(fold_density(c, law), c, law))


def bernoulli_density(phi: float, c: float, law: PressureLaw, _fold=None) -> float:
    """Root ``n(phi)`` on the branch through ``n = 0``."""
    n_s = fold_density(c, law) if _fold is None else _fold[0]
    p_s = float(bernoulli_phi(n_s, c, law)) if _fold is None else _fold[1]
    if phi == 0.0:
        return 0.0
    if phi > p_s:
        raise FoldError(f"phi = {phi:.6g} exceeds the sonic fold value {p_s:.6g}")
    if phi == p_s:
        return n_s

    def f(n):
        return float(bernoulli_phi(n, c, law)) - phi

    if phi > 0:
        lo, hi = 0.0, n_s
    else:
        lo, hi = -0.5, 0.0
        while f(lo) > 0:
            lo = -1.0 + 0.5 * (1.0 + lo)
            if 1.0 + lo < 1e-5:
                raise FoldError("root approaches the vacuum floor")
    return brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200)


def _sagdeev_closed(phi: float, c: float, law: PressureLaw, _fold=None) -> float:
    # int_0^phi n(s) ds = N phi - int_0^N phi(m) dm, with N = n(phi)
    N = bernoulli_density(phi, c, law, _fold)
    return float(Q(phi) - N * phi + 0.5 * c * c * N * N / (1.0 + N) - law.W(N))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def _sagdeev_scaled(phi: float, c: float, law: PressureLaw, _fold) -> float:
    # V(phi)/phi^2 = int_0^1 (q(phi t) - n(phi t))/phi dt; no cancellation at small phi
    vals = [
        (float(q(phi * t)) - bernoulli_density(phi * t, c, law, _fold)) / phi for t in _GL_NODES
    ]
    return float(np.dot(_GL_WEIGHTS, vals))


def sagdeev_potential(phi: float, c: float, law: PressureLaw) -> float:
    """``V(phi; c) = int_0^phi (q(s) - n(s; c)) ds`` by adaptive quadrature.

    The absolute tolerance scales with ``phi`` so that values near the
    turning point, where ``V`` crosses zero, do not chase a relative target.
    """
    fold = (fold_density(c, law),)
    fold = (fold[0], float(bernoulli_phi(fold[0], c, law)))
    if phi > fold[1]:
        raise FoldError(f"phi = {phi:.6g} exceeds the sonic fold value {fold[1]:.6g}")
    val, _ = quad(
        lambda s: float(q(s)) - bernoulli_density(s, c, law, fold),
        0.0,
        phi,
        epsabs=1e-15 * abs(phi),
        epsrel=1e-12,
        limit=200,
    )
    return val


def find_phi_max(c: float, law: PressureLaw) -> float:
    """First positive zero of the Sagdeev potential (turning point)."""
    sonic = law.thresholds().sonic
    if c <= sonic:
        raise NoSolitaryWave(
            f"c = {c:.6g} <= sonic speed {sonic:.6g}: V''(0) = 1 - 1/(c^2 - k) <= 0"
        )
    n_s = fold_density(c, law)
    p_s = float(bernoulli_phi(n_s, c, law))
    fold = (n_s, p_s)

    def V(p):
        return _sagdeev_closed(p, c, law, fold)

    grid = p_s * np.linspace(0.0, 1.0, 401)[1:]
    values = np.array([V(p) for p in grid])
    neg = np.nonzero(values <= 0)[0]
    if neg.size == 0:
        raise NoSolitaryWave(
            f"V stays positive up to the sonic fold at c = {c:.6g} (c above the existence ceiling)"
        )
    i = neg[0]
    if values[i] == 0.0:
        return float(grid[i])
    lo = grid[i - 1] if i > 0 else 0.5 * grid[0]
    return brentq(V, lo, grid[i], xtol=1e-15, rtol=4 * np.finfo(float).eps)


def max_speed(law: PressureLaw, c_hi: float | None = None) -> float:
    """Empirical existence ceiling ``c_m``: where ``V`` at the fold reaches zero."""
    sonic = law.thresholds().sonic
    c_hi = c_hi or 4.0 * sonic

    def v_fold(c):
        n_s = fold_density(c, law)
        p_s = float(bernoulli_phi(n_s, c, law))
        return _sagdeev_closed(p_s, c, law, (n_s, p_s))

    lo = sonic * (1.0 + 1e-3)
    if v_fold(c_hi) < 0:
        raise ValueError("c_hi still admits solitary waves; raise it")
    return brentq(v_fold, lo, c_hi, xtol=1e-12)


@dataclass
class SolitaryProfile:
    c: float
    phi_max: float
    grid: Grid
    n: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    residuals: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        return max(self.residuals.values())

    def state(self, t: float = 0.0) -> State:
        return State(self.n.copy(), self.u.copy(), t)


def solitary_profile(c: float, law: PressureLaw, grid: Grid) -> SolitaryProfile:
    """Solitary wave of speed ``c`` centred at ``x = 0``.

    The core ``phi > phi_max/2`` integrates the regular second-order form
    from the turning point; the tail integrates ``(log phi)' = -sqrt(2V)/phi``,
    which is stable in the decaying direction.
    """
    phi_max = find_phi_max(c, law)
    n_s = fold_density(c, law)
    fold = (n_s, float(bernoulli_phi(n_s, c, law)))

    def n_of(p):
        return bernoulli_density(p, c, law, fold)

    def core(_, y):
        return [y[1], float(q(y[0])) - n_of(y[0])]

    def half(_, y):
        return y[0] - 0.5 * phi_max

    half.terminal = True
    half.direction = -1

    x_end = 0.5 * grid.length + grid.dx
    sol1 = solve_ivp(
        core, (0.0, x_end), [phi_max, 0.0], method="DOP853",
        rtol=1e-13, atol=1e-16, events=half, dense_output=True,
    )
    if not sol1.t_events[0].size:
        raise ValueError("domain too short to contain the solitary core")
    x_h = float(sol1.t_events[0][0])
    phi_h = float(sol1.y_events[0][0][0])

    def tail(_, s):
        v = _sagdeev_scaled(math.exp(s[0]), c, law, fold)
        return [-math.sqrt(2.0 * max(v, 0.0))]

    sol2 = solve_ivp(
        tail, (x_h, max(x_end, x_h + grid.dx)), [math.log(phi_h)], method="DOP853",
        rtol=1e-12, atol=1e-12, dense_output=True,
    )

    r = np.abs(grid.x)
    phi = np.empty_like(r)
    inner = r <= x_h
    phi[inner] = sol1.sol(r[inner])[0]
    phi[~inner] = np.exp(sol2.sol(r[~inner])[0])
    edge = float(np.exp(sol2.sol(0.5 * grid.length)[0]))
    if edge > 1e-10:
        raise ValueError(
            f"domain too short: profile is {edge:.3g} at the boundary (need <= 1e-10)"
        )

    n = np.array([n_of(p) for p in phi])
    u = c * n / (1.0 + n)
    w = law.w(n)
    residuals = {
        "mass": float(np.max(np.abs(u * (1.0 + n) - c * n))),
        "bernoulli": float(np.max(np.abs(0.5 * u * u - c * u + w + phi))),
        "poisson": float(np.max(np.abs(-grid.derivative(phi, 2) + q(phi) - n))),
    }
    return SolitaryProfile(c, phi_max, grid, n, u, phi, residuals)


def packet(
    grid: Grid,
    kind: str = "gaussian",
    amplitude: float = 0.01,
    width: float = 2.0,
    center: float = 0.0,
    velocity_mode: str = "still",
    law: PressureLaw | None = None,
) -> State:
    """Localized bump ``n = a*exp(-((x-x0)/w)^2)`` or ``a*sech^2((x-x0)/w)``.

    ``right-moving`` pairs it with the long-wave relation ``u = sonic*n``.
    """
    if abs(amplitude) > 0.5:
        raise ValueError(f"packet amplitude must be <= 0.5, got {amplitude}")
    if width < 4 * grid.dx:
        raise ValueError(f"packet width {width} under-resolved (need >= 4 dx = {4 * grid.dx:.3g})")
    z = (grid.x - center) / width
    if kind == "gaussian":
        n = amplitude * np.exp(-z * z)
    elif kind == "sech2":
        n = amplitude / np.cosh(np.clip(z, -350, 350)) ** 2
    else:
        raise ValueError(f"unknown packet kind {kind!r}")
    if velocity_mode == "still":
        u = np.zeros_like(n)
    elif velocity_mode == "right-moving":
        law = law or PressureLaw.isothermal(1.0)
        u = law.thresholds().sonic * n
    else:
        raise ValueError(f"unknown velocity mode {velocity_mode!r}")
    return State(n, u, 0.0)
