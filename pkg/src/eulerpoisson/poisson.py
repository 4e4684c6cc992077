"""Nonlinear elliptic constraint ``-phi'' + exp(phi) - 1 = n``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constitutive import dq, q
from .spectral import ConvergenceError, Grid, helmholtz_inverse_v

SMALL_DATA = 0.1


@dataclass
class PotentialSolve:
    phi: np.ndarray
    iterations: int
    residual: float
    ratio: float
    n_l2: float
    increments: list = field(default_factory=list)

    @property
    def small_data(self) -> bool:
        """Whether ``|n|_2`` lies inside the admitted small-data regime."""
        return self.n_l2 <= SMALL_DATA

    def contraction_factors(self) -> np.ndarray:
        inc = np.asarray(self.increments)
        with np.errstate(divide="ignore", invalid="ignore"):
            return inc[1:] / inc[:-1]


def _finish(grid, n, phi, iterations, increments=()):
    res = grid.l2(-grid.derivative(phi, 2) + q(phi) - n)
    nn = grid.l2(n)
    ratio = grid.h2(phi) / nn if nn > 0 else float("nan")
    return PotentialSolve(phi, iterations, res, ratio, nn, list(increments))


def solve_phi_fixedpoint(
    grid: Grid, n, tol: float = 1e-12, max_iter: int = 200, phi0=None
) -> PotentialSolve:
    """Contraction iteration ``phi <- (-d^2 + 1)^{-1} (n - (q(phi) - phi))``.

    Stops when the H^2 norm of the increment is at most ``tol``; ``phi0``
    warm-starts the iteration (default zero).
    """
    if tol < 1e-13:
        raise ValueError(f"tol must be >= 1e-13, got {tol}")
    n = np.asarray(n, dtype=float)
    phi = np.zeros_like(n) if phi0 is None else np.array(phi0, dtype=float)
    symbol = 1.0 / (grid.xi**2 + 1.0)
    phi_h = grid.fft(phi)
    increments = []
    for it in range(1, max_iter + 1):
        new_h = grid.fft(n - (q(phi) - phi)) * symbol
        inc = float(np.sqrt(sum(grid.sobolev_sq(new_h - phi_h))))
        phi_h = new_h
        phi = grid.ifft(new_h)
        increments.append(inc)
        if not np.isfinite(inc):
            raise ConvergenceError("fixed-point iteration produced non-finite values")
        if inc <= tol:
            return _finish(grid, n, phi, it, increments)
    raise ConvergenceError(
        f"fixed-point iteration did not converge in {max_iter} steps "
        f"(last increment {increments[-1]:.3g}, |n|_2 = {grid.l2(n):.3g})"
    )


def solve_phi_newton(
    grid: Grid, n, tol: float = 1e-12, max_iter: int = 50, phi0=None
) -> PotentialSolve:
    """Newton iteration with linearisation ``-d^2 + exp(phi)``.

    Initial guess ``(-d^2 + 1)^{-1} n``; stops when the L^2 residual of the
    equation is at most ``tol``.
    """
    n = np.asarray(n, dtype=float)
    phi = grid.helmholtz_inverse(n) if phi0 is None else np.array(phi0, dtype=float)
    increments = []
    # the residual floor is set by round-off in phi''; stop once it stalls
    best = np.inf
    for it in range(max_iter + 1):
        F = -grid.derivative(phi, 2) + q(phi) - n
        res = grid.l2(F)
        if not np.isfinite(res):
            raise ConvergenceError("Newton iteration diverged")
        if res <= tol or (it > 0 and res >= 0.5 * best and res <= 1e3 * tol):
            return _finish(grid, n, phi, it, increments)
        best = min(best, res)
        V = dq(phi) - 1.0
        if np.max(np.abs(V)) > 0.5:
            raise ValueError("Newton linearisation rejected: |exp(phi) - 1|_inf > 1/2")
        step = helmholtz_inverse_v(grid, -F, V, rtol=1e-11)
        increments.append(grid.h2(step))
        phi = phi + step
    raise ConvergenceError(f"Newton iteration did not converge in {max_iter} steps")


def phi_rate(grid: Grid, n_rate, phi, rtol: float = 1e-11):
    """``phi_t = (-d^2 + q'(phi))^{-1} n_t``, the constraint differentiated in time."""
    if not np.any(n_rate):
        return np.zeros_like(n_rate)
    return helmholtz_inverse_v(grid, n_rate, dq(phi) - 1.0, rtol=rtol)


def dphi_dt(grid: Grid, n, u, phi, rtol: float = 1e-11):
    """Time derivative of the potential along the flow.

    ``phi_t = -(-d^2 + q'(phi))^{-1} d_x((1 + n) u)``.
    """
    flux = (1.0 + np.asarray(n)) * np.asarray(u)
    return phi_rate(grid, -grid.derivative(flux), phi, rtol)
