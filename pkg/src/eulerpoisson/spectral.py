"""Periodic pseudospectral operators.

The whole line is approximated by a torus of length ``length``.  Fields are
plain float arrays sampled at the grid nodes; every operator here is a pure
function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, cg


class ConvergenceError(RuntimeError):
    """An iterative solve stopped before reaching its tolerance."""


class Norms(NamedTuple):
    l2: float
    linf: float
    h1: float
    h2: float


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with nodes ``x_j = -length/2 + j*dx``."""

    length: float
    points: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"Grid: length must be positive, got {self.length}")
        p = int(self.points)
        if p != self.points or p < 16 or p & (p - 1):
            raise ValueError(
                f"Grid: points must be a power of two >= 16, got {self.points}"
            )

    @cached_property
    def dx(self) -> float:
        return self.length / self.points

    @cached_property
    def x(self) -> np.ndarray:
        x = -0.5 * self.length + self.dx * np.arange(self.points)
        x.flags.writeable = False
        return x

    @cached_property
    def xi(self) -> np.ndarray:
        """Non-negative wavenumbers of the real FFT."""
        xi = 2.0 * np.pi * sfft.rfftfreq(self.points, d=self.dx)
        xi.flags.writeable = False
        return xi

    @cached_property
    def _odd_symbol(self) -> np.ndarray:
        # i*xi with the Nyquist mode removed so odd derivatives stay real
        s = 1j * self.xi
        s[-1] = 0.0
        return s

    @cached_property
    def _dealias_mask(self) -> np.ndarray:
        return (self.xi <= (2.0 / 3.0) * self.xi[-1]).astype(float)

    def fft(self, f):
        return sfft.rfft(f)

    def ifft(self, fh):
        return sfft.irfft(fh, n=self.points)

    def derivative(self, f, order: int = 1) -> np.ndarray:
        """Spectral derivative of order 1, 2 or 3."""
        if order not in (1, 2, 3):
            raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
        fh = sfft.rfft(f)
        if order == 1:
            fh *= self._odd_symbol
        elif order == 2:
            fh *= -self.xi**2
        else:
            fh *= -self.xi**2 * self._odd_symbol
        return sfft.irfft(fh, n=self.points)

    def helmholtz_inverse(self, f, shift: float = 1.0) -> np.ndarray:
        """Solve ``-g'' + shift*g = f`` exactly on the resolved modes."""
        return sfft.irfft(sfft.rfft(f) / (self.xi**2 + shift), n=self.points)

    def dealias(self, f) -> np.ndarray:
        """Apply the 2/3-rule truncation."""
        return sfft.irfft(sfft.rfft(f) * self._dealias_mask, n=self.points)

    def translate(self, f, distance: float) -> np.ndarray:
        """Return ``f(x - distance)`` by a spectral phase shift."""
        fh = sfft.rfft(f)
        nyquist = fh[-1].real * np.cos(self.xi[-1] * distance)
        fh *= np.exp(-1j * self.xi * distance)
        fh[-1] = nyquist
        return sfft.irfft(fh, n=self.points)

    def integrate(self, f) -> float:
        return float(self.dx * np.sum(f))

    def l2(self, f) -> float:
        return float(np.sqrt(self.dx * np.dot(f, f)))

    @cached_property
    def _parseval(self) -> tuple:
        # rfft mode weights: DC and Nyquist counted once, the rest twice
        c = np.full(self.xi.size, 2.0)
        c[0] = c[-1] = 1.0
        c *= self.dx / self.points
        c1 = c * self.xi**2
        c1[-1] = 0.0  # first derivative drops the Nyquist mode
        return c, c1, c * self.xi**4

    def sobolev_sq(self, fh) -> tuple:
        """Squared L^2 norms of f, f', f'' from the rfft coefficients."""
        p = np.abs(fh) ** 2
        c0, c1, c2 = self._parseval
        return float(p @ c0), float(p @ c1), float(p @ c2)

    def norms(self, f) -> Norms:
        f = np.asarray(f, dtype=float)
        a, b, c = self.sobolev_sq(sfft.rfft(f))
        return Norms(
            l2=float(np.sqrt(self.dx * np.dot(f, f))),
            linf=float(np.max(np.abs(f))) if f.size else 0.0,
            h1=float(np.sqrt(a + b)),
            h2=float(np.sqrt(a + b + c)),
        )

    def h2(self, f) -> float:
        return float(np.sqrt(sum(self.sobolev_sq(sfft.rfft(f)))))


def helmholtz_inverse_v(grid: Grid, f, V, rtol: float = 1e-10, maxiter: int = 200):
    """Solve ``-g'' + (1 + V) g = f`` for ``|V| <= 1/2``.

    Conjugate gradients on the symmetric positive definite collocation
    operator, preconditioned by the constant-coefficient inverse.  The
    returned solution satisfies ``|residual|_2 <= rtol * |f|_2``.
    """
    f = np.asarray(f, dtype=float)
    V = np.asarray(V, dtype=float)
    vmax = float(np.max(np.abs(V))) if V.size else 0.0
    if vmax > 0.5:
        raise ValueError(f"potential too large: |V|_inf = {vmax:.3g} > 1/2")
    fnorm = np.linalg.norm(f)
    if fnorm == 0.0:
        return np.zeros_like(f)
    n = grid.points
    shift = 1.0 + V

    def apply(g):
        return grid.ifft(grid.xi**2 * grid.fft(g)) + shift * g

    op = LinearOperator((n, n), matvec=apply, dtype=float)
    pre = LinearOperator((n, n), matvec=grid.helmholtz_inverse, dtype=float)
    g0 = grid.helmholtz_inverse(f)
    # CG tracks a recursive residual; aim slightly below the contract
    g, _ = cg(op, f, x0=g0, rtol=0.1 * rtol, atol=0.0, maxiter=maxiter, M=pre)
    res = np.linalg.norm(apply(g) - f) / fnorm
    if not res <= rtol:
        raise ConvergenceError(
            f"variable Helmholtz solve: relative residual {res:.3g} after {maxiter} iterations"
        )
    return g


def sech(z):
    """Overflow-free hyperbolic secant."""
    a = np.exp(-np.abs(z))
    return 2.0 * a / (1.0 + a * a)


@dataclass(frozen=True)
class WeightFamily:
    """The bounded weight ``A*tanh((x - center)/A)`` and its derivatives.

    The weight is evaluated at ``x - center`` on the unwrapped nodes; it is
    not periodised, so fields are expected to vanish near the torus seam.
    """

    A: float
    center: float = 0.0

    def __post_init__(self):
        if self.A < 10:
            raise ValueError(f"weight scale A must be >= 10, got {self.A}")

    def __call__(self, x, deriv: int = 0) -> np.ndarray:
        A = self.A
        z = (np.asarray(x, dtype=float) - self.center) / A
        t = np.tanh(z)
        s2 = sech(z) ** 2
        if deriv == 0:
            return A * t
        if deriv == 1:
            return s2
        if deriv == 2:
            return -2.0 / A * s2 * t
        if deriv == 3:
            return 2.0 / A**2 * s2 * (3.0 * t * t - 1.0)
        raise ValueError(f"weight derivative must be 0..3, got {deriv}")

    def eval(self, grid: Grid, deriv: int = 0) -> np.ndarray:
        return self(grid.x, deriv)
