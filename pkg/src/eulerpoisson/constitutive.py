"""Pressure closures and the scalar functions derived from them.

For a pressure law ``p(rho)`` with ``rho = 1 + n``::

    w'(s) = p'(1 + s) / (1 + s),  w(0) = 0
    W(n)  = int_0^n w(s) ds
    S(n)  = n w(n) - W(n) = int_0^n s w'(s) ds

and for the Boltzmann electron response ``q(phi) = exp(phi) - 1``::

    Q(phi) = int_0^phi q = exp(phi) - 1 - phi
    R(phi) = phi q(phi) - Q(phi)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad_vec

VACUUM_FLOOR = 1e-6
QUAD_TOL = 1e-12


class VacuumError(ValueError):
    """Density reached the vacuum floor ``1 + n <= 1e-6``."""


class Thresholds(NamedTuple):
    k: float
    sonic: float
    slow: float


def _guard(n):
    n = np.asarray(n, dtype=float)
    if n.size and np.min(n) <= -1.0 + VACUUM_FLOOR:
        raise VacuumError(f"density below vacuum floor: min(1+n) = {1.0 + np.min(n):.3g}")
    return n


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class PressureLaw:
    """Convex, increasing pressure ``p(rho)``.

    Use the constructors :meth:`isothermal`, :meth:`polytropic` and
    :meth:`custom` rather than the raw fields.
    """

    kind: str
    k: float
    gamma: float = 1.0
    coefficient: float = 1.0
    p: Callable | None = None
    dp: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("isothermal", "polytropic", "custom"):
            raise ValueError(f"unknown pressure kind {self.kind!r}")
        if not self.k > 0:
            raise ValueError(f"k = p'(1) must be positive, got {self.k}")
        if self.kind == "polytropic":
            if self.gamma < 1:
                raise ValueError(f"adiabatic exponent must be >= 1, got {self.gamma}")
            if not math.isclose(self.k, self.coefficient * self.gamma, rel_tol=1e-12):
                raise ValueError("polytropic law requires k = coefficient * gamma")
        if self.kind == "custom":
            if self.dp is None:
                raise ValueError("custom law needs p'")
            self._check_convexity()

    @classmethod
    def isothermal(cls, k: float = 1.0) -> "PressureLaw":
        return cls("isothermal", k=float(k), coefficient=float(k))

    @classmethod
    def polytropic(cls, gamma: float, coefficient: float = 1.0) -> "PressureLaw":
        return cls(
            "polytropic",
            k=float(coefficient) * float(gamma),
            gamma=float(gamma),
            coefficient=float(coefficient),
        )

    @classmethod
    def custom(cls, p: Callable, dp: Callable) -> "PressureLaw":
        return cls("custom", k=float(dp(1.0)), p=p, dp=dp)

    def _check_convexity(self):
        s = np.linspace(0.1, 10.0, 2001)
        d = np.array([self.dp(v) for v in s], dtype=float)
        if np.any(d <= 0):
            raise ValueError("pressure law must satisfy p'(s) > 0 on [0.1, 10]")
        if np.any(np.diff(d) < -1e-12 * np.max(np.abs(d))):
            raise ValueError("pressure law must satisfy p''(s) >= 0 on [0.1, 10]")

    @property
    def _closed_gamma(self) -> float | None:
        if self.kind == "isothermal":
            return 1.0
        if self.kind == "polytropic":
            return self.gamma
        return None

    def dw(self, n):
        """``w'(n) = p'(1+n)/(1+n)``."""
        n = _guard(n)
        g = self._closed_gamma
        if g is not None:
            return _scalar_or_array(self.k * (1.0 + n) ** (g - 2.0))
        return _scalar_or_array(np.vectorize(self.dp, otypes=[float])(1.0 + n) / (1.0 + n))

    def w(self, n):
        n = _guard(n)
        g = self._closed_gamma
        if g == 1.0:
            return _scalar_or_array(self.k * np.log1p(n))
        if g is not None:
            return _scalar_or_array(self.k / (g - 1.0) * np.expm1((g - 1.0) * np.log1p(n)))
        # w(n) = n * int_0^1 w'(n t) dt
        val, _ = quad_vec(lambda t: n * self.dw(n * t), 0.0, 1.0, epsabs=0.0, epsrel=QUAD_TOL)
        return _scalar_or_array(val)

    def W(self, n):
        n = _guard(n)
        g = self._closed_gamma
        if g == 1.0:
            return _scalar_or_array(self.k * ((1.0 + n) * np.log1p(n) - n))
        if g is not None:
            # K/(g-1) * [((1+n)^g - 1)/g - n]
            Kp = self.coefficient
            return _scalar_or_array(
                Kp / (g - 1.0) * (np.expm1(g * np.log1p(n)) - g * n)
            )
        # W(n) = int_0^n (n - s) w'(s) ds = n^2 int_0^1 (1 - t) w'(n t) dt
        val, _ = quad_vec(
            lambda t: n * n * (1.0 - t) * self.dw(n * t), 0.0, 1.0, epsabs=0.0, epsrel=QUAD_TOL
        )
        return _scalar_or_array(val)

    def S(self, n):
        n = _guard(n)
        g = self._closed_gamma
        if g is None:
            # S(n) = int_0^n s w'(s) ds = n^2 int_0^1 t w'(n t) dt
            val, _ = quad_vec(
                lambda t: n * n * t * self.dw(n * t), 0.0, 1.0, epsabs=0.0, epsrel=QUAD_TOL
            )
            return _scalar_or_array(val)
        return _scalar_or_array(n * self.w(n) - self.W(n))

    def thresholds(self) -> Thresholds:
        return thresholds(self.k)


def w_eval(law: PressureLaw, n):
    return law.w(n)


def W_S_eval(law: PressureLaw, n) -> tuple:
    return law.W(n), law.S(n)


def thresholds(k: float) -> Thresholds:
    """Sonic speed ``sqrt(1+k)`` and slow ceiling ``k/sqrt(1+k)``."""
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    sonic = math.sqrt(1.0 + k)
    return Thresholds(k=float(k), sonic=sonic, slow=k / sonic)


def q(phi):
    return np.expm1(phi)


def dq(phi):
    return np.exp(phi)


def Q(phi):
    return np.expm1(phi) - phi


def R(phi):
    return phi * np.expm1(phi) - Q(phi)


def q_Q_R_eval(phi):
    return q(phi), Q(phi), R(phi)
