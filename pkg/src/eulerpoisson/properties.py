"""Randomized checks of the weighted resolvent bounds and the potential solve.

Every routine draws from ``numpy.random.default_rng(seed)`` and returns a
plain dict report (JSON-serialisable) with the fitted constants and the
per-sample pass count.
"""
from __future__ import annotations

import numpy as np

from .poisson import solve_phi_fixedpoint, solve_phi_newton
from .spectral import Grid, WeightFamily, helmholtz_inverse_v, sech

A_VALUES = (10.0, 20.0, 50.0)
POSITIVITY_TOL = 1e-12


def weighted_grid(A: float, dx: float = 0.1) -> Grid:
    """Torus of length ``16 A`` so that ``|x| <= length/2 - 5A`` is non-trivial."""
    length = 16.0 * A
    points = 1 << int(np.ceil(np.log2(length / dx)))
    return Grid(length, points)


def random_smooth(grid: Grid, rng, localized: bool = True) -> np.ndarray:
    """Band-limited noise, optionally under a Gaussian envelope at a random centre."""
    cutoff = rng.uniform(0.5, 3.0)
    coeff = rng.standard_normal(grid.xi.size) + 1j * rng.standard_normal(grid.xi.size)
    f = grid.ifft(coeff * np.exp(-((grid.xi / cutoff) ** 2)))
    if localized:
        x0 = rng.uniform(-0.5, 0.5) * grid.length
        width = rng.uniform(1.0, 0.25 * grid.length)
        d = (grid.x - x0 + 0.5 * grid.length) % grid.length - 0.5 * grid.length
        f = f * np.exp(-((d / width) ** 2))
    return f / np.max(np.abs(f))


def random_potential(grid: Grid, rng) -> np.ndarray:
    """Smooth periodic ``V`` with ``|V|_inf`` drawn uniformly below ``1/2``."""
    return rng.uniform(0.0, 0.49) * random_smooth(grid, rng, localized=False)


def _grids():
    return {A: weighted_grid(A) for A in A_VALUES}


def resolvent_suite(samples: int = 100, seed: int = 0) -> dict:
    """Weighted resolvent bounds over random ``(V, u, A)``.

    * commutation: ``|sech H_V^{-1} u| <= (1 + 10/A) |H_V^{-1} sech u|``
    * derivative bounds: ``sum_{j,k} |sech d^j H_V^{-1} d^k f| <= C |sech f|``
    * cosh conjugation: ``|cosh H^{-1}(sech f)| <= C |f|`` on ``|x| <= length/2 - 5A``

    with ``H_V = -d^2 + 1 + V`` and ``H = H_0``.
    """
    rng = np.random.default_rng(seed)
    grids = _grids()
    ratios, c1, c1_terms, c2, holds = [], [], [], [], 0
    for _ in range(samples):
        A = float(rng.choice(A_VALUES))
        g = grids[A]
        V = random_potential(g, rng)
        u = random_smooth(g, rng)
        s = sech(g.x / A)

        lhs = g.l2(s * helmholtz_inverse_v(g, u, V))
        rhs = g.l2(helmholtz_inverse_v(g, s * u, V))
        ratios.append(lhs / rhs)
        holds += lhs <= (1.0 + 10.0 / A) * rhs

        f = u
        base = g.l2(s * f)
        terms = []
        for k in (0, 1):
            inner = helmholtz_inverse_v(g, g.derivative(f, k) if k else f, V)
            for j in (0, 1):
                out = g.derivative(inner, j) if j else inner
                terms.append(g.l2(s * out) / base)
        c1.append(sum(terms))
        c1_terms.append(max(terms))

        inside = np.abs(g.x) <= 0.5 * g.length - 5.0 * A
        conj = np.cosh(g.x[inside] / A) * g.helmholtz_inverse(s * f)[inside]
        c2.append(np.sqrt(g.dx * np.sum(conj**2)) / g.l2(f))
    ratios = np.asarray(ratios)
    return {
        "samples": samples,
        "seed": seed,
        "commutation_holds": int(holds),
        "commutation_max_ratio": float(ratios.max()),
        "commutation_bound_min": 1.0 + 10.0 / max(A_VALUES),
        "derivative_C": float(max(c1)),
        "derivative_C_per_term": float(max(c1_terms)),
        "conjugation_C": float(max(c2)),
    }


def positivity_suite(samples: int = 100, seed: int = 0) -> dict:
    """``int phi_A' u (-d^2+1)^{-1} u >= -1e-12 |u|^2`` over random ``u``."""
    rng = np.random.default_rng(seed)
    grids = _grids()
    worst, holds = np.inf, 0
    for _ in range(samples):
        A = float(rng.choice(A_VALUES))
        g = grids[A]
        u = random_smooth(g, rng, localized=bool(rng.integers(2)))
        wp = WeightFamily(A).eval(g, 1)
        val = g.integrate(wp * u * g.helmholtz_inverse(u)) / g.l2(u) ** 2
        worst = min(worst, val)
        holds += val >= -POSITIVITY_TOL
    return {"samples": samples, "seed": seed, "holds": int(holds), "min_normalized": float(worst)}


def random_density(grid: Grid, rng, l2_max: float = 0.1) -> np.ndarray:
    n = random_smooth(grid, rng)
    return rng.uniform(0.1, 1.0) * l2_max * n / grid.l2(n)


def poisson_suite(samples: int = 50, seed: int = 0, grid: Grid | None = None) -> dict:
    """Fixed point vs Newton on random small ``n``, and ``|phi|_H2 / |n|_2``."""
    rng = np.random.default_rng(seed)
    g = grid or Grid(200.0, 4096)
    diffs, ratios = [], []
    for _ in range(samples):
        n = random_density(g, rng)
        fp = solve_phi_fixedpoint(g, n)
        nw = solve_phi_newton(g, n)
        diffs.append(g.h2(fp.phi - nw.phi))
        ratios.append(fp.ratio)
    return {
        "samples": samples,
        "seed": seed,
        "max_h2_diff": float(max(diffs)),
        "ratio_min": float(min(ratios)),
        "ratio_max": float(max(ratios)),
    }


def run_all(samples: int = 100, seed: int = 0) -> dict:
    res = resolvent_suite(samples, seed)
    pos = positivity_suite(samples, seed + 1)
    poi = poisson_suite(max(1, samples // 2), seed + 2)
    checks = {
        "commutation": res["commutation_holds"] == samples,
        "derivative_bounds": res["derivative_C"] <= 20.0,
        "cosh_conjugation": res["conjugation_C"] <= 10.0,
        "positivity": pos["holds"] == samples,
        "fixedpoint_vs_newton": poi["max_h2_diff"] <= 1e-10,
        "equivalence_ratio": 0.5 <= poi["ratio_min"] and poi["ratio_max"] <= 2.0,
    }
    return {"resolvent": res, "positivity": pos, "poisson": poi, "checks": checks}
