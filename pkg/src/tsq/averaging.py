"""Bond prices averaged over the limiting dispersion distribution.

``P(t, r) = <pi(t, r, .)> = a(t) exp(-B(t) r)`` with ``a(t) = int A(t, y) f(y) dy``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import interpolate

from .density import StationaryDensity
from .errors import DomainMismatch, OutOfGrid
from .model import yield_from_price
from .pricer1f import TermStructure, vasicek_B
from .pricer2f import BondSurface2F

GL_ORDER = 6


@dataclass(frozen=True)
class AveragedPrice:
    tau_grid: np.ndarray
    a: np.ndarray
    B: np.ndarray
    kappa: float
    T: float
    weight_sum: float
    surface: BondSurface2F = field(repr=False, compare=False)
    density: StationaryDensity = field(repr=False, compare=False)

    @property
    def t_grid(self) -> np.ndarray:
        return self.T - self.tau_grid

    @cached_property
    def _a_spline(self):
        return interpolate.CubicSpline(self.tau_grid, self.a)

    def a_at(self, t):
        tau = self.T - np.asarray(t, dtype=float)
        if np.any(tau < -1e-12) or np.any(tau > self.tau_grid[-1] + 1e-12):
            raise OutOfGrid("t outside the averaged horizon")
        out = self._a_spline(np.clip(tau, 0.0, self.tau_grid[-1]))
        return out if np.ndim(out) else float(out)


def quadrature_nodes(surface: BondSurface2F, f: StationaryDensity, order: int = GL_ORDER):
    """Gauss-Legendre nodes on every ``y``-cell of the surface, weighted by ``f``.

    Fixed once per (density, surface) pair; the same nodes serve every time slice.
    """
    uncovered = 1.0 - float(f.cdf(surface.y_max)) + f.tail_mass
    if uncovered > 1e-9:
        raise DomainMismatch(f"density mass {uncovered:.3g} lies beyond the surface y-grid")
    return f.gauss_nodes(surface.y_grid, order)


def average_a(surface: BondSurface2F, f: StationaryDensity, order: int = GL_ORDER) -> AveragedPrice:
    """``a(t) = int A(t, y) f(y) dy`` at every time node of the surface."""
    nodes, weights = quadrature_nodes(surface, f, order)
    A_nodes = interpolate.CubicSpline(surface.y_grid, surface.A.T, axis=0)(nodes)
    a = weights @ A_nodes
    return AveragedPrice(
        surface.tau_grid, a, surface.B, surface.model.kappa, surface.T, float(weights.sum()), surface, f
    )


def averaged_price(avg: AveragedPrice, t, r):
    """``a(t) exp(-B(T - t) r)``."""
    tau = avg.T - np.asarray(t, dtype=float)
    out = avg.a_at(t) * np.exp(-vasicek_B(avg.kappa, tau) * np.asarray(r, dtype=float))
    return out if np.ndim(out) else float(out)


def averaged_term_structure(avg: AveragedPrice, r: float, maturities: Sequence[float]) -> TermStructure:
    taus = np.asarray(maturities, dtype=float)
    if np.any(taus <= 0) or np.any(np.diff(taus) <= 0):
        raise ValueError("maturities must be positive and strictly increasing")
    if taus[-1] > avg.T + 1e-12:
        raise OutOfGrid("maturity beyond the solved horizon")
    prices = np.asarray(averaged_price(avg, avg.T - taus, r), dtype=float)
    return TermStructure(taus, prices, np.asarray(yield_from_price(prices, taus)))


def maturity_derivatives(avg: AveragedPrice, order: int = 4, window: float = 0.5, degree: int = 9) -> np.ndarray:
    """One-sided estimates of ``d^k a / dt^k`` at ``t = T`` for ``k = 1..order``.

    Least-squares polynomial fit of ``a`` against ``tau`` on ``[0, window]``;
    ``d/dt = -d/dtau`` supplies the sign.
    """
    keep = avg.tau_grid <= window + 1e-12
    if keep.sum() <= degree:
        raise ValueError("window holds too few time nodes for the fit degree")
    c = np.polynomial.polynomial.polyfit(avg.tau_grid[keep], avg.a[keep], degree)
    k = np.arange(1, order + 1)
    return np.asarray([(-1.0) ** j * c[j] * np.prod(np.arange(1, j + 1)) for j in k])
