"""One-factor bond pricing: Vasicek closed form and a finite-difference solver.

The solver handles any model of the form

    dP/dt + (mu(t, r) - Lambda(t, r)) dP/dr + sigma(t, r)^2 / 2 d2P/dr2 - r P = 0,
    P(T, r) = 1,

where ``Lambda`` is volatility times market price of risk. The
Chan-Karolyi-Longstaff-Sanders family ``dr = (a + b r) dt + sigma r^gamma dw``
is one instance (``ckls_coefficients``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import interpolate, linalg

from .errors import GridTooCoarse, NegativeVariance
from .model import CKLSParams, VasicekParams, yield_from_price

Coefficient = Callable[[float, np.ndarray], np.ndarray]


def vasicek_B(kappa: float, tau):
    """``(1 - exp(-kappa tau)) / kappa`` without cancellation for small ``kappa tau``."""
    tau = np.asarray(tau, dtype=float)
    out = -np.expm1(-kappa * tau) / kappa
    return out if out.ndim else float(out)


def vasicek_log_A(p: VasicekParams, tau):
    B = vasicek_B(p.kappa, tau)
    k, s2 = p.kappa, p.sigma**2
    return (B - tau) * (p.theta - p.lambda_bar / k - s2 / (2 * k * k)) - s2 * B * B / (4 * k)


def vasicek_price(p: VasicekParams, t, r):
    """Closed-form ``A(t) exp(-B(t) r)`` for the Vasicek model."""
    tau = p.T - np.asarray(t, dtype=float)
    if np.any(tau < 0):
        raise ValueError("valuation time beyond maturity")
    out = np.exp(vasicek_log_A(p, tau) - vasicek_B(p.kappa, tau) * np.asarray(r, dtype=float))
    return out if np.ndim(out) else float(out)


def vasicek_coefficients(p: VasicekParams) -> tuple[Coefficient, Coefficient, Coefficient]:
    """Drift, volatility and risk term with the constant risk adjustment ``lambda_bar``."""
    mu = lambda t, r: p.kappa * (p.theta - r)
    sigma = lambda t, r: np.full_like(r, p.sigma, dtype=float)
    risk = lambda t, r: np.full_like(r, p.lambda_bar, dtype=float)
    return mu, sigma, risk


def ckls_coefficients(p: CKLSParams) -> tuple[Coefficient, Coefficient, Coefficient]:
    def sigma(t, r):
        return p.sigma * np.power(np.maximum(r, 0.0), p.gamma)

    mu = lambda t, r: p.a + p.b * r
    risk = lambda t, r: p.lambda_bar * sigma(t, r)
    return mu, sigma, risk


def vasicek_domain(p: VasicekParams, width: float = 10.0) -> tuple[float, float]:
    sd = p.sigma / math.sqrt(2 * p.kappa)
    sd = max(sd, 0.02)
    return min(0.0, p.theta) - width * sd, max(0.0, p.theta) + width * sd


def ckls_domain(p: CKLSParams, width: float = 10.0) -> tuple[float, float]:
    level = -p.a / p.b if p.b < 0 else max(p.a, 0.05)
    sd = p.sigma * max(level, 1e-3) ** p.gamma / math.sqrt(2 * max(-p.b, 1e-2))
    return 0.0, level + width * max(sd, 0.01)


@dataclass(frozen=True)
class PriceSurface1F:
    r_grid: np.ndarray
    t_grid: np.ndarray  # ascending, t_grid[-1] == T
    values: np.ndarray  # shape (len(t_grid), len(r_grid))
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def T(self) -> float:
        return float(self.t_grid[-1])

    def price(self, t: float, r):
        """Cubic in ``r``, linear in ``t``."""
        if not self.t_grid[0] - 1e-12 <= t <= self.T + 1e-12:
            raise ValueError(f"t={t} outside the solved horizon")
        j = int(np.clip(np.searchsorted(self.t_grid, t) - 1, 0, len(self.t_grid) - 2))
        t0, t1 = self.t_grid[j], self.t_grid[j + 1]
        wgt = (t - t0) / (t1 - t0)
        rows = self.values[j] * (1 - wgt) + self.values[j + 1] * wgt
        out = interpolate.CubicSpline(self.r_grid, rows)(np.asarray(r, dtype=float))
        return out if np.ndim(out) else float(out)

    def __call__(self, tau, r):
        return self.price(self.T - tau, r)


def _operator(m, s, r, h):
    """Banded (5, n) form of ``m d/dr + s d2/dr2 - r`` with boundary closures.

    Interior rows are central. The end rows use second-order one-sided
    convection and drop the diffusion term (zero far-field curvature, and
    exact where the volatility vanishes).
    """
    n = len(r)
    ab = np.zeros((5, n))  # ab[2 + i - j, j] = L[i, j]
    diag = -r.copy()
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[1:-1] = -m[1:-1] / (2 * h) + s[1:-1] / h**2
    upper[1:-1] = m[1:-1] / (2 * h) + s[1:-1] / h**2
    diag[1:-1] += -2 * s[1:-1] / h**2
    ab[2] = diag
    ab[3, :-1] = lower[1:]
    ab[1, 1:] = upper[:-1]
    # row 0: m0 (-3 P0 + 4 P1 - P2) / 2h
    ab[2, 0] += -3 * m[0] / (2 * h)
    ab[1, 1] += 4 * m[0] / (2 * h)
    ab[0, 2] += -m[0] / (2 * h)
    # row n-1: m (3 P_{n-1} - 4 P_{n-2} + P_{n-3}) / 2h
    ab[2, n - 1] += 3 * m[-1] / (2 * h)
    ab[3, n - 2] += -4 * m[-1] / (2 * h)
    ab[4, n - 3] += m[-1] / (2 * h)
    return ab


def _banded_matvec(ab, x):
    n = len(x)
    y = ab[2] * x
    y[:-1] += ab[1, 1:] * x[1:]
    y[:-2] += ab[0, 2:] * x[2:]
    y[1:] += ab[3, :-1] * x[:-1]
    y[2:] += ab[4, :-2] * x[:-2]
    return y


def _solve(mu, sigma, risk, T, r, n_t, weight, startup):
    h = r[1] - r[0]
    dt = T / n_t
    t_grid = T - dt * np.arange(n_t + 1)  # descending
    values = np.empty((n_t + 1, len(r)))
    P = np.ones_like(r)
    values[0] = P

    def coeffs(t):
        vol = np.asarray(sigma(t, r), dtype=float)
        var = vol * vol
        if not np.all(np.isfinite(var)) or np.any(var < 0):
            raise NegativeVariance("volatility undefined or variance negative on the r-grid")
        m = np.asarray(mu(t, r), dtype=float) - np.asarray(risk(t, r), dtype=float)
        return _operator(m, 0.5 * var, r, h)

    L_old = coeffs(t_grid[0])
    for n in range(1, n_t + 1):
        L_new = coeffs(t_grid[n])
        th = 1.0 if n <= startup else weight
        lhs = -th * dt * L_new
        lhs[2] += 1.0
        rhs = P + (1.0 - th) * dt * _banded_matvec(L_old, P) if th < 1.0 else P
        P = linalg.solve_banded((2, 2), lhs, rhs, check_finite=False)
        values[n] = P
        L_old = L_new
    return t_grid[::-1].copy(), values[::-1].copy()


def solve_1f_pde(
    mu: Coefficient,
    sigma: Coefficient,
    risk: Coefficient,
    T: float,
    r_domain: tuple[float, float],
    n_r: int = 401,
    n_t: int = 2000,
    weight: float = 0.5,
    startup: int = 2,
    tol: float | None = None,
) -> PriceSurface1F:
    """Backward theta-scheme solve of the one-factor bond pricing PDE.

    ``startup`` fully implicit steps precede the ``weight``-scheme steps.
    With ``tol`` set, a half-resolution solve gives a Richardson error
    estimate and :class:`GridTooCoarse` is raised when it exceeds ``tol``
    (relative to the price).
    """
    r = np.linspace(r_domain[0], r_domain[1], n_r)
    t_grid, values = _solve(mu, sigma, risk, T, r, n_t, weight, startup)
    diag = {"n_r": n_r, "n_t": n_t, "weight": weight, "startup": startup}
    if tol is not None:
        if (n_r - 1) % 2 or n_t % 2:
            raise ValueError("Richardson check needs an even number of r-cells and time steps")
        rc = r[::2]
        _, coarse = _solve(mu, sigma, risk, T, rc, n_t // 2, weight, startup)
        est = np.max(np.abs(values[::2, ::2] - coarse) / values[::2, ::2]) / 3.0
        diag["richardson_error"] = float(est)
        if est > tol:
            raise GridTooCoarse(f"Richardson error estimate {est:.3g} exceeds tolerance {tol:.3g}")
    return PriceSurface1F(r, t_grid, values, diag)


@dataclass(frozen=True)
class TermStructure:
    maturities: np.ndarray
    prices: np.ndarray
    yields: np.ndarray


def term_structure_1f(pricer: Callable[[float, float], float], r: float, maturities: Sequence[float]) -> TermStructure:
    """Prices and yields from ``pricer(tau, r)`` at increasing maturities."""
    taus = np.asarray(maturities, dtype=float)
    if np.any(taus <= 0) or np.any(np.diff(taus) <= 0):
        raise ValueError("maturities must be positive and strictly increasing")
    prices = np.asarray([float(pricer(tau, r)) for tau in taus])
    return TermStructure(taus, prices, np.asarray(yield_from_price(prices, taus)))


def vasicek_pricer(p: VasicekParams) -> Callable[[float, float], float]:
    return lambda tau, r: float(np.exp(vasicek_log_A(p, tau) - vasicek_B(p.kappa, tau) * r))
