"""Two-factor stochastic-volatility bond prices ``pi = A(t, y) exp(-B(T - t) r)``.

``B`` is the Vasicek factor in closed form. ``A`` solves, backwards in
``tau = T - t``,

    A_tau = (alpha(y) - lambda_tilde y) A_y + omega^2 y / 2 A_yy
            - B(tau) (kappa theta - lambda y - y B(tau) / 2) A,      A(tau=0) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, linalg

from .density import StationaryDensity, build_stationary_density, moment
from .errors import GridTooCoarse, HypothesisAViolated, OutOfGrid
from .model import TwoFactorModel, validate_hypothesis_A
from .pricer1f import vasicek_B

Y_MASS = 1.0 - 1e-10
Y_SAFETY = 1.5


def y_grid(y_max: float, mean: float, n_cells: int = 400, floor: float = 1e-3) -> np.ndarray:
    """Nodes on ``[0, y_max]`` clustered near 0 and near ``mean``.

    Node ``k`` sits at ``xi = k / n_cells`` of a fixed stretching map, so
    the grid for ``n_cells / 2`` is every other node of this one.
    """
    y_ramp = 0.25 * mean
    fine = np.linspace(0.0, y_max, 200_001)
    rel = np.clip(fine / y_ramp, floor, 1.0) * (1.0 - 0.5 * np.exp(-(((fine - mean) / mean) ** 2)))
    xi = np.concatenate([[0.0], np.cumsum(0.5 * (1 / rel[1:] + 1 / rel[:-1]) * np.diff(fine))])
    xi /= xi[-1]
    nodes = np.interp(np.linspace(0.0, 1.0, n_cells + 1), xi, fine)
    nodes[0], nodes[-1] = 0.0, y_max
    return nodes


def _space_operator(y: np.ndarray, v: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Banded (5, n) form of ``v d/dy + D d2/dy2`` on a non-uniform grid.

    Interior: three-point central stencils, first-order upwind convection
    where the cell Peclet number exceeds 2. ``y = 0``: the diffusion
    vanishes and convection uses a one-sided three-point stencil. ``y_max``:
    zero second derivative, backward three-point convection.
    """
    n = len(y)
    h = np.diff(y)
    hm, hp = h[:-1], h[1:]
    vi, Di = v[1:-1], D[1:-1]

    c_lo = -hp / (hm * (hm + hp)) * vi
    c_mid = (hp - hm) / (hm * hp) * vi
    c_hi = hm / (hp * (hm + hp)) * vi
    peclet = np.abs(vi) * np.maximum(hm, hp) / np.maximum(Di, 1e-300)
    up = peclet > 2.0
    pos = up & (vi > 0)
    neg = up & (vi <= 0)
    c_lo = np.where(pos, 0.0, np.where(neg, -vi / hm, c_lo))
    c_mid = np.where(pos, -vi / hp, np.where(neg, vi / hm, c_mid))
    c_hi = np.where(pos, vi / hp, np.where(neg, 0.0, c_hi))

    c_lo = c_lo + 2 * Di / (hm * (hm + hp))
    c_mid = c_mid - 2 * Di / (hm * hp)
    c_hi = c_hi + 2 * Di / (hp * (hm + hp))

    ab = np.zeros((5, n))  # ab[2 + i - j, j] = L[i, j]
    idx = np.arange(1, n - 1)
    ab[2, idx] = c_mid
    ab[3, idx - 1] = c_lo
    ab[1, idx + 1] = c_hi

    h1, h2 = h[0], h[1]
    ab[2, 0] = v[0] * -(2 * h1 + h2) / (h1 * (h1 + h2))
    ab[1, 1] = v[0] * (h1 + h2) / (h1 * h2)
    ab[0, 2] = v[0] * -h1 / (h2 * (h1 + h2))

    hn, hn1 = h[-1], h[-2]
    ab[2, n - 1] = v[-1] * (2 * hn + hn1) / (hn * (hn1 + hn))
    ab[3, n - 2] = v[-1] * -(hn1 + hn) / (hn1 * hn)
    ab[4, n - 3] = v[-1] * hn / (hn1 * (hn1 + hn))
    return ab


def _matvec(ab: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = ab[2] * x
    out[:-1] += ab[1, 1:] * x[1:]
    out[:-2] += ab[0, 2:] * x[2:]
    out[1:] += ab[3, :-1] * x[:-1]
    out[2:] += ab[4, :-2] * x[:-2]
    return out


@dataclass(frozen=True)
class BondSurface2F:
    model: TwoFactorModel
    y_grid: np.ndarray
    tau_grid: np.ndarray  # ascending from 0 to T
    A: np.ndarray  # shape (len(tau_grid), len(y_grid))
    B: np.ndarray  # closed form at tau_grid
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def T(self) -> float:
        return self.model.T

    @property
    def t_grid(self) -> np.ndarray:
        return self.T - self.tau_grid

    @property
    def y_max(self) -> float:
        return float(self.y_grid[-1])

    def A_row(self, k: int, y):
        return interpolate.CubicSpline(self.y_grid, self.A[k])(y)

    def A_at(self, t: float, y):
        """Cubic spline in ``y``, linear in time."""
        tau = self.T - t
        if tau < -1e-12 or tau > self.tau_grid[-1] + 1e-12:
            raise OutOfGrid(f"t={t} outside the solved horizon")
        y = np.asarray(y, dtype=float)
        if np.any(y < 0) or np.any(y > self.y_max * (1 + 1e-12)):
            raise OutOfGrid(f"y outside [0, {self.y_max:.6g}]")
        k = int(np.clip(np.searchsorted(self.tau_grid, tau) - 1, 0, len(self.tau_grid) - 2))
        w = (tau - self.tau_grid[k]) / (self.tau_grid[k + 1] - self.tau_grid[k])
        w = min(max(w, 0.0), 1.0)
        return (1 - w) * self.A_row(k, y) + w * self.A_row(k + 1, y)


def solve_A_pde(
    model: TwoFactorModel,
    y_max: float | None = None,
    n_y: int = 400,
    n_t: int = 2000,
    density: StationaryDensity | None = None,
    tol: float | None = None,
) -> BondSurface2F:
    """Crank-Nicolson solve of the ``A``-equation from ``tau = 0`` to ``T``.

    ``y_max`` defaults to 1.5 times the ``1 - 1e-10`` quantile of the
    stationary dispersion density. With ``tol`` set, a half-resolution solve
    on every other node gives a Richardson estimate; exceeding ``tol``
    raises :class:`GridTooCoarse`.
    """
    report = validate_hypothesis_A(model.drift, model.omega)
    if not report.passed:
        raise HypothesisAViolated("; ".join(report.failing_clauses()))
    if density is None:
        density = build_stationary_density(model.drift, model.omega)
    if y_max is None:
        y_max = Y_SAFETY * density.quantile_upper(Y_MASS)
    mean = moment(density, 1)
    y = y_grid(y_max, mean, n_y)

    tau, A = _crank_nicolson(model, y, n_t)
    diag = {"n_y": n_y, "n_t": n_t, "y_max": y_max}
    if tol is not None:
        if n_y % 2 or n_t % 2:
            raise ValueError("Richardson check needs even n_y and n_t")
        _, Ac = _crank_nicolson(model, y[::2], n_t // 2)
        est = float(np.max(np.abs(A[::2, ::2] - Ac) / np.abs(A[::2, ::2])) / 3.0)
        diag["richardson_error"] = est
        if est > tol:
            raise GridTooCoarse(f"Richardson error estimate {est:.3g} exceeds tolerance {tol:.3g}")

    B = vasicek_B(model.kappa, tau)
    # reported, never asserted: direction in which A(t, .) moves with y for t < T
    dA = np.diff(A[1:], axis=1)
    if np.all(dA >= -1e-12):
        diag["monotone_in_y"] = "increasing"
    elif np.all(dA <= 1e-12):
        diag["monotone_in_y"] = "decreasing"
    else:
        diag["monotone_in_y"] = "none"
    return BondSurface2F(model, y, tau, A, B, diag)


def _crank_nicolson(model: TwoFactorModel, y: np.ndarray, n_t: int):
    T = model.T
    dt = T / n_t
    tau = dt * np.arange(n_t + 1)
    v = np.asarray(model.drift(y), dtype=float) - model.lambda_tilde * y
    D = 0.5 * model.omega**2 * y
    M = _space_operator(y, v, D)
    kt = model.kappa * model.theta

    def reaction(t):
        B = vasicek_B(model.kappa, t)
        return -B * (kt - model.lam * y - 0.5 * y * B)

    A = np.empty((n_t + 1, len(y)))
    A[0] = 1.0
    a = A[0].copy()
    q_old = reaction(tau[0])
    for n in range(1, n_t + 1):
        q_new = reaction(tau[n])
        rhs = a + 0.5 * dt * (_matvec(M, a) + q_old * a)
        lhs = -0.5 * dt * M
        lhs[2] += 1.0 - 0.5 * dt * q_new
        a = linalg.solve_banded((2, 2), lhs, rhs, check_finite=False)
        A[n] = a
        q_old = q_new
    return tau, A


def bond_price_2f(surface: BondSurface2F, t: float, r, y):
    """``A(t, y) exp(-B(T - t) r)`` from the solved surface."""
    B = vasicek_B(surface.model.kappa, surface.T - t)
    out = surface.A_at(t, y) * np.exp(-B * np.asarray(r, dtype=float))
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class PdeResidualReport:
    max_residual: float
    residuals: np.ndarray
    points: np.ndarray
    n_y: int
    n_t: int


def verify_pi_pde(surface: BondSurface2F, points, h_r: float = 1e-3) -> PdeResidualReport:
    """Residual of the full two-factor pricing PDE at ``(t, r, y)`` points.

    ``t`` snaps to the nearest time node. Time derivatives are finite
    differences across neighbouring nodes, ``y`` derivatives come from a
    cubic spline of each time slice and ``r`` derivatives from central
    differences of the separable price.
    """
    m = surface.model
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dt = surface.tau_grid[1] - surface.tau_grid[0]
    res = np.empty(len(pts))

    def pi_row(k, r, y):
        return surface.A_row(k, y) * np.exp(-surface.B[k] * r)

    for i, (t, r, y) in enumerate(pts):
        k = int(np.clip(np.rint((surface.T - t) / dt), 0, len(surface.tau_grid) - 1))
        if k == 0:
            d_tau = (-3 * pi_row(0, r, y) + 4 * pi_row(1, r, y) - pi_row(2, r, y)) / (2 * dt)
        elif k == len(surface.tau_grid) - 1:
            d_tau = (3 * pi_row(k, r, y) - 4 * pi_row(k - 1, r, y) + pi_row(k - 2, r, y)) / (2 * dt)
        else:
            d_tau = (pi_row(k + 1, r, y) - pi_row(k - 1, r, y)) / (2 * dt)
        spline = interpolate.CubicSpline(surface.y_grid, surface.A[k])
        e = np.exp(-surface.B[k] * r)
        pi0 = spline(y) * e
        pi_y = spline(y, 1) * e
        pi_yy = spline(y, 2) * e
        up, dn = pi_row(k, r + h_r, y), pi_row(k, r - h_r, y)
        pi_r = (up - dn) / (2 * h_r)
        pi_rr = (up - 2 * pi0 + dn) / h_r**2
        res[i] = (
            -d_tau
            + (m.kappa * (m.theta - r) - m.lam * y) * pi_r
            + (float(m.drift(y)) - m.lambda_tilde * y) * pi_y
            + 0.5 * y * pi_rr
            + 0.5 * m.omega**2 * y * pi_yy
            - r * pi0
        )
    return PdeResidualReport(float(np.max(np.abs(res))), res, pts, len(surface.y_grid) - 1, len(surface.tau_grid) - 1)
