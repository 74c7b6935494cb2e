"""Limiting density of the dispersion process and its Fokker-Planck evolution.

For ``dy = alpha(y) dt + omega sqrt(y) dw`` the stationary density is

    f(y) = C y^(2 alpha(0)/omega^2 - 1) exp((2/omega^2) int_1^y alpha_hat)

with ``alpha_hat(y) = (alpha(y) - alpha(0)) / y``. For polynomial drifts the
inner integral is closed form; otherwise it is done by adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate, interpolate, linalg, optimize

from .errors import HypothesisAViolated, QuadratureNonConvergence, StepSizeUnderflow
from .model import DriftFunction, alpha_hat, validate_hypothesis_A

TAIL_FRACTION = 1e-12
MAX_MOMENT = 8


def _log_unnormalized(drift: DriftFunction, omega: float, y: np.ndarray, form: int = 2) -> np.ndarray:
    """Log of ``f / C`` for ``y > 0`` in either printed form (1 or 2)."""
    y = np.asarray(y, dtype=float)
    s = 2.0 / omega**2
    a0 = drift.alpha0
    if drift.is_polynomial:
        c = [float(v) for v in drift.coefficients]
        # int_1^y alpha_hat = sum_{k>=1} c_k (y^k - 1) / k
        tail = np.zeros_like(y)
        for k in range(len(c) - 1, 0, -1):
            tail = tail + c[k] * (np.power(y, k) - 1.0) / k
        if form == 2:
            return (s * a0 - 1.0) * np.log(y) + s * tail
        return -np.log(y) + s * (c[0] * np.log(y) + tail)

    def inner(yy):
        if form == 2:
            v, _ = integrate.quad(lambda x: alpha_hat(drift, x), 1.0, yy, limit=200)
            return (s * a0 - 1.0) * math.log(yy) + s * v
        v, _ = integrate.quad(lambda x: float(drift(x)) / x, 1.0, yy, limit=200)
        return -math.log(yy) + s * v

    return np.asarray([inner(float(v)) for v in np.ravel(y)]).reshape(y.shape)


@dataclass(frozen=True)
class StationaryDensity:
    """Normalized limiting density of the dispersion process.

    ``C`` is the normalization constant of the printed formula (it may
    overflow to ``inf`` for extreme parameters; evaluation always uses
    ``log_C``).
    """

    drift: DriftFunction
    omega: float
    log_C: float
    y_max: float
    mode: float
    quadrature_tol: float = 1e-10
    tail_mass: float = field(default=0.0, compare=False)

    @property
    def C(self) -> float:
        return math.exp(self.log_C) if self.log_C < 700 else math.inf

    @property
    def exponent(self) -> float:
        return 2.0 * self.drift.alpha0 / self.omega**2 - 1.0

    def pdf(self, y, form: int = 2):
        y_arr = np.asarray(y, dtype=float)
        out = np.zeros_like(y_arr)
        pos = y_arr > 0
        if np.any(pos):
            with np.errstate(over="ignore", under="ignore"):
                out[pos] = np.exp(self.log_C + _log_unnormalized(self.drift, self.omega, y_arr[pos], form))
        return out if out.ndim else float(out)

    __call__ = pdf

    def integrate(self, func: Callable, lo: float = 0.0, hi: float | None = None) -> float:
        hi = self.y_max if hi is None else hi
        pts = [p for p in (self.mode,) if lo < p < hi]
        val, err = integrate.quad(
            lambda y: func(y) * self.pdf(y), lo, hi, points=pts or None,
            epsabs=0.0, epsrel=max(self.quadrature_tol * 1e-3, 2e-14), limit=400,
        )
        if not np.isfinite(val) or abs(err) > max(self.quadrature_tol * max(abs(val), 1e-300), 1e-300) * 1e3:
            raise QuadratureNonConvergence(f"quadrature error estimate {err:.3g} for value {val:.6g}")
        return val

    def gauss_nodes(self, breaks: np.ndarray, order: int = 6) -> tuple[np.ndarray, np.ndarray]:
        """Composite Gauss-Legendre nodes on ``breaks`` and weights ``w_i f(y_i)``."""
        x, w = np.polynomial.legendre.leggauss(order)
        lo, hi = breaks[:-1, None], breaks[1:, None]
        nodes = (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel()
        weights = (0.5 * (hi - lo) * w).ravel()
        return nodes, weights * self.pdf(nodes)

    @cached_property
    def _cdf_interp(self):
        breaks = default_breaks(self.y_max, self.mode, 1200)
        nodes, wf = self.gauss_nodes(breaks, order=8)
        panel = wf.reshape(len(breaks) - 1, -1).sum(axis=1)
        cdf = np.concatenate([[0.0], np.cumsum(panel)])
        cdf /= cdf[-1]
        slope = self.pdf(breaks) / (wf.sum())
        return interpolate.CubicHermiteSpline(breaks, cdf, slope, extrapolate=False), breaks, cdf

    def cdf(self, y):
        interp, breaks, _ = self._cdf_interp
        y_arr = np.clip(np.asarray(y, dtype=float), 0.0, self.y_max)
        out = interp(y_arr)
        return out if np.ndim(out) else float(out)

    def ppf(self, u):
        """Inverse CDF by monotone interpolation of the tabulated CDF."""
        _, breaks, cdf = self._cdf_interp
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        inv = interpolate.PchipInterpolator(cdf[keep], breaks[keep])
        return inv(np.asarray(u, dtype=float))

    def quantile_upper(self, mass: float) -> float:
        """Smallest ``y`` with at least ``mass`` of the probability below it."""
        g = lambda y: float(self.cdf(y)) - mass
        if g(self.mode) >= 0:
            return self.mode
        if g(self.y_max) < 0:
            return self.y_max
        return optimize.brentq(g, self.mode, self.y_max, xtol=1e-14 * self.y_max)


def default_breaks(y_max: float, mode: float, n: int) -> np.ndarray:
    """Panel boundaries: geometric towards 0, uniform elsewhere."""
    n_geo = n // 4
    y_lo = max(mode, 1e-3 * y_max) * 1e-6
    geo = np.geomspace(y_lo, 0.5 * max(mode, 1e-3 * y_max), n_geo)
    uni = np.linspace(geo[-1], y_max, n - n_geo + 1)[1:]
    return np.concatenate([[0.0], geo, uni])


def build_stationary_density(drift: DriftFunction, omega: float, tol: float = 1e-10) -> StationaryDensity:
    """Normalize the explicit limiting density and locate its truncation bound."""
    report = validate_hypothesis_A(drift, omega)
    if not report.passed:
        raise HypothesisAViolated("; ".join(report.failing_clauses()))

    n_probe = 2000 if drift.is_polynomial else 300
    probe = np.geomspace(1e-10, 1e3, n_probe)
    with np.errstate(all="ignore"):
        lg = _log_unnormalized(drift, omega, probe)
    lg = np.where(np.isfinite(lg), lg, -np.inf)
    i = int(np.argmax(lg))
    if not np.isfinite(lg[i]):
        raise QuadratureNonConvergence("density is not finite anywhere on the probe grid")
    lo, hi = probe[max(i - 1, 0)], probe[min(i + 1, n_probe - 1)]
    res = optimize.minimize_scalar(
        lambda y: -float(_log_unnormalized(drift, omega, np.array([y]))[0]), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12 * hi},
    )
    mode = float(res.x)
    shift = float(_log_unnormalized(drift, omega, np.array([mode]))[0])

    def g(y):
        if y <= 0:
            return 0.0
        return math.exp(float(_log_unnormalized(drift, omega, np.array([y]))[0]) - shift)

    epsrel = max(tol * 1e-3, 2e-14)

    def quad(lo, hi):
        pts = [mode] if lo < mode < hi else None
        if math.isinf(hi):
            return integrate.quad(g, lo, hi, epsabs=0.0, epsrel=epsrel, limit=400)
        return integrate.quad(g, lo, hi, points=pts, epsabs=0.0, epsrel=epsrel, limit=400)

    y_max = 4.0 * mode
    for _ in range(60):
        body, body_err = quad(0.0, y_max)
        tail, _ = quad(y_max, math.inf)
        if not (np.isfinite(body) and np.isfinite(tail)):
            raise QuadratureNonConvergence("density integral is not finite")
        if tail < TAIL_FRACTION * body:
            break
        y_max *= 2.0
    else:
        raise QuadratureNonConvergence("stationary density tail never decays below threshold")
    if body_err > tol * body:
        raise QuadratureNonConvergence(f"normalization error {body_err / body:.3g} exceeds tol {tol:.3g}")

    total = body + tail
    log_C = -shift - math.log(total)
    return StationaryDensity(drift, omega, log_C, y_max, mode, tol, tail_mass=tail / total)


def moment(f: StationaryDensity, k: int) -> float:
    """``<y^k>`` under the stationary density, ``0 <= k <= 8``."""
    if k < 0 or k > MAX_MOMENT or int(k) != k:
        raise ValueError(f"moment order must be an integer in [0, {MAX_MOMENT}], got {k}")
    if k == 0:
        return f.integrate(lambda y: 1.0) + f.tail_mass
    return f.integrate(lambda y: y**k)


def functional_average(f: StationaryDensity, psi: Callable) -> float:
    """``<psi> = int psi(y) f(y) dy`` over ``[0, y_max]``."""
    return f.integrate(lambda y: float(psi(y)))


def density_eval(f: StationaryDensity, y):
    return f.pdf(y)


# ---------------------------------------------------------------------------
# transient Fokker-Planck
# ---------------------------------------------------------------------------


def fp_grid(y_max: float, n_cells: int = 400, y_bulk: float | None = None, floor: float = 1e-3) -> np.ndarray:
    """Cell edges on ``[0, y_max]`` from a smooth width profile.

    Widths grow linearly from ``floor * h`` near 0 up to ``h`` at
    ``y_bulk / 10``, stay uniform through the bulk and stretch beyond
    ``y_bulk`` where the density carries no mass.
    """
    y_bulk = 0.5 * y_max if y_bulk is None else min(y_bulk, y_max)
    y_ramp = 0.1 * y_bulk
    fine = np.linspace(0.0, y_max, 200_001)
    rel_width = np.clip(fine / y_ramp, floor, 1.0) * (1.0 + np.maximum(fine - y_bulk, 0.0) / (0.1 * y_bulk))
    density = 1.0 / rel_width
    xi = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(fine))])
    xi /= xi[-1]
    edges = np.interp(np.linspace(0.0, 1.0, n_cells + 1), xi, fine)
    edges[0], edges[-1] = 0.0, y_max
    return edges


def gamma_cells(edges: np.ndarray, shape: float, rate: float) -> np.ndarray:
    """Gamma density evaluated at cell centers, rescaled to unit discrete mass."""
    from scipy import stats

    centers = 0.5 * (edges[1:] + edges[:-1])
    vals = stats.gamma.pdf(centers, shape, scale=1.0 / rate)
    return vals / np.sum(vals * np.diff(edges))


def dirac_cells(edges: np.ndarray, y0: float) -> np.ndarray:
    """Narrow Gamma stand-in for ``delta(y - y0)``: mean ``y0``, variance = local width squared."""
    widths = np.diff(edges)
    j = min(np.searchsorted(edges, y0) - 1, len(widths) - 1)
    var = widths[max(j, 0)] ** 2
    return gamma_cells(edges, y0**2 / var, y0 / var)


@dataclass(frozen=True)
class DensityEvolution:
    edges: np.ndarray
    dt: float
    times: np.ndarray
    snapshots: np.ndarray
    masses: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    def l1_distance(self, density: Callable, index: int = -1) -> float:
        return float(np.sum(np.abs(self.snapshots[index] - density(self.centers)) * self.widths))


def fp_operator(drift: DriftFunction, omega: float, edges: np.ndarray, order: int = 6) -> np.ndarray:
    """Banded (3, n) generator of the zero-flux finite-volume scheme.

    The flux ``J = v f - D df/dy`` with ``v = alpha - omega^2/2`` and
    ``D = omega^2 y / 2`` is exponentially fitted between neighbouring
    centers: with ``phi' = v / D``,

        J = (f_i - f_{i+1} exp(-(phi_{i+1} - phi_i))) / int exp(-(phi - phi_i)) / D dy

    which is exact for a locally constant flux and reduces to
    Scharfetter-Gummel for constant coefficients. Both end fluxes are zero.
    """
    centers = 0.5 * (edges[1:] + edges[:-1])
    widths = np.diff(edges)
    n = len(centers)
    s2 = 0.5 * omega**2
    ratio = lambda y: (np.asarray(drift(y), dtype=float) - s2) / (s2 * y)

    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = centers[:-1, None], centers[1:, None]
    half = 0.5 * (hi - lo)
    nodes = half * x + 0.5 * (hi + lo)  # (n-1, order)

    def phi_from_lo(upper):
        # int_lo^upper v/D for each row, upper shaped (n-1, k)
        h = 0.5 * (upper - lo)
        inner = h[..., None] * x + (0.5 * (upper + lo))[..., None]
        return np.sum(h[..., None] * w * ratio(inner), axis=-1)

    dphi = phi_from_lo(hi)[:, 0]
    integral = np.sum(half * w * np.exp(-phi_from_lo(nodes)) / (s2 * nodes), axis=1)
    g_left = 1.0 / integral
    g_right = np.exp(-dphi) / integral

    ab = np.zeros((3, n))
    # d f_i / dt = (J_{i-1/2} - J_{i+1/2}) / w_i with J_e = g_left f_i - g_right f_{i+1}
    ab[1, :-1] -= g_left / widths[:-1]
    ab[0, 1:] += g_right / widths[:-1]
    ab[1, 1:] -= g_right / widths[1:]
    ab[2, :-1] += g_left / widths[1:]
    return ab


def evolve_density(
    drift: DriftFunction,
    omega: float,
    f0,
    horizon: float,
    edges: np.ndarray | None = None,
    n_steps: int = 2000,
    save_times=None,
) -> DensityEvolution:
    """Integrate the forward Fokker-Planck equation with implicit Euler steps.

    ``f0`` is either an array of cell values on ``edges`` or a callable
    evaluated at the cell centers.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if edges is None:
        dens = build_stationary_density(drift, omega)
        edges = fp_grid(dens.y_max, y_bulk=dens.quantile_upper(1.0 - 1e-9))
    centers = 0.5 * (edges[1:] + edges[:-1])
    widths = np.diff(edges)
    f = np.asarray(f0(centers) if callable(f0) else f0, dtype=float).copy()
    if f.shape != centers.shape or np.any(f < 0):
        raise ValueError("initial density must be non-negative on the grid cells")
    f /= np.sum(f * widths)

    dt = horizon / n_steps
    if dt < 1e-12:
        raise StepSizeUnderflow(f"time step {dt:.3g} below 1e-12")

    gen = fp_operator(drift, omega, edges)
    lhs = -dt * gen
    lhs[1] += 1.0

    if save_times is None:
        save_times = np.linspace(0.0, horizon, 51)
    save_steps = np.unique(np.clip(np.rint(np.asarray(save_times) / dt).astype(int), 0, n_steps))
    snaps = [f.copy()] if save_steps[0] == 0 else []
    masses = np.empty(n_steps + 1)
    masses[0] = np.sum(f * widths)
    for step in range(1, n_steps + 1):
        f = linalg.solve_banded((1, 1), lhs, f, check_finite=False)
        np.maximum(f, 0.0, out=f)
        masses[step] = np.sum(f * widths)
        if step in save_steps:
            snaps.append(f.copy())
    return DensityEvolution(edges, dt, save_steps * dt, np.asarray(snaps), masses)
