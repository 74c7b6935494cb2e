"""Monte-Carlo oracle for the two-factor model.

Paths are simulated in fixed-size blocks. Block ``b`` draws from a Philox
counter-based generator keyed by ``(seed, b)``, so every normal used by
path ``i`` at step ``j`` depends only on ``(seed, i, j)``; results do not
depend on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .density import StationaryDensity, build_stationary_density
from .errors import HypothesisAViolated, SeedStreamExhausted
from .model import DriftFunction, TwoFactorModel, validate_hypothesis_A

BLOCK_SIZE = 8192
STEP_CHUNK = 32


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("TSQ_THREADS", "1")))
    except ValueError:
        return 1


def block_generator(seed: int, block: int) -> np.random.Generator:
    if block >= 2**64:
        raise SeedStreamExhausted("block index exceeds the 64-bit key space")
    key = np.array([seed % 2**64, block], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _drift_eval(drift: DriftFunction):
    if drift.is_polynomial:
        c = np.asarray([float(v) for v in drift.coefficients])
        return lambda y: np.polynomial.polynomial.polyval(y, c)
    return drift


@dataclass(frozen=True)
class SimulationConfig:
    """``y0 = None`` samples the initial dispersion from the stationary density."""

    n_paths: int = 100_000
    dt: float = 1e-3
    seed: int = 12345
    r0: float = 0.03
    y0: float | None = None
    antithetic: bool = False
    threads: int | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_paths < 1:
            raise ValueError("need at least one path")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic sampling needs an even path count")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_paths: int
    diagnostics: dict = field(default_factory=dict, compare=False)


def _blocks(n: int):
    starts = range(0, n, BLOCK_SIZE)
    return [(b, min(BLOCK_SIZE, n - s)) for b, s in enumerate(starts)]


def _run_blocks(fn, blocks, threads):
    if threads <= 1 or len(blocks) == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, blocks))


def mc_bond_price(
    model: TwoFactorModel,
    cfg: SimulationConfig,
    T: float,
    density: StationaryDensity | None = None,
) -> McEstimate:
    """``E[exp(-int_0^T r ds)]`` under the pricing dynamics

        dr = (kappa (theta - r) - lambda y) dt + sqrt(y) dw_r
        dy = (alpha(y) - lambda_tilde y) dt + omega sqrt(y) dw_y

    by Euler-Maruyama with full truncation and a trapezoidal discount integral.
    """
    diagnostics = {}
    if cfg.y0 is None:
        report = validate_hypothesis_A(model.drift, model.omega)
        if not report.passed:
            raise HypothesisAViolated("; ".join(report.failing_clauses()))
        if density is None:
            density = build_stationary_density(model.drift, model.omega)
    if model.omega > 0:
        rn = validate_hypothesis_A(model.drift.shifted(-model.lambda_tilde), model.omega)
        diagnostics["risk_neutral_hypothesis_A"] = rn.passed

    n_steps = max(1, math.ceil(T / cfg.dt - 1e-9))
    dt = T / n_steps
    sq = math.sqrt(dt)
    kap, th, lam, lt, om = model.kappa, model.theta, model.lam, model.lambda_tilde, model.omega
    alpha = _drift_eval(model.drift)
    per_draw = 2 if cfg.antithetic else 1

    def run(block):
        b, size = block
        gen = block_generator(cfg.seed, b)
        m = size // per_draw
        if cfg.y0 is None:
            y = density.ppf(gen.random(m))
        else:
            y = np.full(m, float(cfg.y0))
        if cfg.antithetic:
            y = np.concatenate([y, y])
        r = np.full(size, float(cfg.r0))
        integral = np.zeros(size)
        min_y = np.inf
        done = 0
        while done < n_steps:
            k = min(STEP_CHUNK, n_steps - done)
            z = gen.standard_normal((k, 2, m))
            if cfg.antithetic:
                z = np.concatenate([z, -z], axis=2)
            for j in range(k):
                yp = np.maximum(y, 0.0)
                sy = np.sqrt(yp) * sq
                r_new = r + (kap * (th - r) - lam * yp) * dt + sy * z[j, 0]
                y = y + (alpha(yp) - lt * yp) * dt + om * sy * z[j, 1]
                integral += 0.5 * (r + r_new) * dt
                r = r_new
            min_y = min(min_y, float(y.min()))
            done += k
        disc = np.exp(-integral)
        if cfg.antithetic:
            disc = 0.5 * (disc[:m] + disc[m:])
        return disc, min_y

    threads = cfg.threads or thread_count()
    out = _run_blocks(run, _blocks(cfg.n_paths), threads)
    disc = np.concatenate([d for d, _ in out])
    diagnostics["min_raw_y"] = min(v for _, v in out)
    diagnostics["n_steps"] = n_steps
    mean = float(np.mean(disc))
    stderr = float(np.std(disc, ddof=1) / math.sqrt(len(disc))) if len(disc) > 1 else math.nan
    return McEstimate(mean, stderr, cfg.n_paths, diagnostics)


@dataclass(frozen=True)
class StationarySample:
    samples: np.ndarray
    counts: np.ndarray
    bin_edges: np.ndarray
    ks_distance: float
    mean: float
    stderr: float


def ks_distance(samples: np.ndarray, f: StationaryDensity) -> float:
    """Sup distance between the empirical CDF and the quadrature CDF of ``f``."""
    x = np.sort(samples)
    n = len(x)
    F = np.asarray(f.cdf(x))
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def mc_stationary_sample(
    drift: DriftFunction,
    omega: float,
    burn_in: float = 50.0,
    n: int = 100_000,
    dt: float = 1e-2,
    seed: int = 2024,
    y0: float | None = None,
    density: StationaryDensity | None = None,
    bins: int = 100,
    threads: int | None = None,
) -> StationarySample:
    """Simulate ``dy = alpha(y) dt + omega sqrt(y) dw`` past ``burn_in`` years.

    One independent path per sample, full truncation, started at the
    stationary mean unless ``y0`` is given.
    """
    report = validate_hypothesis_A(drift, omega)
    if not report.passed:
        raise HypothesisAViolated("; ".join(report.failing_clauses()))
    if density is None:
        density = build_stationary_density(drift, omega)
    if y0 is None:
        y0 = density.integrate(lambda y: y)
    n_steps = max(1, math.ceil(burn_in / dt - 1e-9))
    h = burn_in / n_steps
    sq = math.sqrt(h)
    alpha = _drift_eval(drift)

    def run(block):
        b, size = block
        gen = block_generator(seed, b)
        y = np.full(size, float(y0))
        done = 0
        while done < n_steps:
            k = min(STEP_CHUNK, n_steps - done)
            z = gen.standard_normal((k, size))
            for j in range(k):
                yp = np.maximum(y, 0.0)
                y = y + alpha(yp) * h + omega * np.sqrt(yp) * sq * z[j]
            done += k
        return np.maximum(y, 0.0)

    samples = np.concatenate(_run_blocks(run, _blocks(n), threads or thread_count()))
    counts, edges = np.histogram(samples, bins=bins, range=(0.0, density.y_max))
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
    return StationarySample(samples, counts, edges, ks_distance(samples, density), float(samples.mean()), se)
