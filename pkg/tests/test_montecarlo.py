import math

import numpy as np
import pytest

from tsq.errors import HypothesisAViolated, SeedStreamExhausted
from tsq.model import LinearDrift, PolynomialDrift, VasicekParams
from tsq.montecarlo import (
    SimulationConfig,
    block_generator,
    ks_distance,
    mc_bond_price,
    mc_stationary_sample,
    thread_count,
)
from tsq.pricer1f import vasicek_price

from conftest import reference_model


def frozen_dispersion_model(y0=0.04, T=2.0):
    """omega = 0 and alpha = 0 keep y at y0: the short rate is Vasicek with sigma^2 = y0."""
    return reference_model(omega=0.0, lam=0.0, lambda_tilde=0.0, T=T, drift=PolynomialDrift((0.0,)))


def test_single_step_price_near_one(model, density):
    est = mc_bond_price(model, SimulationConfig(n_paths=1000, dt=1e-3, seed=1), 1e-3, density=density)
    assert est.diagnostics["n_steps"] == 1
    assert abs(est.mean - 1) < 1e-4


def test_frozen_dispersion_matches_vasicek():
    m = frozen_dispersion_model()
    est = mc_bond_price(m, SimulationConfig(n_paths=20_000, dt=1e-2, seed=3, r0=0.03, y0=0.04), m.T)
    exact = vasicek_price(VasicekParams(1.0, 0.05, 0.2, 0.0, m.T), 0.0, 0.03)
    assert abs(est.mean - exact) < 3 * est.stderr


def test_antithetic_reduces_variance():
    m = frozen_dispersion_model()
    base = dict(n_paths=8_000, dt=2e-2, seed=5, r0=0.03, y0=0.04)
    plain = mc_bond_price(m, SimulationConfig(**base), m.T)
    anti = mc_bond_price(m, SimulationConfig(**base, antithetic=True), m.T)
    assert anti.stderr < plain.stderr


def test_same_seed_bitwise_identical(model, density):
    cfg = SimulationConfig(n_paths=10_000, dt=5e-2, seed=11)
    a = mc_bond_price(model, cfg, 1.0, density=density)
    b = mc_bond_price(model, cfg, 1.0, density=density)
    assert (a.mean, a.stderr) == (b.mean, b.stderr)


def test_thread_count_does_not_change_result(model, density):
    cfgs = [SimulationConfig(n_paths=20_000, dt=5e-2, seed=11, threads=k) for k in (1, 4)]
    a, b = (mc_bond_price(model, c, 1.0, density=density) for c in cfgs)
    assert (a.mean, a.stderr) == (b.mean, b.stderr)


def test_different_seeds_differ(model, density):
    a = mc_bond_price(model, SimulationConfig(n_paths=2_000, dt=5e-2, seed=1), 1.0, density=density)
    b = mc_bond_price(model, SimulationConfig(n_paths=2_000, dt=5e-2, seed=2), 1.0, density=density)
    assert a.mean != b.mean


@pytest.mark.slow
def test_weak_convergence_in_dt(model, density):
    coarse = mc_bond_price(model, SimulationConfig(n_paths=20_000, dt=2e-2, seed=9), 2.0, density=density)
    fine = mc_bond_price(model, SimulationConfig(n_paths=20_000, dt=5e-3, seed=9), 2.0, density=density)
    assert abs(coarse.mean - fine.mean) < 2 * math.hypot(coarse.stderr, fine.stderr)


def test_risk_neutral_hypothesis_reported(density):
    ok = mc_bond_price(reference_model(), SimulationConfig(n_paths=100, dt=0.1, seed=1), 0.5, density=density)
    assert ok.diagnostics["risk_neutral_hypothesis_A"] is True
    bad = reference_model(lambda_tilde=-3.0)
    est = mc_bond_price(bad, SimulationConfig(n_paths=100, dt=0.1, seed=1), 0.5, density=density)
    assert est.diagnostics["risk_neutral_hypothesis_A"] is False


def test_hypothesis_required_for_stationary_start():
    with pytest.raises(HypothesisAViolated):
        mc_bond_price(reference_model(drift=LinearDrift(1.0, 0.01)), SimulationConfig(n_paths=10), 1.0)
    with pytest.raises(HypothesisAViolated):
        mc_stationary_sample(LinearDrift(1.0, 0.01), 0.2, n=10)


@pytest.mark.parametrize(
    "kwargs", [dict(dt=0.0), dict(n_paths=0), dict(n_paths=3, antithetic=True)]
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SimulationConfig(**kwargs)


def test_single_path_has_nan_stderr(model, density):
    est = mc_bond_price(model, SimulationConfig(n_paths=1, dt=0.1), 1.0, density=density)
    assert est.n_paths == 1 and math.isnan(est.stderr)


def test_seed_stream_bounds():
    with pytest.raises(SeedStreamExhausted):
        block_generator(1, 2**64)
    a = block_generator(2**64 + 5, 3).standard_normal(4)
    b = block_generator(5, 3).standard_normal(4)
    assert np.array_equal(a, b)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("TSQ_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("TSQ_THREADS", "junk")
    assert thread_count() == 1


@pytest.fixture(scope="module")
def stationary_run():
    return mc_stationary_sample(LinearDrift(2, 0.04), 0.2, burn_in=20.0, n=20_000, seed=3)


def test_stationary_sample_distance(stationary_run):
    assert stationary_run.ks_distance < 0.02
    assert abs(stationary_run.mean - 0.04) < 3 * stationary_run.stderr
    assert np.all(stationary_run.samples >= 0)
    assert stationary_run.counts.sum() == 20_000


def test_stationary_histograms_reproducible(stationary_run):
    again = mc_stationary_sample(LinearDrift(2, 0.04), 0.2, burn_in=20.0, n=20_000, seed=3)
    assert np.array_equal(again.counts, stationary_run.counts)


def test_ks_distance_of_exact_quantiles(density):
    u = (np.arange(1000) + 0.5) / 1000
    assert ks_distance(density.ppf(u), density) < 1e-3
