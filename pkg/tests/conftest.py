from fractions import Fraction
from math import gamma as gamma_fn

import numpy as np
import pytest

from tsq.averaging import average_a
from tsq.density import build_stationary_density
from tsq.model import LinearDrift, PolynomialDrift, TwoFactorModel
from tsq.no1f import MomentSet
from tsq.pricer2f import solve_A_pde

REFERENCE = dict(kappa=1.0, theta=0.05, lam=0.5, T=5.0, omega=0.2, lambda_tilde=0.1)

REFERENCE_INI = """\
[shortrate]
kappa = 1
theta = 0.05
lambda = 0.5
T = 5

[volatility]
omega = 0.2
lambda_tilde = 0.1
drift = linear(2, 0.04)

[numerics]
seed = 7
"""


def reference_model(**overrides) -> TwoFactorModel:
    p = {**REFERENCE, **overrides}
    drift = p.pop("drift", LinearDrift(2.0, 0.04))
    return TwoFactorModel.build(p["kappa"], p["theta"], p["lam"], p["T"], p["omega"], p["lambda_tilde"], drift)


def exact_model(**overrides) -> TwoFactorModel:
    """Reference model with Fraction parameters (kappa_y = 2, theta_y = 1/25)."""
    p = dict(kappa=Fraction(1), theta=Fraction(1, 20), lam=Fraction(1, 2), T=Fraction(5),
             omega=Fraction(1, 5), lambda_tilde=Fraction(1, 10))
    p.update(overrides)
    drift = PolynomialDrift((Fraction(2, 25), Fraction(-2)))
    return TwoFactorModel.build(p["kappa"], p["theta"], p["lam"], p["T"], p["omega"], p["lambda_tilde"], drift)


def gamma_moments(shape, rate, kmax=6):
    """Exact ``<y^k>`` of Gamma(shape, rate) for integer shape and rational rate."""
    out = [Fraction(1)]
    for k in range(1, kmax + 1):
        out.append(out[-1] * (shape + k - 1) / rate)
    return tuple(out)


def exact_moment_set() -> MomentSet:
    m = gamma_moments(4, Fraction(100))
    # <alpha^2> = kappa_y^2 Var(y) for alpha = kappa_y (theta_y - y) with theta_y = <y>
    return MomentSet(m, 4 * (m[2] - m[1] ** 2))


def gamma_pdf(y, shape, rate):
    y = np.asarray(y, dtype=float)
    return rate**shape * y ** (shape - 1) * np.exp(-rate * y) / gamma_fn(shape)


@pytest.fixture(scope="session")
def model():
    return reference_model()


@pytest.fixture(scope="session")
def density(model):
    return build_stationary_density(model.drift, model.omega)


@pytest.fixture(scope="session")
def surface(model, density):
    return solve_A_pde(model, density=density)


@pytest.fixture(scope="session")
def averaged(surface, density):
    return average_a(surface, density)


@pytest.fixture
def ini_file(tmp_path):
    def make(text=REFERENCE_INI, name="model.ini"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    return make
