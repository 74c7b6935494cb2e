"""Two-factor stochastic-volatility term structures and their volatility averages.

The dispersion ``y`` (squared short-rate volatility) follows a square-root
process with a general drift ``alpha``. Bond prices separate as
``A(t, y) exp(-B(T - t) r)``; averaging ``A`` against the stationary
density of ``y`` gives ``a(t) exp(-B r)``, which the ``no1f`` module shows
cannot be produced by any one-factor short-rate model.
"""

from .averaging import AveragedPrice, average_a, averaged_price, averaged_term_structure, maturity_derivatives
from .density import (
    DensityEvolution,
    StationaryDensity,
    build_stationary_density,
    density_eval,
    evolve_density,
    functional_average,
    moment,
)
from .errors import *  # noqa: F401,F403
from .model import (
    CKLSParams,
    CubicDrift,
    DriftFunction,
    GeneralDrift,
    LinearDrift,
    PolynomialDrift,
    ShortRateParams,
    TwoFactorModel,
    ValidationReport,
    VasicekParams,
    VolatilityParams,
    alpha_hat,
    price_from_yield,
    validate_hypothesis_A,
    yield_from_price,
)
from .montecarlo import McEstimate, SimulationConfig, mc_bond_price, mc_stationary_sample
from .no1f import (
    ClosestVasicek,
    MomentSet,
    OneFactorCandidate,
    TaylorReport,
    closest_vasicek,
    compute_K,
    compute_omega_bar_sq,
    nonexistence_residual,
    route1_taylor,
    route2_taylor,
    taylor_recurrence_engine,
)
from .pricer1f import (
    PriceSurface1F,
    TermStructure,
    solve_1f_pde,
    term_structure_1f,
    vasicek_B,
    vasicek_price,
)
from .pricer2f import BondSurface2F, PdeResidualReport, bond_price_2f, solve_A_pde, verify_pi_pde

__version__ = "0.1.0"
