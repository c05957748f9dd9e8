"""Periodic handover skipping in Poisson cellular networks.

Analytic rates and handover rates by adaptive quadrature, with a Monte Carlo
simulator of the same model for cross-checking.
"""

from .analytic import (
    Exact,
    ExactPolarJ,
    Interpolated,
    LowerBound,
    h0,
    h1,
    k_beta,
    sopt,
    sopt_numeric,
    t0,
    t1,
    tau,
    utility,
)
from .model import (
    Alternate,
    Constant,
    Erlang2,
    Exponential,
    HyperExp2,
    MobilityModel,
    NetworkParams,
    Periodic,
    Scenario0,
    UtilityParams,
    ValidationError,
)
from .quadrature import QuadratureSpec
from .simulate import SimConfig, estimate

__version__ = "0.1.0"
