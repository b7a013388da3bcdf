# deprec-mdp - Package Init
# Version: 1.0
# Last Updated: 2026-10-18
# Discounted and average depreciating payoffs for finite MDPs
#
# Changes (v1.0):
# - Exports for the model, solvers, learning and scenario builders
# - Main entry point export

__version__ = "0.1.0"
__app_name__ = "deprec-mdp"

__all__ = ["__version__", "__app_name__"]

from deprec_mdp.config import Config
from deprec_mdp.errors import (
    DeprecMdpError,
    ParseError,
    SolverError,
    UnsupportedStructureError,
    ValidationError,
)
from deprec_mdp.mdp_core import Mdp, Policy, validate_mdp
from deprec_mdp.payoff import DiscountSpec
from deprec_mdp.rng import RngState
from deprec_mdp.exact_solver import (
    Criterion,
    ValueVector,
    solve_average,
    solve_discounted_depreciating,
    value_iteration_discounted,
)
from deprec_mdp.scenarios import CarDealershipParams, build_car_dealership, build_periodic_chain
from deprec_mdp.io_formats import parse_mdp, serialize_mdp

__all__ += [
    "Config",
    "DeprecMdpError",
    "ParseError",
    "SolverError",
    "UnsupportedStructureError",
    "ValidationError",
    "Mdp",
    "Policy",
    "validate_mdp",
    "DiscountSpec",
    "RngState",
    "Criterion",
    "ValueVector",
    "solve_average",
    "solve_discounted_depreciating",
    "value_iteration_discounted",
    "CarDealershipParams",
    "build_car_dealership",
    "build_periodic_chain",
    "parse_mdp",
    "serialize_mdp",
]

from deprec_mdp.main import main
__all__.append("main")
