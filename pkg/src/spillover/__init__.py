"""Commuting-weighted MW exposure, rental-market simulation, estimation, incidence."""

__version__ = "0.1.0"

from . import counterfactual, econometrics, equilibrium_sim, exposure, policy_panel

__all__ = [
    "__version__",
    "counterfactual",
    "econometrics",
    "equilibrium_sim",
    "exposure",
    "policy_panel",
]
