"""Current response of independent electrons in periodic crystals.

Simulates the current per unit volume of tight-binding Bloch electrons
after a uniform electric field is switched on, and cross-checks the
dynamics against closed-form predictors: Hall/Chern conductivity,
ballistic transport in metals, Bloch oscillations, the per-Dirac-cone
universal conductivity of semimetals, and the Kubo linear response.
"""

from ._kernels import BACKEND
from .lattice import Lattice2D, honeycomb_lattice, make_grid, reciprocal_basis
from .models import (DiracModel, HaldaneModel, HaldaneParams, TBModel,
                     dirac_points, fermi_velocity, load_hopping_list,
                     quasi_period_unitary)
from .spectral import (berry_chern, eigensystem, ground_projector,
                       kubo_current, liouvillian_apply, liouvillian_pinv)
from .dynamics import IntegratorOptions, propagate_frame, step_exp_midpoint
from .observables import (CurrentTrace, adiabatic_decomposition, ballistic_D,
                          bloch_predictor, classify_phase, current_integrand,
                          current_trace, dirac_timeavg, hall_sigma,
                          kubo_trace, running_average, semimetal_sigma)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Lattice2D", "honeycomb_lattice", "make_grid",
    "reciprocal_basis", "DiracModel", "HaldaneModel", "HaldaneParams",
    "TBModel", "dirac_points", "fermi_velocity", "load_hopping_list",
    "quasi_period_unitary", "berry_chern", "eigensystem", "ground_projector",
    "kubo_current", "liouvillian_apply", "liouvillian_pinv",
    "IntegratorOptions", "propagate_frame", "step_exp_midpoint",
    "CurrentTrace", "adiabatic_decomposition", "ballistic_D",
    "bloch_predictor", "classify_phase", "current_integrand",
    "current_trace", "dirac_timeavg", "hall_sigma", "kubo_trace",
    "running_average", "semimetal_sigma",
]
