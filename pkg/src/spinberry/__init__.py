"""Spin-1/2 in a precessing magnetic field with Lindblad dissipation.

Exact and integrated master-equation dynamics in the lab, rotating,
diagonal and instantaneous frames; adiabatic closed forms with their
geometric phase; magnetization spectra and line fits.
"""

from .adiabatic import (
    adiabatic_convergence_probe,
    adiabatic_dephasing_rho_I,
    adiabatic_thermal_rho_I,
    analytic_spectrum,
    phase_report,
)
from .engine import IntegratorOptions, Method, Trajectory, evolve, evolve_exact_diagonal
from .generators import Channel, GeneratorSpec, make_generator, thermal_fixed_point
from .model import Frame, ModelParams, convert_state, derived, initial_state
from .qcore import BlochVector, DensityMatrix, bloch_from_density, density_from_bloch, linear_entropy

__version__ = "0.1.0"

__all__ = [
    "BlochVector",
    "Channel",
    "DensityMatrix",
    "Frame",
    "GeneratorSpec",
    "IntegratorOptions",
    "Method",
    "ModelParams",
    "Trajectory",
    "adiabatic_convergence_probe",
    "adiabatic_dephasing_rho_I",
    "adiabatic_thermal_rho_I",
    "analytic_spectrum",
    "bloch_from_density",
    "convert_state",
    "density_from_bloch",
    "derived",
    "evolve",
    "evolve_exact_diagonal",
    "initial_state",
    "linear_entropy",
    "make_generator",
    "phase_report",
    "thermal_fixed_point",
]
