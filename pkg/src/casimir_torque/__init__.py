"""Casimir energy and torque between rotated lamellar gratings, and a torsion-balance noise model."""

__version__ = "0.1.0"

from .balance import BalanceParams, derived_mechanics, min_detectable_torque, noise_spectrum, simulate_langevin
from .energy import QuadratureSpec, energy_per_area, lifshitz_flat, torque_per_area
from .grating import GratingGeometry, reflection_1d
from .materials import Constant, Drude, PerfectConductor, epsilon_imag, gold_drude

__all__ = [
    "BalanceParams",
    "Constant",
    "Drude",
    "GratingGeometry",
    "PerfectConductor",
    "QuadratureSpec",
    "derived_mechanics",
    "energy_per_area",
    "epsilon_imag",
    "gold_drude",
    "lifshitz_flat",
    "min_detectable_torque",
    "noise_spectrum",
    "reflection_1d",
    "simulate_langevin",
    "torque_per_area",
]
