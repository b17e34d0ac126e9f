"""fmpm: material point method engine with an incremental approximate
full-mass-matrix grid-velocity solver, incremental velocity boundary
conditions and multimaterial contact, and a benchmark CLI."""

from .backends import backend_name
from .boundary import BCSet, MovingWall, VelocityBC, apply_lumped_bcs, zero_bc_increment
from .contact import ContactModel, IncrementalContact, detect_contact, lumped_contact_dp
from .engine import (
    FmpmOptions,
    blend_coefficients,
    convergence_metric,
    dense_oracle_velocity,
    fmpm_velocity,
    legacy_fmpm_velocity,
    periodic_schedule,
)
from .errors import ConfigError, FmpmError, OutsideGridError
from .grid import Grid, NodalFields, Particles, scatter_forces, scatter_mass_momentum
from .materials import Material, neohookean_stress, update_deformation
from .shapes import ShapeTable, build_shape_table, sample_shapes
from .stepper import Simulation, StepConfig, compute_timestep, flip_update, fmpm_update

__version__ = "0.1.0"

__all__ = [
    "BCSet", "ContactModel", "ConfigError", "FmpmError", "FmpmOptions", "Grid",
    "IncrementalContact", "Material", "MovingWall", "NodalFields", "OutsideGridError",
    "Particles", "ShapeTable", "Simulation", "StepConfig", "VelocityBC",
    "apply_lumped_bcs", "backend_name", "blend_coefficients", "build_shape_table",
    "compute_timestep", "convergence_metric", "dense_oracle_velocity", "detect_contact",
    "flip_update", "fmpm_update", "fmpm_velocity", "legacy_fmpm_velocity",
    "lumped_contact_dp", "neohookean_stress", "periodic_schedule", "sample_shapes",
    "scatter_forces", "scatter_mass_momentum", "update_deformation", "zero_bc_increment",
]
