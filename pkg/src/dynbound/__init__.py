"""Spectral solver and estimate checks for a third-order dynamic boundary problem on the unit ball."""
from .sphharm import GridField, SpectralField, SphGrid, analyze, build_grid, quadrature, synthesize
from .calculus import (
    BallPoint,
    Multiplier,
    apply_multiplier,
    ball_norms,
    dtn_of,
    extend_harmonic,
    gagliardo_seminorm,
    multiplier_by_name,
    sobolev_norm,
)
from .evolve import (
    BoundaryState,
    DataTriple,
    EvolveParams,
    Trajectory,
    apply_L,
    mode_frequency,
    solve,
    step_exact,
    step_verlet,
)
from .datagen import RoughSpec, random_field, random_forcing, truncate

__version__ = "0.1.0"
