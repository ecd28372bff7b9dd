# qssmix/__init__.py
"""
qssmix ── quasi-self-similar mixing flows and their dissipation, at desk scale.

Core pieces:
    Curve, NormalPerturbation   ── sampled planar curves and normal perturbations
    TubularMap, InverseMap      ── area-preserving tubular charts and their inverses
    CurveFamily, default_families ── time-indexed block curves and the family registry
    LocalField, LocalFieldSet   ── block scalar Theta and velocity V on the unit square
    assemble, TiledField        ── 5-adic tiling of level n
    SmoothedFamily, forcing     ── smoothed time schedule, v^m, rho^m and g^m
    SpectralSolver, dissipation_experiment ── pseudo-spectral advection-diffusion
    lift, ns_residual           ── the x3-independent 3D flow
    GridField                   ── periodic grid field with spectral and norm mixins

Typical use:
    from qssmix import LocalFieldSet, assemble
    blocks = LocalFieldSet.from_registry("rotating_circle", blocks=6, n=256)
    rho, v = assemble(1, blocks, t=0.5)
    print(rho.gradient_sup(), v.holder_seminorm(0.5))
"""

from .core import (
    QssmixError, GeometryError, InversionError, ConvergenceError, ResolutionError,
    SolverAbort, CFLViolation, ConfigError, FieldKind, Representation,
)
from .field import GridField
from .curve import Curve, FrenetData, NormalPerturbation, frenet, perturb, area_difference, curve_length
from .constraints import ConstraintReport, project_area_preserving, project_equal_length
from .area_map import TubularMap, InverseMap, build_map, invert, map_stability_report
from .families import CurveFamily, FamilyKind, FamilyRegistry, default_families, perturb_families
from .local_fields import LocalField, LocalFieldSet, build_cutoff, evaluate_fields
from .qss_family import Tiling, TiledField, FunctionBlocks, assemble, scaling_diagnostics, verify_recursion
from .time_smoothing import TimeSchedule, SmoothedFamily, build_eta, forcing, forcing_components, smoothed_fields
from .spectral_solver import (
    SpectralSolver, Trajectory, DissipationRecord, advect_diffuse, transport,
    h_minus1_norm, low_freq_mass, dissipation_experiment,
)
from .embed3d import Lifted3DField, lift, ns_residual, dissipation_aggregate

__all__ = [
    # errors and tags
    "QssmixError",
    "GeometryError",
    "InversionError",
    "ConvergenceError",
    "ResolutionError",
    "SolverAbort",
    "CFLViolation",
    "ConfigError",
    "FieldKind",
    "Representation",
    "GridField",
    # curves
    "Curve",
    "FrenetData",
    "NormalPerturbation",
    "frenet",
    "perturb",
    "area_difference",
    "curve_length",
    "ConstraintReport",
    "project_area_preserving",
    "project_equal_length",
    # maps
    "TubularMap",
    "InverseMap",
    "build_map",
    "invert",
    "map_stability_report",
    # families and fields
    "CurveFamily",
    "FamilyKind",
    "FamilyRegistry",
    "default_families",
    "perturb_families",
    "LocalField",
    "LocalFieldSet",
    "build_cutoff",
    "evaluate_fields",
    # construction
    "Tiling",
    "TiledField",
    "FunctionBlocks",
    "assemble",
    "scaling_diagnostics",
    "verify_recursion",
    "TimeSchedule",
    "SmoothedFamily",
    "build_eta",
    "forcing",
    "forcing_components",
    "smoothed_fields",
    # solver and lift
    "SpectralSolver",
    "Trajectory",
    "DissipationRecord",
    "advect_diffuse",
    "transport",
    "h_minus1_norm",
    "low_freq_mass",
    "dissipation_experiment",
    "Lifted3DField",
    "lift",
    "ns_residual",
    "dissipation_aggregate",
]
