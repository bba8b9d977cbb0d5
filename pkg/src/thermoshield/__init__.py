"""Energies of thermal-insulation configurations under general boundary
dissipation laws: closed-form radial solutions, a 2D annulus solver,
shape optimization, and level-set verification machinery."""

from .dissipation import (
    Convection,
    DissipationLaw,
    Linear,
    Power,
    Radiation,
    SurfaceCost,
    Tabulated,
    epsilon_regularize,
    flat_criterion,
    hyp_theta_inf,
    law_from_json,
    law_to_json,
    unit_ball_volume,
    volume_bound,
)
from .radial import (
    BestRadius,
    EnergyBreakdown,
    RadialConfig,
    RegimeReport,
    best_radius,
    classify_regime,
    convection_energy,
    convection_state,
    general_radial_energy,
    gradient_ratio_max,
    perturbation_expansion,
    phi,
    phi_prime,
    threshold_radius,
)
from .annulus import (
    FourierShape,
    Mesh,
    ScalarField,
    StarPair,
    energy_of,
    scale_field,
    solve_state,
)
from .levelset import (
    LevelDecomposition,
    RadialReference,
    dearrangement,
    decompose_levels,
    h_function,
    h_inequality_check,
    high_cutoff_bound,
    nodal_gradient_ratio,
    truncation_scan,
)
from .optimize import (
    OptimizeOptions,
    OptimizeResult,
    optimize_constrained,
    optimize_penalized,
)

__all__ = [
    "BestRadius",
    "Convection",
    "DissipationLaw",
    "EnergyBreakdown",
    "FourierShape",
    "LevelDecomposition",
    "Linear",
    "Mesh",
    "OptimizeOptions",
    "OptimizeResult",
    "Power",
    "RadialConfig",
    "Radiation",
    "RadialReference",
    "RegimeReport",
    "ScalarField",
    "StarPair",
    "SurfaceCost",
    "Tabulated",
    "best_radius",
    "classify_regime",
    "convection_energy",
    "convection_state",
    "dearrangement",
    "decompose_levels",
    "energy_of",
    "epsilon_regularize",
    "flat_criterion",
    "general_radial_energy",
    "gradient_ratio_max",
    "h_function",
    "h_inequality_check",
    "high_cutoff_bound",
    "hyp_theta_inf",
    "law_from_json",
    "law_to_json",
    "nodal_gradient_ratio",
    "optimize_constrained",
    "optimize_penalized",
    "perturbation_expansion",
    "phi",
    "phi_prime",
    "scale_field",
    "solve_state",
    "threshold_radius",
    "truncation_scan",
    "unit_ball_volume",
    "volume_bound",
]
