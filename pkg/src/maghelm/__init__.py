"""maghelm: a numerical laboratory for singular electromagnetic Helmholtz
resolvents, their multiplier identities and weighted estimates."""

from .estimates import (
    ESTIMATE_KINDS,
    SweepResult,
    estimate_sweep,
    hardy_constant,
    operator_norm_sweep,
    sobolev_weight_constant,
    verify_estimate,
    verify_w1,
)
from .evolution import (
    ModeEigensystem,
    eigendecompose,
    propagate,
    smoothing_check,
)
from .farfield import (
    CoverageWarning,
    FarFieldResult,
    cross_section,
    default_radius_window,
    dr_flux,
    mass_bound_members,
    resolvent_mass,
    spectral_reconstruction,
    sphere_trace,
)
from .identities import (
    IdentityResidual,
    MultiplierSpec,
    alpha1_residual,
    cubic_multiplier,
    custom_multiplier,
    morawetz_residual,
    piecewise_multiplier,
    quadratic_multiplier,
    symmetric_antisymmetric_residuals,
)
from .model import (
    DEFAULT_NODES,
    EstimateReport,
    ModeIndex,
    ProblemSpec,
    RadialField,
    RadialMesh,
    SpecError,
    build_mesh,
    geometric_mesh,
    spec_hash,
    validate_spec,
)
from .norms import (
    WeightSpec,
    ah_dual,
    ah_norm,
    box_weight,
    dirichlet_form,
    gradient_split,
    morrey_campanato_norm,
    radial_weight,
    sphere_l2,
    weighted_l2,
)
from .potentials import (
    GaugeUndefinedError,
    HypothesisError,
    HypothesisReport,
    PotentialSpec,
    build_example,
    check_hypotheses,
    cromstrom_gauge,
    magnetic_field,
    tangential_field,
    vector_potential,
)
from .radial import (
    EffectiveRadialOp,
    ModeSolution,
    decompose_rhs,
    effective_index,
    h1_local_distance,
    limiting_absorption,
    resolve,
    solve_mode_fd,
    solve_mode_green,
)
from .report import (
    canonical_rows,
    emit_report,
    render_csv,
    render_json,
    report_row,
    summary_document,
    svg_line_plot,
)
from .sources import (
    SOURCE_KINDS,
    SourceSpec,
    as_rhs,
    source_cuts,
    source_from_config,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_NODES",
    "EstimateReport",
    "ModeIndex",
    "ProblemSpec",
    "RadialField",
    "RadialMesh",
    "SpecError",
    "build_mesh",
    "geometric_mesh",
    "spec_hash",
    "validate_spec",
    "GaugeUndefinedError",
    "HypothesisError",
    "HypothesisReport",
    "PotentialSpec",
    "build_example",
    "check_hypotheses",
    "cromstrom_gauge",
    "magnetic_field",
    "tangential_field",
    "vector_potential",
    "EffectiveRadialOp",
    "ModeSolution",
    "decompose_rhs",
    "effective_index",
    "h1_local_distance",
    "limiting_absorption",
    "resolve",
    "solve_mode_fd",
    "solve_mode_green",
    "IdentityResidual",
    "MultiplierSpec",
    "alpha1_residual",
    "cubic_multiplier",
    "custom_multiplier",
    "morawetz_residual",
    "piecewise_multiplier",
    "quadratic_multiplier",
    "symmetric_antisymmetric_residuals",
    "WeightSpec",
    "ah_dual",
    "ah_norm",
    "box_weight",
    "dirichlet_form",
    "gradient_split",
    "morrey_campanato_norm",
    "radial_weight",
    "sphere_l2",
    "weighted_l2",
    "SOURCE_KINDS",
    "SourceSpec",
    "as_rhs",
    "source_cuts",
    "source_from_config",
    "ESTIMATE_KINDS",
    "SweepResult",
    "estimate_sweep",
    "hardy_constant",
    "operator_norm_sweep",
    "sobolev_weight_constant",
    "verify_estimate",
    "verify_w1",
    "CoverageWarning",
    "FarFieldResult",
    "cross_section",
    "default_radius_window",
    "dr_flux",
    "mass_bound_members",
    "resolvent_mass",
    "spectral_reconstruction",
    "sphere_trace",
    "ModeEigensystem",
    "eigendecompose",
    "propagate",
    "smoothing_check",
    "canonical_rows",
    "emit_report",
    "render_csv",
    "render_json",
    "report_row",
    "summary_document",
    "svg_line_plot",
    "__version__",
]
