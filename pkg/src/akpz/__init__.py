"""Event-driven growth of interlaced particle arrays (anisotropic KPZ class)
with the matching limit-equation toolkit and convergence harness."""

__version__ = "0.1.0"

from .errors import (
    AkpzError,
    ConfigError,
    DomainError,
    InstanceTooLargeError,
    NumericalError,
    ResourceGuardError,
    WindowExhaustedError,
)
from .lattice import (
    DEFAULT_SLOPE_MARGIN,
    LocalizationBox,
    ParticleConfig,
    Slope,
    build_config,
    max_gap,
    neighbor_labels,
    site_parity_ok,
    star_coords,
    star_vertex,
    validate_config,
)
from .heights import (
    HeightField,
    ProfileSpec,
    SlopeRegion,
    affine_profile,
    capped_paraboloid_profile,
    config_from_height,
    config_from_profile,
    gap_bound,
    height_from_config,
    height_from_profile,
    make_profile,
    quadratic_bump_profile,
    reanchor,
    smoothed_ridge_profile,
    svg_snapshot,
    two_affine_profile,
)
from .growth import (
    EventStream,
    GrowthResult,
    couple_monotone,
    generate_events,
    propagation_check,
    run_pair_nested,
    run_pair_same_noise,
    simulate,
    step,
    variational_oracle,
)
from .gibbs import (
    TorusTiling,
    density_stats,
    drift_estimate,
    fluctuation_stats,
    make_counts,
    sample_gibbs,
    unroll_to_config,
    unroll_window,
)
from .hjpde import (
    CharResult,
    GridFunction1D,
    GridFunction2D,
    RiemannResult,
    RiemannSpec,
    TfEstimate,
    characteristics_solve,
    convex_envelope,
    detect_gradient_jumps,
    detect_gradient_jumps_1d,
    drift_v,
    envelope_flat_pieces,
    estimate_Tf,
    grad_v,
    hessian_signature,
    hessian_v,
    hopf_solve,
    legendre_transform,
    riemann_from_slopes,
    riemann_solve,
)
from .harness import (
    ConvergenceRow,
    Experiment,
    aggregate,
    margin_insensitivity_check,
    rows_from_csv,
    rows_to_csv,
    run_experiment,
    run_shock,
    run_smooth,
    summary_text,
    verdict_line,
)

__all__ = [name for name in dir() if not name.startswith("_")]
