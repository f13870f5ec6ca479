"""Higher-order phase-transition energies: profiles, recovery fields, diagnostics.

The library studies the singularly perturbed functionals

    F_eps(u) = integral of (1/eps) W(u) + eps^(2k-1) (u^(k))^2

whose sharp-interface limit charges each jump of a +-1-valued function the
optimal-profile constant m_k. It computes m_k and its finite-interval /
relaxed / half-transition variants by constrained descent, builds 1-D and 2-D
recovery sequences whose energies attain m_k per jump (per unit interface
length in the plane), and ships the compactness-side diagnostics: well sets,
effective-transition counting, BV projection, and empirical probes of the
interpolation inequalities.
"""

from .core import (
    DoubleWell,
    Grid1D,
    GridFunction1D,
    K_MAX,
    StencilK,
    apply_derivative,
    centered_stencil,
    derivative_k,
    derivative_matrix,
    grid_function,
    make_grid,
    make_stencil,
    piecewise_quadratic_well,
    quadrature,
    quartic_well,
    stencil_radius,
    tabulated_well,
    tabulated_well_from_csv,
    trapezoid_weights,
)
from .diagnostics import (
    BVProjection,
    EnsembleSpec,
    ProbeReport,
    WellPartition,
    count_transitions,
    interp_probe,
    interp_ratio,
    interp_split_probe,
    project_BV,
    split_ratio,
    well_sets,
)
from .energy import EnergyParams, energy_F_eps, energy_gradient, energy_profile
from .errors import (
    ConfigurationError,
    DiagnosticError,
    ExtrapolationError,
    GapConditionError,
    InvariantViolation,
)
from .multidim import (
    CircleInterface,
    Grid2D,
    GridFunction2D,
    LineInterface,
    TensorK2,
    build_recovery_2d,
    energy_F_eps_2d,
    grid_function_2d,
    interface_length,
    operator_norm,
    read_field_binary,
    rotate_tensor,
    signed_distance,
    tensor_Dk_at,
    tensor_components,
    write_field_binary,
    write_field_csv,
)
from .profile import (
    GlueResult,
    HalfScan,
    HermiteBridge,
    MkTable,
    MStar,
    ProfileProblem,
    ProfileResult,
    RelaxedFamily,
    default_initial_profile,
    estimate_mk,
    glue_to_constant,
    hermite_extension,
    mstar_k,
    relaxed_family,
    solve_clamped,
    solve_half,
    solve_relaxed,
)
from .recovery import (
    GammaSweep,
    JumpFunction,
    Recovery1D,
    build_recovery_1d,
    gamma_sweep,
    sample_jump_function,
)

__version__ = "0.1.0"
