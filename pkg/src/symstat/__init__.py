"""Edgeworth machinery for symmetric statistics of i.i.d. observations.

The package decomposes a symmetric statistic into orthogonal components,
computes the third/fourth cumulant corrections of its standardized law,
checks the moment and smoothness side conditions under which the two-term
expansion is valid to o(1/N), and runs the sampling experiments that show
both the expansion working and a lattice counterexample breaking it.
"""

from .errors import (
    BudgetError,
    CertificationError,
    DegenerateLinearPartError,
    InsufficientSignalError,
    InvalidArgumentError,
    SymstatError,
    UnsupportedModeError,
)
from .model import (
    Distribution,
    SymmetricKernel,
    SymmetricStatistic,
    distribution_from_json,
    example1_statistic,
    expect,
    finite,
    kernel_add,
    kernel_from_json,
    kernel_gini,
    kernel_poly,
    kernel_product,
    normal,
    rademacher,
    sample_mean,
    statistic_from_json,
    u_statistic,
    uniform,
)
from .hoeffding import (
    DifferenceMoments,
    HoeffdingDecomposition,
    canonical_component,
    components_for,
    decompose,
    delta_moments,
    difference_op,
    example1_components,
    linear_components,
    u_stat_components,
    verify_appendix1,
)
from .cumulants import (
    ConditionReport,
    CumulantSet,
    ReducibilityReport,
    check_conditions,
    cumulants,
    reducibility,
)
from .edgeworth import (
    Expansion,
    expansion_cdf,
    expansion_density,
    expansion_fourier,
    kolmogorov_distance,
)
from .charfn import (
    CharFunction,
    SmoothingKernel,
    calibrate_smoothing_scale,
    char_function,
    cramer_rho,
    cramer_rho_report,
    smoothing_kernel,
    verify_alpha_bound,
)
from .concentration import (
    SignedSumInstance,
    kleitman_bound,
    max_ball_count,
    symmetric_partition,
)
from .harness import (
    ExperimentResult,
    ExperimentSpec,
    RateFit,
    counterexample_probe,
    mc_floor,
    rate_fit,
    run_experiment,
    sigma_oracle,
    simulate_statistic,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
