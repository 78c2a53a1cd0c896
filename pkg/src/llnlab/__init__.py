"""Numerical laboratory for law-of-large-numbers diagnostics.

The package samples the random-sequence families behind weak-dependence
strong-law statements, checks every hypothesis of those statements
numerically (variance series, quasi-uncorrelation, scaled-mean suprema,
tail integrals, truncation gaps), rebuilds the subsequence squeeze used
in the almost-sure argument as a pathwise-verifiable object, and runs
seeded Monte Carlo experiments with exact small-case oracles.
"""

from .conditions import (
    BaselBound,
    NormalizerSpec,
    RatioReport,
    ScaledMeanReport,
    SeriesReport,
    TailIntegralReport,
    TruncationGapReport,
    basel_tail_bound,
    basel_tail_suite,
    cg_tail_integral,
    kolmogorov_series,
    mean_abs_deviation_rate,
    quasi_uncorrelation_ratio,
    scaled_mean_sup,
    sup_tail_over_horizon,
    truncation_gap_report,
)
from .errors import LLNLabError
from .families import (
    FamilyDescriptor,
    MomentProfile,
    MomentValues,
    SequenceFamily,
    Trajectory,
    analytic_moment,
    constant,
    cosine,
    descriptor_from_json,
    descriptor_to_json,
    gated_gaussian,
    iid_bernoulli_scaled,
    iid_exponential,
    iid_uniform,
    make_family,
    sample_matrix,
    sample_trajectory,
    shifted_cosine,
    step,
    transform_family,
    transformed,
)
from .montecarlo import (
    ChebyshevComparison,
    DependenceProbeResult,
    EventEstimate,
    EventSpec,
    ExperimentResult,
    chebyshev_empirical,
    dependence_probe,
    estimate_event_probability,
    exact_step_deviation,
    exact_step_sign_probability,
    run_lln_experiment,
    wilson_interval,
)
from .proofkit import (
    ChebyshevLevelReport,
    KappaBound,
    SandwichReport,
    SubsequenceIndex,
    build_index,
    chebyshev_report,
    kappa_report,
    sandwich_check,
    subsequence_variance_series,
)
from .quadrature import (
    CosineMoment,
    GaussianPositivePartMoments,
    QuadratureResult,
    cosine_moment,
    gaussian_pospart_moments,
    gaussian_pospart_triple_nested,
    integrate_1d,
)

__version__ = "0.1.0"
