"""Quantum-enhanced response function estimation.

Probe measurement models (single photon and two-photon N00N), a grid
Bayesian estimator for phase and visibility, interpolation error
functionals, and campaigns trading sampling density against per-point
precision.
"""

__version__ = "0.1.0"

from .bayes import (  # noqa: E402
    EstimatorConfig,
    PosteriorGrid,
    PosteriorSummary,
    estimate_point,
    posterior_grid,
    posterior_moments,
)
from .functions import (  # noqa: E402
    InterpolationMethod,
    SampledFunction,
    continuous_delta,
    delta_squared,
    interpolate,
    select_subset,
)
from .measurement import (  # noqa: E402
    FisherMatrix,
    PhasePoint,
    ProbeKind,
    ProbeModel,
    crb_variance,
    effective_phase_fisher,
    fisher_matrix,
    outcome_probability,
    probability_vector,
    shots_from_resources,
)
from .simulate import (  # noqa: E402
    CountRecord,
    ResponseModel,
    SeededRng,
    acquire_function,
    eval_response,
    sample_counts,
    sample_crb_estimates,
)
