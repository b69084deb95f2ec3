"""EPR-paradox and separability criteria for two-mode continuous-variable states."""

from .criteria import (
    CriterionReport,
    any_g_product_criterion,
    duan_sum_criterion,
    evaluate_all,
    linear_product_criterion,
    reid_epr_criterion,
    two_mode_squeezing_criterion,
)
from .errors import (
    DegenerateStateError,
    EprcvError,
    GridError,
    InvalidStateError,
    TruncationError,
    UnsupportedStateError,
)
from .experiment import MeasurementRecord, estimate_criteria, experiment_pair, run_experiment
from .inference import (
    P_PAIR,
    P_PAIR_FLIPPED,
    X_PAIR,
    LinearEstimator,
    inference_variance_conditional,
    inference_variance_linear,
    optimal_gain,
)
from .lhv import LhvEnsemble, check_uncertainty_proviso, lhv_outcomes, lhv_predicts, smeared, wigner_sample
from .quadrature import QuadratureGrid, conditional_profile, joint_distribution, marginal_moments
from .specfile import dump_state, load_state
from .states import (
    FockDensityMatrix,
    GaussianState,
    SeparableMixture,
    UncertaintyBounds,
    make_gaussian_tmsv,
    make_separable_random,
    make_two_mode_squeezed_vacuum,
    moments,
)

__version__ = "0.1.0"
