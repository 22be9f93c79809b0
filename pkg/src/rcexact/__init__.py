"""Exact and asymptotic random-coding error probabilities for discrete memoryless channels."""

__version__ = "0.1.0"

from .channel import Channel, bsc, load_channel, mutual_information, pairwise_score_values
from .errors import (
    ChannelValidationError,
    DomainError,
    NotApplicableError,
    RCError,
    ResourceError,
    SingularChannelError,
)
from .tilting import (
    Regime,
    TiltedSolution,
    ZFamily,
    critical_rate,
    error_exponent,
    gallager_moments,
    lambda_of_alpha,
    solve_exponent,
    tilted_moments,
)
from .lattice import LatticeClassification, classify, classify_nu_lattice, strongly_nonlattice_check
from .gfun import GContext, g_derivative, g_eval, psi_eval, union_coefficient
from .exact import (
    JointType,
    PairwiseErrorStats,
    ScoreDistribution,
    enumerate_joint_types,
    exact_prc,
    pairwise_stats,
    q_m_approx,
    q_m_exact,
    score_distribution,
    theorem1_bounds,
)
from .saddlepoint import SaddleResult, saddle_pair_probability, solve_lambda_star, typical_joint_type
from .bounds import (
    BoundReport,
    CompareOptions,
    compare_report,
    gallager_asymptotic,
    lemma6_expectation,
    theorem2_asymptotic,
    union_asymptotic,
)
