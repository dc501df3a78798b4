"""Age of information for a FCFS status-update stream served by a server that takes vacations."""
from .analytic import (
    AgeBreakdown,
    SojournMixture,
    age_breakdown,
    average_age_app2,
    average_age_stream1,
    average_age_stream2,
    corrected_average_age,
    corrected_expected_ay,
    expected_ab,
    expected_ay,
    pgf_coefficients,
    pgf_eval,
    pi_b0,
    pi_v0,
    sojourn_mixture,
)
from .errors import (
    InvalidConfig,
    NearDegenerateRoots,
    NonFiniteRate,
    NonPositiveRate,
    NotLumpable,
    NumericalFailure,
    RelayAgeError,
    SingularSystem,
    TruncationInsufficient,
    Unstable,
)
from .model import Mode, SystemParams, is_stable, stability_margin, vacation_fraction, validate
from .optimize import OptimizerResult, compare_vacation_granularity, minimize_age, optimal_rate_vs_load

__version__ = "0.1.0"
