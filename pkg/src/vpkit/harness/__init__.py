"""Checks of the a priori bounds, the averaging gain, convergence and stability."""
from .apriori import AprioriReport, apriori_track, lipschitz_in_time_check
from .cancellation import cancellation_check, cancellation_sums
from .convergence import (ConvergenceTable, free_streaming_gain, gain_verdict,
                          mollification_convergence, mollify)
from .gain import GainReport, averaging_gain_check
from .report import Assertion, failures, summary_text
from .uniqueness import (UniquenessReport, loeper_functional, shift_field,
                         uniqueness_experiment)

__all__ = [
    "AprioriReport", "apriori_track", "lipschitz_in_time_check",
    "cancellation_check", "cancellation_sums",
    "ConvergenceTable", "free_streaming_gain", "gain_verdict", "mollification_convergence",
    "mollify", "GainReport", "averaging_gain_check", "Assertion", "failures", "summary_text",
    "UniquenessReport", "loeper_functional", "shift_field", "uniqueness_experiment",
]
