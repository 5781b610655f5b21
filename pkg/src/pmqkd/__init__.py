"""Simulator and key-rate analytics for n-state phase-matching QKD."""

from .montecarlo import RoundRecord, TallySummary, estimate_ex, run_batch, simulate_round
from .photonics import ProtocolParams, RangeError, arm_transmittance, port_intensities
from .rates import (
    Observables,
    RateReport,
    analytic_observables,
    entropy,
    optimize_intensity,
    plob_bound,
    rate_pm,
    rate_report,
    rate_shor_preskill,
)
from .sifting import NotOnLattice, correspondence_table, sift_round, slice_index, slice_match

__version__ = "0.1.0"
