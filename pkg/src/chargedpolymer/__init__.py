"""Charged-walk pair-energy simulation library.

Monte Carlo engines, exact lattice oracles, and statistical gates for the
energy K_n = sum_{i<j<=n} q_i q_j [S_i == S_j] of a random walk whose
vertices carry i.i.d. charges.
"""

__version__ = "0.1.0"

from .charges import (ChargeEnvironment, ChargeLaw, TruncationSchedule,
                      tau_subsequence, truncate_charges)
from .energy import (PolymerEnergyState, brute_force_energy, qv_decomposition,
                     quenched_mean, step_energy, windowed_energy)
from .oracles import (MomentSpec, OracleTable, annealed_second_moment,
                      brute_quenched_moment, chi_identity_check,
                      partition_decomposition_check, return_probabilities,
                      sigma2)
from .stats import (ReplicaEnsemble, TestReport, d1_annealed_limit_sampler,
                    d1_quenched_oscillation, fdd_covariance, ks_gaussian,
                    ks_two_sample, qv_convergence)
from .walks import PolymerWalkState, StepLaw, advance, make_step_law, \
    reset_window

__all__ = [
    "ChargeEnvironment", "ChargeLaw", "TruncationSchedule",
    "tau_subsequence", "truncate_charges",
    "PolymerEnergyState", "brute_force_energy", "qv_decomposition",
    "quenched_mean", "step_energy", "windowed_energy",
    "MomentSpec", "OracleTable", "annealed_second_moment",
    "brute_quenched_moment", "chi_identity_check",
    "partition_decomposition_check", "return_probabilities", "sigma2",
    "ReplicaEnsemble", "TestReport", "d1_annealed_limit_sampler",
    "d1_quenched_oscillation", "fdd_covariance", "ks_gaussian",
    "ks_two_sample", "qv_convergence",
    "PolymerWalkState", "StepLaw", "advance", "make_step_law",
    "reset_window",
]
