"""Central record of numerical tolerances so library checks and tests agree."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    row_sum: float = 1e-10             # row-stochasticity of transition matrices
    pi_solve_residual: float = 1e-10   # max|pi P - pi| accepted from the linear solve
    pi_residual: float = 1e-9          # stationarity residual accepted in a chain analysis
    pi_norm: float = 1e-12             # |sum(pi) - 1|
    fundamental_residual: float = 1e-8  # max-abs of (I - P + Pi) Z - I
    condition_limit: float = 1e12      # near-singularity guard for the fundamental solve
    design_pi_residual: float = 1e-7   # stationarity tolerance for designed chains
    feasibility: float = 1e-7          # optimizer constraint residuals on return
    detailed_balance: float = 1e-12    # reversibility check for the Metropolis chain
    peak_identity: float = 1e-9        # sum(w/pi*) versus (sum sqrt(w))^2


TOL = Tolerances()
