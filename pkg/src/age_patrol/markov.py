"""Core Markov-chain analytics for randomized patrol trajectories.

Everything downstream needs four derived quantities of an irreducible
row-stochastic matrix P:

* the stationary distribution ``pi`` solving pi P = pi,
* the fundamental matrix ``Z = (I - P + Pi)^-1`` with Pi stacking pi in
  every row (its diagonal encodes return-time second moments),
* the discrepancy ``max_i sum_j |z_ij - pi_j|``, a computable mixing
  surrogate,
* the SLEM (second-largest eigenvalue modulus), a classical mixing
  diagnostic used for reporting.

Dense linear algebra throughout: instances stay small (n <= 2000), so
exactly testable O(n^3) solves beat iterative machinery.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .constants import TOL
from .errors import NumericalError, PeriodicityWarning, ReducibleChainError

_PERIODIC_EIGENVALUE_CUTOFF = 1.0 - 1e-9


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix; entries must be nonnegative (no tolerance)."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("transition matrix must be square")
        if np.any(p < 0):
            raise ValueError("transition matrix entries must be nonnegative")
        rows = p.sum(axis=1)
        worst = np.max(np.abs(rows - 1.0))
        if worst > TOL.row_sum:
            raise ValueError(f"rows must sum to 1 (max deviation {worst:.3e})")
        p.flags.writeable = False
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def support_violations(self, graph) -> list:
        """Off-diagonal positive entries that are not edges of the graph."""
        bad = []
        for i, j in zip(*np.nonzero(self.p > 0)):
            i, j = int(i), int(j)
            if i != j and not graph.has_edge(i, j):
                bad.append((i, j))
        return bad


@dataclass(frozen=True)
class ChainAnalysis:
    """Derived quantities of one irreducible chain (immutable)."""

    matrix: TransitionMatrix
    pi: np.ndarray
    z: np.ndarray
    z_diag: np.ndarray
    discrepancy: float
    slem: float

    @property
    def n(self) -> int:
        return self.matrix.n

    def validate(self) -> None:
        """Re-check the defining residuals; raises on violation."""
        p = self.matrix.p
        if np.max(np.abs(self.pi @ p - self.pi)) > TOL.pi_residual:
            raise NumericalError("stationary residual out of tolerance")
        if abs(self.pi.sum() - 1.0) > TOL.pi_norm:
            raise NumericalError("stationary distribution does not sum to 1")
        if np.any(self.pi <= 0):
            raise NumericalError("stationary distribution must be positive")
        lhs = (np.eye(self.n) - p + np.tile(self.pi, (self.n, 1))) @ self.z
        if np.max(np.abs(lhs - np.eye(self.n))) > TOL.fundamental_residual:
            raise NumericalError("fundamental matrix residual out of tolerance")
        if self.discrepancy < 0:
            raise NumericalError("discrepancy must be nonnegative")


def check_irreducible(P: TransitionMatrix) -> bool:
    """True iff the support digraph of P is strongly connected."""
    p = P.p
    n = P.n
    fwd = [np.nonzero(p[i] > 0)[0] for i in range(n)]
    bwd = [np.nonzero(p[:, j] > 0)[0] for j in range(n)]

    def full(adj):
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    queue.append(int(v))
        return count == n

    return full(fwd) and full(bwd)


def stationary_distribution(P: TransitionMatrix) -> np.ndarray:
    """Solve pi P = pi, sum(pi) = 1 for an irreducible P.

    Uses the least-squares solution of (P^T - I) stacked with the
    normalization row; the returned vector satisfies
    max|pi P - pi| <= 1e-10 or a NumericalError reports the residual.
    """
    if not check_irreducible(P):
        raise ReducibleChainError("chain is reducible; stationary distribution not unique")
    n = P.n
    a = np.vstack([P.p.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[n] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    pi = pi / pi.sum()
    residual = float(np.max(np.abs(pi @ P.p - pi)))
    if residual > TOL.pi_solve_residual or np.any(pi <= 0):
        raise NumericalError(
            f"stationary solve failed (residual {residual:.3e}, min pi {pi.min():.3e})")
    return pi


def fundamental_matrix(P: TransitionMatrix, pi: np.ndarray) -> np.ndarray:
    """Z = (I - P + Pi)^-1 where Pi has every row equal to pi."""
    pi = np.asarray(pi, dtype=float)
    if np.max(np.abs(pi @ P.p - pi)) > TOL.design_pi_residual:
        raise ValueError("pi is not stationary for P within tolerance")
    n = P.n
    m = np.eye(n) - P.p + np.tile(pi, (n, 1))
    z = np.linalg.solve(m, np.eye(n))
    residual = float(np.max(np.abs(m @ z - np.eye(n))))
    if residual > TOL.fundamental_residual:
        cond = float(np.linalg.cond(m))
        raise NumericalError(
            f"fundamental solve residual {residual:.3e} (condition estimate {cond:.3e}"
            f"{' > limit' if cond > TOL.condition_limit else ''})")
    return z


def slem(P: TransitionMatrix) -> float:
    """Second-largest eigenvalue modulus of P.

    Emits a PeriodicityWarning when a second eigenvalue sits on the unit
    circle (periodic chain): the value is then 1 and mixing surrogates
    carry no information.
    """
    moduli = np.sort(np.abs(np.linalg.eigvals(P.p)))[::-1]
    value = float(moduli[1]) if len(moduli) > 1 else 0.0
    if value >= _PERIODIC_EIGENVALUE_CUTOFF:
        warnings.warn("chain is periodic; SLEM equals 1 and mixing diagnostics are meaningless",
                      PeriodicityWarning, stacklevel=2)
    return value


def discrepancy_of(z: np.ndarray, pi: np.ndarray) -> float:
    """max_i sum_j |z_ij - pi_j|."""
    return float(np.max(np.abs(z - pi[None, :]).sum(axis=1)))


def analyze(P: TransitionMatrix, pi: np.ndarray | None = None) -> ChainAnalysis:
    """Bundle stationary distribution, fundamental matrix, discrepancy, SLEM.

    ``pi`` may be supplied when it is known in closed form (e.g. for a
    designed chain); it is then verified rather than re-solved.
    """
    if pi is None:
        pi = stationary_distribution(P)
    else:
        pi = np.asarray(pi, dtype=float)
        if not check_irreducible(P):
            raise ReducibleChainError("chain is reducible")
        if np.max(np.abs(pi @ P.p - pi)) > TOL.design_pi_residual:
            raise ValueError("supplied pi is not stationary for P within tolerance")
    z = fundamental_matrix(P, pi)
    return ChainAnalysis(
        matrix=P,
        pi=pi,
        z=z,
        z_diag=np.diag(z).copy(),
        discrepancy=discrepancy_of(z, pi),
        slem=slem(P),
    )


def discrepancy(analysis: ChainAnalysis) -> float:
    return discrepancy_of(analysis.z, analysis.pi)


def return_time_moments(analysis: ChainAnalysis, i: int) -> tuple:
    """(mean, second moment) of the return time to terminal i.

    For an irreducible chain the mean is 1/pi_i and the second moment is
    -1/pi_i + 2 z_ii / pi_i^2.
    """
    pi_i = float(analysis.pi[i])
    z_ii = float(analysis.z_diag[i])
    mean = 1.0 / pi_i
    second = -1.0 / pi_i + 2.0 * z_ii / pi_i ** 2
    return mean, second
