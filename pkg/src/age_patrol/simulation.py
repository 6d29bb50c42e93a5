"""Discrete-time simulation of information gathering on a mobility graph.

One agent walks the graph, one move per slot.  Terminal ages start at 1,
grow by 1 per slot, and reset to 1 on the slot after a visit; the age
recorded at a visit slot equals the return time since the previous
visit, so visit gaps and age peaks are the same numbers.

The engine never touches per-terminal ages slot by slot: between two
visits the age curve is an arithmetic ramp, so each visit contributes a
closed-form (window-clipped) partial sum.  This keeps million-slot runs
cheap while producing exactly the same statistics as a naive per-slot
update.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .aoi_analysis import average_age_lower_bound
from .graphs import MobilityGraph
from .markov import TransitionMatrix

TRACE_HORIZON_LIMIT = 100_000
_WALK_BUFFER = 1 << 16
# guard rails for the exhaustive periodic-trajectory search
BRUTE_FORCE_MAX_TERMINALS = 8
BRUTE_FORCE_MAX_PERIOD = 16


@dataclass(frozen=True)
class AgeStats:
    per_terminal_peak: np.ndarray   # mean age at visit slots (NaN if never visited)
    per_terminal_avg: np.ndarray    # time-averaged age over the window
    n_peaks: np.ndarray             # visits inside the window
    network_peak: float
    network_avg: float
    horizon: int
    burn_in: int

    @property
    def n(self) -> int:
        return len(self.per_terminal_avg)

    def visit_fraction(self) -> np.ndarray:
        return self.n_peaks / (self.horizon - self.burn_in)

    def to_json(self) -> dict:
        return {
            "per_terminal_peak": [float(x) for x in self.per_terminal_peak],
            "per_terminal_avg": [float(x) for x in self.per_terminal_avg],
            "n_peaks": [int(x) for x in self.n_peaks],
            "network_peak": self.network_peak,
            "network_avg": self.network_avg,
            "horizon": self.horizon,
            "burn_in": self.burn_in,
        }


@dataclass(frozen=True)
class AgeTrace:
    horizon: int
    ages: np.ndarray       # ages[t-1, i] = A_i(t)
    visit_log: np.ndarray  # visit_log[t-1] = agent location at slot t
    peaks: list            # per-terminal list of ages recorded at visit slots


class _Recorder:
    """Accumulates window-clipped age sums and visit peaks per terminal."""

    def __init__(self, n: int, horizon: int, burn_in: int, trace: bool):
        self.n = n
        self.horizon = horizon
        self.burn_in = burn_in
        self.last_visit = [0] * n          # slot of most recent visit (0 = never)
        self.age_sum = [0] * n
        self.peak_sum = [0] * n
        self.peak_count = [0] * n
        self.trace = trace
        self.visit_log = [] if trace else None
        self.visit_slots = [[] for _ in range(n)] if trace else None

    def visit(self, i: int, t: int) -> None:
        last = self.last_visit[i]
        self._close_interval(i, last, t)
        if t > self.burn_in:
            self.peak_sum[i] += t - last
            self.peak_count[i] += 1
        self.last_visit[i] = t
        if self.trace:
            self.visit_slots[i].append(t)

    def _close_interval(self, i: int, a: int, b: int) -> None:
        # ages on (a, b] form the ramp t - a; clip to the window (burn_in, horizon]
        lo = a if a > self.burn_in else self.burn_in
        if b > lo:
            count = b - lo
            first = lo + 1 - a
            last = b - a
            self.age_sum[i] += count * (first + last) // 2

    def finish(self, weights: np.ndarray) -> AgeStats:
        for i in range(self.n):
            self._close_interval(i, self.last_visit[i], self.horizon)
        window = self.horizon - self.burn_in
        avg = np.array(self.age_sum, dtype=float) / window
        counts = np.array(self.peak_count, dtype=int)
        with np.errstate(invalid="ignore", divide="ignore"):
            peaks = np.array(self.peak_sum, dtype=float) / counts
        peaks[counts == 0] = np.nan
        return AgeStats(
            per_terminal_peak=peaks,
            per_terminal_avg=avg,
            n_peaks=counts,
            network_peak=float(np.sum(weights * peaks)),
            network_avg=float(np.sum(weights * avg)),
            horizon=self.horizon,
            burn_in=self.burn_in,
        )

    def build_trace(self) -> AgeTrace:
        horizon = self.horizon
        ages = np.empty((horizon, self.n), dtype=np.int64)
        peaks = [[] for _ in range(self.n)]
        for i in range(self.n):
            prev = 0
            for v in self.visit_slots[i] + [horizon + 1]:
                hi = min(v, horizon)
                if hi > prev:
                    ages[prev:hi, i] = np.arange(prev + 1, hi + 1) - prev
                if v <= horizon:
                    peaks[i].append(v - prev)
                prev = v
        return AgeTrace(
            horizon=horizon,
            ages=ages,
            visit_log=np.array(self.visit_log, dtype=int),
            peaks=peaks,
        )


def _default_burn_in(horizon: int) -> int:
    return horizon // 50


def _check_window(horizon: int, burn_in: int | None) -> int:
    if burn_in is None:
        burn_in = _default_burn_in(horizon)
    if not 0 <= burn_in < horizon:
        raise ValueError("need horizon > burn_in >= 0")
    return burn_in


def _row_samplers(p: np.ndarray) -> list:
    samplers = []
    for row in p:
        nz = np.nonzero(row)[0]
        samplers.append((np.cumsum(row[nz]).tolist(), nz.tolist()))
    return samplers


def simulate_randomized(g: MobilityGraph, P: TransitionMatrix, horizon: int,
                        burn_in: int | None = None, seed: int = 0, start: int = 0,
                        record_trace: bool = False):
    """Walk the chain P for `horizon` slots and collect age statistics.

    Statistics cover slots in (burn_in, horizon]; all ages start at 1
    with the agent at `start`.  Returns AgeStats, or (AgeStats, AgeTrace)
    when record_trace is set (horizon capped at TRACE_HORIZON_LIMIT).
    """
    if P.n != g.n:
        raise ValueError("matrix dimension does not match the graph")
    if P.support_violations(g):
        raise ValueError("matrix places probability on non-edges of the graph")
    burn_in = _check_window(horizon, burn_in)
    if record_trace and horizon > TRACE_HORIZON_LIMIT:
        raise ValueError(f"traces are limited to horizons <= {TRACE_HORIZON_LIMIT}")
    if not 0 <= start < g.n:
        raise ValueError("start terminal out of range")

    samplers = _row_samplers(P.p)
    rng = np.random.default_rng(seed)
    rec = _Recorder(g.n, horizon, burn_in, record_trace)
    cur = start
    buf = rng.random(_WALK_BUFFER).tolist()
    k = 0
    for t in range(1, horizon + 1):
        rec.visit(cur, t)
        if record_trace:
            rec.visit_log.append(cur)
        if k == _WALK_BUFFER:
            buf = rng.random(_WALK_BUFFER).tolist()
            k = 0
        u = buf[k]
        k += 1
        cum, idx = samplers[cur]
        pos = bisect_right(cum, u)
        cur = idx[pos] if pos < len(idx) else idx[-1]

    stats = rec.finish(g.weights)
    if record_trace:
        return stats, rec.build_trace()
    return stats


def simulate_age_based(g: MobilityGraph, g_fn="quadratic_plus_linear", horizon: int = 50_000,
                       burn_in: int | None = None, seed: int = 0, start: int = 0,
                       weights=None, record_trace: bool = False):
    """Greedy walker: move to the neighbour j maximizing w_j * g(A_j(t)).

    Ties break to the lowest index, so the walk is deterministic (seed is
    accepted for interface uniformity but never used).  g_fn is
    "quadratic_plus_linear" (a^2 + a, the default), "identity", or any
    increasing callable.
    """
    del seed  # deterministic policy
    burn_in = _check_window(horizon, burn_in)
    if record_trace and horizon > TRACE_HORIZON_LIMIT:
        raise ValueError(f"traces are limited to horizons <= {TRACE_HORIZON_LIMIT}")
    if not 0 <= start < g.n:
        raise ValueError("start terminal out of range")
    nbrs = g.neighbors
    if any(not lst for lst in nbrs):
        raise ValueError("age-based walker needs positive out-degree everywhere")
    w = (g.weights if weights is None else np.asarray(weights, dtype=float)).tolist()

    if callable(g_fn):
        fn = g_fn
        mode = "callable"
    elif g_fn == "quadratic_plus_linear":
        mode = "quadratic"
    elif g_fn == "identity":
        mode = "identity"
    else:
        raise ValueError(f"unknown age function: {g_fn!r}")

    rec = _Recorder(g.n, horizon, burn_in, record_trace)
    last = rec.last_visit
    cur = start
    for t in range(1, horizon + 1):
        rec.visit(cur, t)
        if record_trace:
            rec.visit_log.append(cur)
        best_val = -1.0
        best_j = -1
        if mode == "quadratic":
            for j in nbrs[cur]:
                a = t - last[j]
                val = w[j] * (a * a + a)
                if val > best_val:
                    best_val = val
                    best_j = j
        elif mode == "identity":
            for j in nbrs[cur]:
                val = w[j] * (t - last[j])
                if val > best_val:
                    best_val = val
                    best_j = j
        else:
            for j in nbrs[cur]:
                val = w[j] * fn(t - last[j])
                if val > best_val:
                    best_val = val
                    best_j = j
        cur = best_j

    stats = rec.finish(g.weights)
    if record_trace:
        return stats, rec.build_trace()
    return stats


def _check_sequence(g: MobilityGraph, sequence) -> list:
    seq = [int(s) for s in sequence]
    if not seq:
        raise ValueError("sequence must not be empty")
    for s in seq:
        if not 0 <= s < g.n:
            raise ValueError(f"sequence terminal {s} out of range")
    missing = set(range(g.n)) - set(seq)
    if missing:
        raise ValueError(f"terminal never visited (infinite age): {sorted(missing)}")
    length = len(seq)
    for k in range(length):
        a, b = seq[k], seq[(k + 1) % length]
        if not g.has_edge(a, b):
            raise ValueError(f"sequence uses a non-edge: ({a}, {b})")
    return seq


@dataclass(frozen=True)
class PeriodicAges:
    """Exact long-run ages of a periodic trajectory (no simulation noise)."""

    per_terminal_peak: np.ndarray
    per_terminal_avg: np.ndarray
    network_peak: float
    network_avg: float


def periodic_exact_ages(sequence, weights) -> PeriodicAges:
    """Closed-form ages of the infinite repetition of `sequence`.

    For terminal i with inter-visit gaps h_1..h_k inside one period of
    length L: average age = sum (h^2 + h) / (2L), peak age = L / k.
    """
    w = np.asarray(weights, dtype=float)
    n = len(w)
    seq = [int(s) for s in sequence]
    length = len(seq)
    positions = [[] for _ in range(n)]
    for idx, s in enumerate(seq):
        positions[s].append(idx)
    if any(not pos for pos in positions):
        missing = [i for i, pos in enumerate(positions) if not pos]
        raise ValueError(f"terminal never visited (infinite age): {missing}")
    peak = np.empty(n)
    avg = np.empty(n)
    for i, pos in enumerate(positions):
        gaps = [pos[k + 1] - pos[k] for k in range(len(pos) - 1)]
        gaps.append(length - pos[-1] + pos[0])
        peak[i] = length / len(pos)
        avg[i] = sum(h * h + h for h in gaps) / (2 * length)
    return PeriodicAges(
        per_terminal_peak=peak,
        per_terminal_avg=avg,
        network_peak=float(np.sum(w * peak)),
        network_avg=float(np.sum(w * avg)),
    )


def simulate_periodic(g: MobilityGraph, sequence, horizon: int,
                      burn_in: int | None = None, record_trace: bool = False):
    """Deterministic replay of a periodic visit sequence.

    The horizon must be a multiple of the period.  The default burn-in of
    one full period discards the start-up transient, after which the
    empirical statistics equal `periodic_exact_ages` exactly.
    """
    seq = _check_sequence(g, sequence)
    length = len(seq)
    if horizon % length != 0:
        raise ValueError("horizon must be a multiple of the period")
    if burn_in is None:
        burn_in = length
    if horizon <= burn_in:
        raise ValueError("need horizon > burn_in")
    if record_trace and horizon > TRACE_HORIZON_LIMIT:
        raise ValueError(f"traces are limited to horizons <= {TRACE_HORIZON_LIMIT}")
    rec = _Recorder(g.n, horizon, burn_in, record_trace)
    for t in range(1, horizon + 1):
        cur = seq[(t - 1) % length]
        rec.visit(cur, t)
        if record_trace:
            rec.visit_log.append(cur)
    stats = rec.finish(g.weights)
    if record_trace:
        return stats, rec.build_trace()
    return stats


def brute_force_optimal_periodic(g: MobilityGraph, max_period: int, weights=None):
    """Exhaustive search for the best periodic trajectory of bounded period.

    Enumerates closed walks from terminal 0 of length <= max_period that
    cover every terminal, scoring each with `periodic_exact_ages`
    (average age first, peak as tie-break).  Guard-railed to small
    instances; worst-case cost is exponential in max_period.  Returns
    (sequence, network_avg, network_peak) for the best walk found; the
    result is optimal among periodic trajectories of period <= max_period
    (nothing is claimed about longer periods).
    """
    if g.n > BRUTE_FORCE_MAX_TERMINALS:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_MAX_TERMINALS}")
    if not 1 <= max_period <= BRUTE_FORCE_MAX_PERIOD:
        raise ValueError(f"brute force limited to max_period <= {BRUTE_FORCE_MAX_PERIOD}")
    w = g.weights if weights is None else np.asarray(weights, dtype=float)
    n = g.n
    nbrs = g.neighbors
    dist = _bfs_distances(n, nbrs)
    lower_bound = average_age_lower_bound(w)
    full_mask = (1 << n) - 1

    best: list = [None, np.inf, np.inf]  # sequence, avg, peak

    def consider(path):
        ages = periodic_exact_ages(path, w)
        if (ages.network_avg < best[1] - 1e-15
                or (abs(ages.network_avg - best[1]) <= 1e-15 and ages.network_peak < best[2])):
            best[0] = list(path)
            best[1] = ages.network_avg
            best[2] = ages.network_peak

    path = [0]
    covered = 1

    def extend():
        nonlocal covered
        cur = path[-1]
        length = len(path)
        if covered == full_mask and g.has_edge(cur, 0):
            consider(path)
            if best[1] <= lower_bound + 1e-12:
                return True  # provably optimal; stop the whole search
        if length == max_period:
            return False
        remaining = max_period - length
        # the closing move back to terminal 0 is a wrap edge, not a step,
        # so the walk only has to END at a neighbour of 0
        if dist[cur][0] - 1 > remaining:
            return False
        uncovered = [u for u in range(n) if not covered >> u & 1]
        if len(uncovered) > remaining:
            return False
        for u in uncovered:
            if dist[cur][u] + dist[u][0] - 1 > remaining:
                return False
        for j in nbrs[cur]:
            path.append(j)
            added = not covered >> j & 1
            covered |= 1 << j
            done = extend()
            path.pop()
            if added:
                covered &= ~(1 << j)
            if done:
                return True
        return False

    extend()
    if best[0] is None:
        raise ValueError(f"no covering closed walk of period <= {max_period} exists")
    return best[0], best[1], best[2]


def _bfs_distances(n: int, nbrs) -> list:
    out = []
    for src in range(n):
        d = [-1] * n
        d[src] = 0
        queue = [src]
        for u in queue:
            for v in nbrs[u]:
                if d[v] < 0:
                    d[v] = d[u] + 1
                    queue.append(v)
        out.append([x if x >= 0 else 10 ** 9 for x in d])
    return out
