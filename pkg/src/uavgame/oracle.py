"""Brute-force ground truth for small games.

Everything here enumerates the full profile space for a fixed channel
assignment, so it is only usable when (np * nh) ** M is modest. Utilities
are evaluated with vectorised numpy independently of the compiled learning
kernels, which lets the tests cross-check one against the other.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels as K
from .game import (ChannelState, GameConfig, StrategyProfile, init_deployment, neighbor_set,
                   paper_potential_discrepancy, potential, raw_coverage_levels,
                   turbulence_coverage_levels, utility)
from .learning import (LearnerParams, altering_probability, check_m_bound, profile_index,
                       run_learning)

MAXIMIZER_TOL = 1e-9
MAX_AUGMENTED_STATES = 4096
_REL_FLOOR = 1.0
_MOVES = [(dp, dh) for dp in (-1, 0, 1) for dh in (-1, 0, 1) if dp or dh]


class EnumerationBudgetError(ValueError):
    """The profile space is larger than the enumeration budget."""


@dataclass(frozen=True)
class EnumerationBudget:
    max_profiles: int = 10 ** 6

    def __post_init__(self):
        if self.max_profiles < 1:
            raise ValueError("max_profiles must be positive")

    def check(self, config: GameConfig) -> int:
        n = (config.n_power * config.n_altitude) ** config.uav_count
        if n > self.max_profiles:
            raise EnumerationBudgetError(
                f"{n} profiles exceed the enumeration budget of {self.max_profiles}")
        return n


def _deployment(config, deployment):
    return deployment if deployment is not None else init_deployment(config, 0)


def enumerate_profiles(config: GameConfig, channels, budget: EnumerationBudget = EnumerationBudget()
                       ) -> Iterator[StrategyProfile]:
    """Every profile with the given channel assignment, in lexicographic (UAV, power, altitude) order."""
    budget.check(config)
    grid = list(itertools.product(range(config.n_power), range(config.n_altitude)))
    for combo in itertools.product(grid, repeat=config.uav_count):
        power, altitude = zip(*combo)
        yield StrategyProfile(channels, power, altitude)


class ProfileTable:
    """Utilities and potentials of every profile of a fixed deployment.

    Row k corresponds to the k-th profile of :func:`enumerate_profiles`.
    """

    def __init__(self, config: GameConfig, deployment=None,
                 budget: EnumerationBudget = EnumerationBudget()):
        self.config = config
        self.n_profiles = budget.check(config)
        profile, channel_state = _deployment(config, deployment)
        self.channels = profile.channels
        self.channel_state = channel_state
        M = config.uav_count
        self.grid = config.n_power * config.n_altitude
        codes = np.arange(self.n_profiles)
        digits = np.empty((self.n_profiles, M), dtype=np.int64)
        rest = codes.copy()
        for i in range(M - 1, -1, -1):
            digits[:, i] = rest % self.grid
            rest //= self.grid
        self.power = digits // config.n_altitude
        self.altitude = digits % config.n_altitude
        self.place = self.grid ** np.arange(M - 1, -1, -1)
        self.U, self.phi_exact, self.phi_paper = self._evaluate()

    def _evaluate(self):
        c = self.config
        ch = self.channels.astype(float)
        nc = c.channels_per_uav
        p = np.asarray(c.power_levels)[self.power]
        tot = p @ ch
        noisy = tot + self.channel_state.as_array()[None, :]
        sig = noisy @ ch.T - nc * p
        raw = raw_coverage_levels(c)[self.altitude]
        turb = turbulence_coverage_levels(c)[self.altitude]
        true = raw - c.overlap_index * (raw.sum(axis=1, keepdims=True) - raw)
        energy = c.battery / (nc * p)
        U = (c.balance_a * energy
             + c.balance_b * (c.snr_index * (nc * p - c.snr_balance * sig) - c.coverage_tradeoff * true)
             + c.balance_c * turb / c.area)
        own = (c.balance_a * energy + c.balance_b * c.snr_index * nc * p
               - c.balance_b * c.coverage_tradeoff * raw + c.balance_c * turb / c.area)
        paper = (c.balance_a * energy + c.balance_b * (nc * p - c.coverage_tradeoff * true)
                 + c.balance_c * turb / c.area)
        return U, own.sum(axis=1), paper.sum(axis=1)

    def profile(self, k: int) -> StrategyProfile:
        return StrategyProfile(self.channels, self.power[k], self.altitude[k])

    def index(self, profile: StrategyProfile) -> int:
        return profile_index(self.config, profile.power, profile.altitude)

    def moves(self):
        """Yield (uav, source rows, target rows) for every constrained one-step deviation."""
        c = self.config
        for i in range(c.uav_count):
            for dp, dh in _MOVES:
                ok = ((self.power[:, i] + dp >= 0) & (self.power[:, i] + dp < c.n_power)
                      & (self.altitude[:, i] + dh >= 0) & (self.altitude[:, i] + dh < c.n_altitude))
                src = np.flatnonzero(ok)
                if src.size:
                    yield i, src, src + (dp * c.n_altitude + dh) * self.place[i]

    def best_response_values(self, i: int) -> np.ndarray:
        """For each profile, the best U_i over all of UAV i's own levels."""
        shaped = self.U[:, i].reshape(self.grid ** i, self.grid, -1)
        best = shaped.max(axis=1, keepdims=True)
        return np.broadcast_to(best, shaped.shape).reshape(-1)


class PSNEResult(NamedTuple):
    psne: frozenset
    local_psne: frozenset


def _improvement_tol(table):
    return 1e-12 * max(1.0, float(np.abs(table.U).max()))


def brute_force_psne(config: GameConfig, deployment=None,
                     budget: EnumerationBudget = EnumerationBudget(), table=None) -> PSNEResult:
    """Profiles where no UAV strictly gains by deviating.

    ``psne`` allows deviations over the whole power x altitude grid;
    ``local_psne`` only over one-step constrained moves.
    """
    table = table or ProfileTable(config, deployment, budget)
    tol = _improvement_tol(table)
    full = np.ones(table.n_profiles, dtype=bool)
    for i in range(config.uav_count):
        full &= table.U[:, i] >= table.best_response_values(i) - tol
    local = np.ones(table.n_profiles, dtype=bool)
    for i, src, dst in table.moves():
        local[src[table.U[dst, i] > table.U[src, i] + tol]] = False
    return PSNEResult(frozenset(table.profile(k) for k in np.flatnonzero(full)),
                      frozenset(table.profile(k) for k in np.flatnonzero(local)))


def phi_maximizers(config: GameConfig, deployment=None,
                   budget: EnumerationBudget = EnumerationBudget(), table=None) -> frozenset:
    """Profiles attaining the maximum exact potential (ties within 1e-9 kept)."""
    table = table or ProfileTable(config, deployment, budget)
    return frozenset(table.profile(k) for k in maximizer_indices(table))


def maximizer_indices(table: ProfileTable) -> np.ndarray:
    return np.flatnonzero(table.phi_exact >= table.phi_exact.max() - MAXIMIZER_TOL)


def max_unilateral_delta(config: GameConfig, deployment=None,
                         budget: EnumerationBudget = EnumerationBudget(), table=None) -> float:
    """Largest |U_i(s') - U_i(s)| over all profiles and constrained one-step deviations."""
    table = table or ProfileTable(config, deployment, budget)
    best = 0.0
    for i, src, dst in table.moves():
        best = max(best, float(np.abs(table.U[dst, i] - table.U[src, i]).max()))
    return best


@dataclass
class PotentialCheck:
    exact_max: float
    paper_max: float
    formula_max_rel: float
    moves: int
    exhaustive: bool


def _rel(a, b, floor=0.0):
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.abs(a - b) / scale
    return np.where(scale > 0, r, 0.0)


def exact_potential_check(config: GameConfig, trials: int, seed: int = 0, deployment=None,
                          budget: EnumerationBudget = EnumerationBudget()) -> PotentialCheck:
    """Compare utility changes with potential changes over unilateral constrained moves.

    Moves are exhausted when the game is enumerable and ``trials`` covers the
    move count; otherwise ``trials`` random moves are drawn. ``exact_max`` and
    ``paper_max`` are absolute discrepancies; ``formula_max_rel`` is the
    largest gap between the paper-variant discrepancy and its closed
    form, relative to max(1, |value|).
    """
    dep = _deployment(config, deployment)
    n_profiles = (config.n_power * config.n_altitude) ** config.uav_count
    if n_profiles <= budget.max_profiles:
        table = ProfileTable(config, dep, budget)
        pairs = list(table.moves())
        n_moves = sum(src.size for _, src, _ in pairs)
        if trials >= n_moves:
            return _exhaustive_check(config, table, pairs, n_moves)
    return _sampled_check(config, dep, trials, seed)


def _exhaustive_check(config, table, pairs, n_moves):
    exact = paper = rel = 0.0
    p = np.asarray(config.power_levels)
    raw = raw_coverage_levels(config)
    c = config
    for i, src, dst in pairs:
        du = table.U[dst, i] - table.U[src, i]
        d_exact = table.phi_exact[dst] - table.phi_exact[src]
        d_paper = table.phi_paper[dst] - table.phi_paper[src]
        formula = (c.balance_b * (1 - c.snr_index) * c.channels_per_uav
                   * (p[table.power[dst, i]] - p[table.power[src, i]])
                   + c.balance_b * c.coverage_tradeoff * c.overlap_index * (c.uav_count - 1)
                   * (raw[table.altitude[dst, i]] - raw[table.altitude[src, i]]))
        if du.size:
            exact = max(exact, float(np.abs(du - d_exact).max()))
            paper = max(paper, float(np.abs(du - d_paper).max()))
            rel = max(rel, float(_rel(d_paper - du, formula, _REL_FLOOR).max()))
    return PotentialCheck(exact, paper, rel, n_moves, True)


def _sampled_check(config, deployment, trials, seed):
    profile0, channel_state = deployment
    rng = np.random.default_rng(seed)
    M = config.uav_count
    exact = paper = rel = 0.0
    n = 0
    for _ in range(trials):
        power = rng.integers(0, config.n_power, size=M)
        altitude = rng.integers(0, config.n_altitude, size=M)
        before = profile0.with_levels(power, altitude)
        i = int(rng.integers(M))
        options = neighbor_set(config, before[i])
        if not options:
            continue
        after = before.with_strategy(i, options[int(rng.integers(len(options)))])
        du = utility(config, after, channel_state, i).total - utility(config, before, channel_state, i).total
        d_exact = potential(config, after, channel_state) - potential(config, before, channel_state)
        d_paper = (potential(config, after, channel_state, "paper")
                   - potential(config, before, channel_state, "paper"))
        formula = paper_potential_discrepancy(config, before, after, i)
        exact = max(exact, abs(du - d_exact))
        paper = max(paper, abs(du - d_paper))
        rel = max(rel, float(_rel(d_paper - du, formula, _REL_FLOOR)))
        n += 1
    return PotentialCheck(exact, paper, rel, n, False)


# ---- stochastic stability -------------------------------------------------

@dataclass
class OccupancyResult:
    counts: np.ndarray
    maximizers: np.ndarray
    samples: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def settled_fraction(self) -> float:
        return self.total / self.samples if self.samples else 0.0

    @property
    def maximizer_mass(self) -> float:
        if self.total == 0:
            return 0.0
        return float(self.counts[self.maximizers].sum() / self.total)

    @property
    def distribution(self) -> np.ndarray:
        return self.counts / max(self.total, 1)


def empirical_occupancy(config: GameConfig, algorithm: str, params: LearnerParams,
                        burn_in: int, samples: int, deployment=None, settled_only: bool = True,
                        budget: EnumerationBudget = EnumerationBudget()) -> OccupancyResult:
    """Histogram the profiles a learning run visits after ``burn_in`` iterations.

    With ``settled_only`` an iteration is counted only when no UAV is in the
    middle of an exploration (every flag clear).
    """
    dep = deployment or init_deployment(config, params.seed)
    table = ProfileTable(config, dep, budget)
    run_params = LearnerParams(params.tau, params.m, burn_in + samples, params.seed,
                               params.allow_unstable_m)
    record = run_learning(algorithm, config, run_params, deployment=dep,
                          record_stride=max(1, burn_in + samples),
                          occupancy_from=burn_in, settled_only=settled_only)
    return OccupancyResult(record.occupancy, maximizer_indices(table), samples)


def transition_ratio(config: GameConfig, algorithm: str, params: LearnerParams,
                     source: StrategyProfile, target: StrategyProfile, burn_in: int = 0,
                     deployment=None) -> float:
    """Empirical P(source -> target) / P(target -> source) between successive settled profiles."""
    dep = deployment or init_deployment(config, params.seed)
    record = run_learning(algorithm, config, params, deployment=dep,
                          record_stride=max(1, params.max_iterations), keep_trace=True)
    trace = record.trace[burn_in:]
    settled = trace[trace >= 0]
    a = profile_index(config, source.power, source.altitude)
    b = profile_index(config, target.power, target.altitude)
    frm, to = settled[:-1], settled[1:]
    visits_a = np.count_nonzero(frm == a)
    visits_b = np.count_nonzero(frm == b)
    ab = np.count_nonzero((frm == a) & (to == b))
    ba = np.count_nonzero((frm == b) & (to == a))
    if not (visits_a and visits_b and ab and ba):
        raise RuntimeError("run too short to observe transitions in both directions")
    return (ab / visits_a) / (ba / visits_b)


def gth_stationary(P: np.ndarray) -> np.ndarray:
    """Stationary distribution of an irreducible row-stochastic matrix by GTH elimination.

    Uses only additions, multiplications and divisions of non-negative
    numbers, so transition probabilities many orders of magnitude apart are
    handled without cancellation.
    """
    A = np.array(P, dtype=float)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0:
            raise ValueError("chain is reducible")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()


class StationaryResult(NamedTuple):
    states: list
    distribution: np.ndarray
    maximizer_mass: float
    settled_maximizer_mass: float


def exact_stationary(config: GameConfig, algorithm: str, params: LearnerParams,
                     deployment=None, budget: EnumerationBudget = EnumerationBudget(),
                     max_states: int = MAX_AUGMENTED_STATES) -> StationaryResult:
    """Exact stationary law of the chain on augmented states (previous profile, current profile, flags).

    Builds every state reachable from the deployment's initial profile,
    keeps the closed communicating class, and solves it with GTH.
    ``maximizer_mass`` is the mass on states whose current profile maximises
    the potential; ``settled_maximizer_mass`` is the same share among states
    with no flag set, which is what :func:`empirical_occupancy` estimates.
    """
    if algorithm == "spblla":
        check_m_bound(config, params)
    dep = deployment or init_deployment(config, params.seed)
    table = ProfileTable(config, dep, budget)
    start_code = table.index(dep[0])
    M = config.uav_count
    start = (start_code, start_code, (0,) * M)
    index = {start: 0}
    states = [start]
    rows, cols, vals = [], [], []
    queue = deque([start])
    while queue:
        z = queue.popleft()
        for z2, prob in _transitions(table, algorithm, params, z):
            if prob <= 0:
                continue
            if z2 not in index:
                if len(states) >= max_states:
                    raise EnumerationBudgetError(
                        f"more than {max_states} augmented states are reachable")
                index[z2] = len(states)
                states.append(z2)
                queue.append(z2)
            rows.append(index[z])
            cols.append(index[z2])
            vals.append(prob)
    n = len(states)
    P = np.zeros((n, n))
    np.add.at(P, (rows, cols), vals)
    _, labels = connected_components(csr_matrix(P > 0), directed=True, connection="strong")
    closed = [lab for lab in np.unique(labels)
              if not np.any(P[np.ix_(labels == lab, labels != lab)] > 0)]
    keep = np.flatnonzero(labels == closed[0])
    # eliminate the stickiest states last so tiny exit probabilities never divide
    keep = keep[np.argsort(-P[keep, keep], kind="stable")]
    pi = np.zeros(n)
    pi[keep] = gth_stationary(P[np.ix_(keep, keep)])
    best = set(maximizer_indices(table).tolist())
    on_max = np.array([z[1] in best for z in states])
    settled = np.array([not any(z[2]) for z in states])
    return StationaryResult(states, pi, float(pi[on_max].sum()),
                            float(pi[on_max & settled].sum() / pi[settled].sum()))


def _digits(table, code):
    out = []
    for i in range(table.config.uav_count):
        out.append((code // table.place[i]) % table.grid)
    return out


def _code(table, digits):
    return int(sum(int(d) * int(pl) for d, pl in zip(digits, table.place)))


def _neighbors(config, digit):
    nh = config.n_altitude
    p, h = divmod(int(digit), nh)
    return [(p + dp) * nh + (h + dh) for dp, dh in _MOVES
            if 0 <= p + dp < config.n_power and 0 <= h + dh < nh]


def _keep_revert(u_prev, u_curr, tau):
    return K.keep_probability(u_prev, u_curr, tau), K.keep_probability(u_curr, u_prev, tau)


def _transitions(table, algorithm, params, z):
    """Yield ((prev, cur, flags), probability) for every successor of augmented state z."""
    config = table.config
    prev_code, cur_code, flags = z
    prev = _digits(table, prev_code)
    cur = _digits(table, cur_code)
    M = config.uav_count
    tau = params.tau
    if algorithm == "pblla":
        if any(flags):
            i = flags.index(1)
            keep, revert = _keep_revert(table.U[prev_code, i], table.U[cur_code, i], tau)
            yield (cur_code, cur_code, (0,) * M), keep
            back = list(cur)
            back[i] = prev[i]
            yield (cur_code, _code(table, back), (0,) * M), revert
            return
        for i in range(M):
            options = _neighbors(config, cur[i])
            if not options:
                yield (cur_code, cur_code, (0,) * M), 1.0 / M
                continue
            for d in options:
                new = list(cur)
                new[i] = d
                f = [0] * M
                f[i] = 1
                yield (cur_code, _code(table, new), tuple(f)), 1.0 / (M * len(options))
        return
    if algorithm != "spblla":
        raise ValueError(f"unknown algorithm {algorithm!r}")
    omega = altering_probability(tau, params.m)
    per_uav = []
    for i in range(M):
        if flags[i]:
            keep, revert = _keep_revert(table.U[prev_code, i], table.U[cur_code, i], tau)
            per_uav.append([(cur[i], 0, keep), (prev[i], 0, revert)])
        else:
            options = _neighbors(config, cur[i])
            if options:
                per_uav.append([(cur[i], 0, 1.0 - omega)]
                               + [(d, 1, omega / len(options)) for d in options])
            else:
                per_uav.append([(cur[i], 0, 1.0)])
    for combo in itertools.product(*per_uav):
        prob = math.prod(c[2] for c in combo)
        if prob > 0:
            yield (cur_code, _code(table, [c[0] for c in combo]), tuple(c[1] for c in combo)), prob
