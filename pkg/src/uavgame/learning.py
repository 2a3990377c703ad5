"""Payoff-based binary log-linear learning, asynchronous (PBLLA) and synchronous (SPBLLA).

Both algorithms run as seeded state machines over a fixed deployment. The
per-step work happens in :mod:`uavgame._kernels`; this module owns the
parameter contracts, the state objects and the run driver.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .game import (ChannelState, GameConfig, StrategyProfile, init_deployment,
                   raw_coverage_levels, turbulence_coverage_levels, validate_config)
from .metrics import TrajectoryPoint

ALGORITHMS = ("pblla", "spblla")
_CHUNK_UNIFORMS = 1 << 20


class ParameterBoundError(ValueError):
    """The SPBLLA probability index violates m > 2*Delta without an override."""


@dataclass(frozen=True)
class LearnerParams:
    tau: float
    m: Optional[float] = None
    max_iterations: int = 1000
    seed: int = 0
    allow_unstable_m: bool = False

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive and finite (got {self.tau!r})")
        if self.m is not None and not self.m >= 0:
            raise ValueError(f"m must be non-negative (got {self.m!r})")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 0:
            raise ValueError(f"max_iterations must be a non-negative integer (got {self.max_iterations!r})")


@dataclass(frozen=True)
class TauSchedule:
    """Piecewise-constant temperature: ``tau`` applies from iteration ``start`` on."""

    segments: tuple

    def __post_init__(self):
        segs = tuple((int(s), float(t)) for s, t in self.segments)
        if not segs or segs[0][0] != 0:
            raise ValueError("schedule must start at iteration 0")
        if any(b[0] <= a[0] for a, b in zip(segs, segs[1:])):
            raise ValueError("schedule starts must be strictly increasing")
        if any(not t > 0 for _, t in segs):
            raise ValueError("schedule temperatures must be positive")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, tau: float) -> "TauSchedule":
        return cls(((0, tau),))

    def pieces(self, n_iterations: int):
        """Yield (first iteration, step count, tau) covering ``n_iterations`` steps."""
        for k, (start, tau) in enumerate(self.segments):
            if start >= n_iterations:
                break
            stop = self.segments[k + 1][0] if k + 1 < len(self.segments) else n_iterations
            yield start, min(stop, n_iterations) - start, tau


@dataclass(frozen=True)
class DeltaBound:
    terms: tuple
    total: float

    @property
    def min_m(self) -> float:
        return 2.0 * self.total

    names = ("energy", "snr_power", "snr_interference", "coverage_raw",
             "coverage_overlap", "coverage_turbulence")

    def breakdown(self) -> dict:
        return dict(zip(self.names, self.terms))


def boltzmann_keep_probability(u_prev: float, u_curr: float, tau: float) -> float:
    """Probability of keeping the current strategy over the previous one.

    Equal to exp(u_curr/tau) / (exp(u_prev/tau) + exp(u_curr/tau)), evaluated
    without overflow. The revert probability is the complement.
    """
    if not (math.isfinite(u_prev) and math.isfinite(u_curr)):
        raise ValueError("payoffs must be finite")
    if not tau > 0:
        raise ValueError("tau must be positive")
    return float(K.keep_probability(float(u_prev), float(u_curr), float(tau)))


def altering_probability(tau: float, m: float) -> float:
    """Per-UAV exploration probability of SPBLLA, exp(-m / tau)."""
    if not tau > 0 or m < 0:
        raise ValueError("need tau > 0 and m >= 0")
    return math.exp(-m / tau)


def delta_bound(config: GameConfig) -> DeltaBound:
    """Worst-case change of one UAV's utility in a single constrained move."""
    c = config
    dp, dh = c.power_gap, c.altitude_gap
    p1 = c.power_levels[0]
    nc = c.channels_per_uav
    shared = nc * (min(c.channel_capacity, c.uav_count) - 1)
    t2 = math.tan(c.field_angle) ** 2
    h_top = c.altitude_levels[-1]
    beta_top = c.turbulence[-1]
    raw_step = math.pi * t2 * (2 * h_top * dh - dh ** 2)
    terms = (
        c.balance_a * c.battery * dp / (nc * p1 * (p1 + dp)),
        c.balance_b * c.snr_index * nc * dp,
        c.balance_b * c.snr_index * c.snr_balance * dp * shared,
        c.balance_b * c.coverage_tradeoff * raw_step,
        c.balance_b * c.coverage_tradeoff * c.overlap_index * (c.uav_count - 1) * raw_step,
        (c.balance_c / c.area) * math.pi * t2
        * (h_top ** (2 * beta_top) - (h_top - dh) ** (2 * beta_top)),
    )
    return DeltaBound(terms, float(sum(terms)))


def check_m_bound(config: GameConfig, params: LearnerParams) -> None:
    if params.m is None:
        raise ParameterBoundError("spblla needs the probability index m")
    bound = delta_bound(config).min_m
    if params.m <= bound and not params.allow_unstable_m:
        raise ParameterBoundError(
            f"m={params.m!r} does not exceed 2*Delta={bound!r}; convergence to potential "
            f"maximisers is only guaranteed above this bound (set allow_unstable_m to override)")


class GameContext:
    """Deployment-specific lookup tables shared by every step of a run."""

    def __init__(self, config: GameConfig, channels: np.ndarray, channel_state: ChannelState):
        self.config = config
        self.channel_state = channel_state
        self.channels = np.asarray(channels, dtype=np.int8)
        self.chan = np.array([np.flatnonzero(row) for row in self.channels], dtype=np.int64)
        self.noise = channel_state.as_array()
        self.ptable = np.asarray(config.power_levels, dtype=float)
        self.dtable = raw_coverage_levels(config)
        self.dttable = turbulence_coverage_levels(config)
        c = config
        self.coef = np.array([c.balance_a, c.balance_b, c.balance_c, c.battery, c.area,
                              c.snr_index, c.snr_balance, c.coverage_tradeoff, c.overlap_index])

    @classmethod
    def from_deployment(cls, config, profile: StrategyProfile, channel_state) -> "GameContext":
        return cls(config, profile.channels, channel_state)

    def utilities(self, power, altitude) -> np.ndarray:
        out = np.empty(len(power))
        K.evaluate(np.asarray(power, dtype=np.int64), np.asarray(altitude, dtype=np.int64),
                   self.chan, self.noise, self.ptable, self.dtable, self.dttable, self.coef, out)
        return out


@dataclass
class LearnerState:
    iteration: int
    power: np.ndarray
    altitude: np.ndarray
    prev_power: np.ndarray
    prev_altitude: np.ndarray
    flags: np.ndarray
    u_prev: np.ndarray
    u_curr: np.ndarray
    channels: np.ndarray = field(repr=False)

    @classmethod
    def initial(cls, ctx: GameContext, profile: StrategyProfile) -> "LearnerState":
        power = profile.power.astype(np.int64)
        altitude = profile.altitude.astype(np.int64)
        u = ctx.utilities(power, altitude)
        return cls(0, power.copy(), altitude.copy(), power.copy(), altitude.copy(),
                   np.zeros(len(power), dtype=np.uint8), u.copy(), u.copy(), ctx.channels)

    def copy(self) -> "LearnerState":
        return LearnerState(self.iteration, self.power.copy(), self.altitude.copy(),
                            self.prev_power.copy(), self.prev_altitude.copy(), self.flags.copy(),
                            self.u_prev.copy(), self.u_curr.copy(), self.channels)

    @property
    def profile(self) -> StrategyProfile:
        return StrategyProfile(self.channels, self.power, self.altitude)

    @property
    def previous_profile(self) -> StrategyProfile:
        return StrategyProfile(self.channels, self.prev_power, self.prev_altitude)


_EMPTY_I64 = np.zeros(0, dtype=np.int64)
_NO_REC = np.zeros((0, K.N_REC))


def _uniforms_per_step(algo_code, n_uav):
    return 2 if algo_code == K.PBLLA else 2 * n_uav


def _algo_code(algorithm):
    try:
        return {"pblla": K.PBLLA, "spblla": K.SPBLLA}[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}") from None


def _step(algo, state, ctx, tau, omega, rng):
    new = state.copy()
    uniforms = rng.random(_uniforms_per_step(algo, len(new.power)))
    K.advance(algo, 1, new.iteration, tau, omega, uniforms,
              new.power, new.altitude, new.prev_power, new.prev_altitude, new.flags,
              new.u_prev, new.u_curr, ctx.chan, ctx.noise, ctx.ptable, ctx.dtable,
              ctx.dttable, ctx.coef, 0, _NO_REC, 0, _EMPTY_I64, 0, False, _EMPTY_I64)
    new.iteration += 1
    return new


def pblla_step(state: LearnerState, ctx: GameContext, params: LearnerParams,
               rng: np.random.Generator) -> LearnerState:
    """One asynchronous iteration: one UAV explores, or the exploring UAV settles."""
    return _step(K.PBLLA, state, ctx, params.tau, 0.0, rng)


def spblla_step(state: LearnerState, ctx: GameContext, params: LearnerParams,
                rng: np.random.Generator) -> LearnerState:
    """One synchronous iteration: every UAV independently explores or settles."""
    if params.m is None:
        raise ParameterBoundError("spblla needs the probability index m")
    return _step(K.SPBLLA, state, ctx, params.tau, altering_probability(params.tau, params.m), rng)


def dynamics_rng(seed: int) -> np.random.Generator:
    """RNG stream for the dynamics, independent of the deployment draw."""
    return np.random.default_rng([int(seed), 1])


@dataclass
class RunRecord:
    algorithm: str
    config: GameConfig
    params: LearnerParams
    schedule: TauSchedule
    record_stride: int
    records: np.ndarray
    initial_profile: StrategyProfile
    final_state: LearnerState
    channel_state: ChannelState
    rng_draws: int
    wall_clock: float
    occupancy: Optional[np.ndarray] = None
    trace: Optional[np.ndarray] = None
    spec: object = None

    columns = ("iteration", "global_utility", "potential", "avg_snr",
               "coverage_proportion", "active_flags")

    @property
    def final_profile(self) -> StrategyProfile:
        return self.final_state.profile

    @property
    def iterations(self) -> np.ndarray:
        return self.records[:, K.REC_ITER].astype(np.int64)

    @property
    def global_utility(self) -> np.ndarray:
        return self.records[:, K.REC_U]

    @property
    def potential(self) -> np.ndarray:
        return self.records[:, K.REC_PHI]

    @property
    def avg_snr(self) -> np.ndarray:
        return self.records[:, K.REC_SNR]

    @property
    def coverage_proportion(self) -> np.ndarray:
        return self.records[:, K.REC_COV]

    @property
    def active_flags(self) -> np.ndarray:
        return self.records[:, K.REC_FLAGS].astype(np.int64)

    @property
    def trajectory(self) -> list:
        return [TrajectoryPoint(int(r[0]), float(r[1]), float(r[2]), float(r[3]),
                                float(r[4]), int(r[5])) for r in self.records]


def run_learning(algorithm: str, config: GameConfig, params: LearnerParams,
                 schedule: Optional[TauSchedule] = None, *, record_stride: int = 1,
                 deployment: Optional[tuple] = None, occupancy_from: Optional[int] = None,
                 settled_only: bool = True, keep_trace: bool = False) -> RunRecord:
    """Drive PBLLA or SPBLLA for ``params.max_iterations`` iterations.

    The deployment defaults to ``init_deployment(config, params.seed)``. When
    ``occupancy_from`` is given, visited profiles after that iteration are
    histogrammed by their lexicographic index (tiny games only); with
    ``settled_only`` only iterations with no UAV mid-exploration count.
    """
    algo = _algo_code(algorithm)
    validate_config(config).raise_if_failed()
    if record_stride < 1:
        raise ValueError("record_stride must be positive")
    schedule = schedule or TauSchedule.constant(params.tau)
    if algo == K.SPBLLA:
        check_m_bound(config, params)
    profile, channel_state = deployment if deployment is not None \
        else init_deployment(config, params.seed)
    ctx = GameContext.from_deployment(config, profile, channel_state)
    state = LearnerState.initial(ctx, profile)
    rng = dynamics_rng(params.seed)
    n_iter = int(params.max_iterations)
    M = config.uav_count

    rec = np.zeros((1 + n_iter // record_stride, K.N_REC))
    K.record_initial(rec, 0, state.power, state.altitude, ctx.chan, ctx.noise, ctx.ptable,
                     ctx.dtable, ctx.dttable, ctx.coef, state.u_curr, state.flags)
    row = 1
    occ = _EMPTY_I64
    if occupancy_from is not None:
        n_profiles = (config.n_power * config.n_altitude) ** M
        occ = np.zeros(n_profiles, dtype=np.int64)
    trace = np.full(n_iter, -1, dtype=np.int64) if keep_trace else None

    per_step = _uniforms_per_step(algo, M)
    chunk = max(1, _CHUNK_UNIFORMS // per_step)
    draws = 0
    started = time.perf_counter()
    for start, count, tau in schedule.pieces(n_iter):
        omega = altering_probability(tau, params.m) if algo == K.SPBLLA else 0.0
        done = 0
        while done < count:
            n = min(chunk, count - done)
            uniforms = rng.random(n * per_step)
            draws += uniforms.size
            t0 = start + done
            tr = trace[t0:t0 + n] if trace is not None else _EMPTY_I64
            row = K.advance(algo, n, t0, tau, omega, uniforms,
                            state.power, state.altitude, state.prev_power, state.prev_altitude,
                            state.flags, state.u_prev, state.u_curr,
                            ctx.chan, ctx.noise, ctx.ptable, ctx.dtable, ctx.dttable, ctx.coef,
                            record_stride, rec, row, occ,
                            -1 if occupancy_from is None else occupancy_from,
                            settled_only, tr)
            done += n
    state.iteration = n_iter
    elapsed = time.perf_counter() - started
    return RunRecord(algorithm, config, params, schedule, record_stride, rec, profile, state,
                     channel_state, draws, elapsed,
                     occupancy=occ if occupancy_from is not None else None, trace=trace)


def profile_index(config: GameConfig, power: Sequence[int], altitude: Sequence[int]) -> int:
    """Lexicographic (UAV id, power index, altitude index) position of a profile."""
    nh = config.n_altitude
    base = config.n_power * nh
    code = 0
    for p, h in zip(power, altitude):
        code = code * base + int(p) * nh + int(h)
    return code
