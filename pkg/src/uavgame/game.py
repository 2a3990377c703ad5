"""Static game description: configuration, strategies, utilities and potentials.

A UAV's strategy is a fixed channel vector plus one power level (shared by all
of its selected channels) and one altitude level. Every quantity below is a
pure function of ``(config, profile, channel_state)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple, Sequence

import numpy as np

_GRID_RTOL = 1e-12
_MAX_PLACEMENT_RETRIES = 100


class ConfigError(ValueError):
    """Raised when a configuration fails validation."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("invalid game config: " + "; ".join(self.failures))


class PlacementError(RuntimeError):
    """Channel assignment could not be completed within the retry bound."""


@dataclass(frozen=True)
class GameConfig:
    uav_count: int
    channel_count: int
    channel_capacity: int
    channels_per_uav: int
    power_levels: tuple
    altitude_levels: tuple
    field_angle: float
    battery: float
    area: float
    balance_a: float
    balance_b: float
    balance_c: float
    snr_balance: float
    snr_index: float
    coverage_tradeoff: float
    overlap_index: float
    turbulence: tuple
    noise_range: tuple

    def __post_init__(self):
        for name in ("power_levels", "altitude_levels", "turbulence", "noise_range"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @property
    def power_gap(self) -> float:
        p = self.power_levels
        return p[1] - p[0] if len(p) > 1 else 0.0

    @property
    def altitude_gap(self) -> float:
        h = self.altitude_levels
        return h[1] - h[0] if len(h) > 1 else 0.0

    @property
    def n_power(self) -> int:
        return len(self.power_levels)

    @property
    def n_altitude(self) -> int:
        return len(self.altitude_levels)

    def replace(self, **changes) -> "GameConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class ValidationReport:
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.ok

    def raise_if_failed(self):
        if self.failures:
            raise ConfigError(self.failures)


def _uniform_grid_failure(name, levels):
    if len(levels) == 0:
        return f"{name} is empty"
    if any(v <= 0 for v in levels):
        return f"{name} must be positive: {list(levels)}"
    gaps = np.diff(np.asarray(levels, dtype=float))
    if np.any(gaps <= 0):
        return f"{name} must be strictly increasing: {list(levels)}"
    if len(gaps) and np.max(np.abs(gaps - gaps[0])) > _GRID_RTOL * max(abs(levels[-1]), 1.0) + 1e-15:
        return f"{name} must have a constant gap (got gaps {gaps.min()!r}..{gaps.max()!r})"
    return None


def validate_config(config: GameConfig) -> ValidationReport:
    """Check every configuration invariant and collect all violations."""
    c = config
    failures = []
    for name in ("uav_count", "channel_count", "channel_capacity", "channels_per_uav"):
        v = getattr(c, name)
        if int(v) != v or v < 1:
            failures.append(f"{name} must be a positive integer (got {v!r})")
    if c.channels_per_uav > c.channel_count:
        failures.append(
            f"channels_per_uav={c.channels_per_uav} exceeds channel_count={c.channel_count}")
    for name in ("power_levels", "altitude_levels"):
        msg = _uniform_grid_failure(name, getattr(c, name))
        if msg:
            failures.append(msg)
    if not 0 < c.field_angle < math.pi / 2:
        failures.append(f"field_angle must lie in (0, pi/2) radians (got {c.field_angle!r})")
    if c.area <= 0:
        failures.append(f"area must be positive (got {c.area!r})")
    slots = c.channel_capacity * c.channel_count
    if c.uav_count * c.channels_per_uav > slots:
        failures.append(
            f"infeasible channel assignment: uav_count*channels_per_uav="
            f"{c.uav_count * c.channels_per_uav} > channel_capacity*channel_count={slots}")
    if len(c.turbulence) != len(c.altitude_levels):
        failures.append(
            f"turbulence needs one value per altitude level "
            f"({len(c.turbulence)} != {len(c.altitude_levels)})")
    if any(not 0 < b <= 1 for b in c.turbulence):
        failures.append(f"turbulence values must lie in (0, 1]: {list(c.turbulence)}")
    if any(b2 > b1 for b1, b2 in zip(c.turbulence, c.turbulence[1:])):
        failures.append(f"turbulence must be non-increasing in altitude: {list(c.turbulence)}")
    if len(c.noise_range) != 2 or c.noise_range[0] > c.noise_range[1] or c.noise_range[0] < 0:
        failures.append(f"noise_range must be [lo, hi] with 0 <= lo <= hi: {list(c.noise_range)}")
    if c.overlap_index < 0:
        failures.append(f"overlap_index must be non-negative (got {c.overlap_index!r})")
    if c.altitude_levels and min(c.altitude_levels) > 0 and 0 < c.field_angle < math.pi / 2:
        t2 = math.tan(c.field_angle) ** 2
        worst_others = c.overlap_index * (c.uav_count - 1) * math.pi * max(c.altitude_levels) ** 2 * t2
        smallest_own = math.pi * min(c.altitude_levels) ** 2 * t2
        if not worst_others < smallest_own:
            failures.append(
                f"overlap_index too large for positive true coverage: "
                f"kappa*(M-1)*pi*(h_max tan)^2={worst_others!r} >= pi*(h_min tan)^2={smallest_own!r}")
    return ValidationReport(failures)


@dataclass(frozen=True)
class Strategy:
    channels: tuple
    power: int
    altitude: int

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(v) for v in self.channels))
        object.__setattr__(self, "power", int(self.power))
        object.__setattr__(self, "altitude", int(self.altitude))


class StrategyProfile:
    """Joint strategy of all UAVs, stored as index arrays.

    ``channels`` is an (M, N) 0/1 matrix, ``power`` and ``altitude`` are
    length-M level indices. Instances are immutable and hashable.
    """

    __slots__ = ("channels", "power", "altitude", "_key")

    def __init__(self, channels, power, altitude):
        ch = np.array(channels, dtype=np.int8)
        pw = np.array(power, dtype=np.int64).reshape(-1)
        al = np.array(altitude, dtype=np.int64).reshape(-1)
        if ch.ndim != 2 or ch.shape[0] != pw.size or pw.size != al.size:
            raise ValueError("channels must be (M, N) and power/altitude length M")
        for a in (ch, pw, al):
            a.flags.writeable = False
        self.channels = ch
        self.power = pw
        self.altitude = al
        self._key = (ch.tobytes(), ch.shape, tuple(pw.tolist()), tuple(al.tolist()))

    @classmethod
    def from_strategies(cls, strategies: Sequence[Strategy]) -> "StrategyProfile":
        return cls([s.channels for s in strategies],
                   [s.power for s in strategies],
                   [s.altitude for s in strategies])

    @property
    def strategies(self) -> list:
        return [self[i] for i in range(len(self))]

    def __len__(self):
        return self.power.size

    def __getitem__(self, i) -> Strategy:
        return Strategy(tuple(self.channels[i].tolist()), self.power[i], self.altitude[i])

    def with_strategy(self, i: int, s: Strategy) -> "StrategyProfile":
        ch = self.channels.copy()
        pw = self.power.copy()
        al = self.altitude.copy()
        ch[i] = s.channels
        pw[i] = s.power
        al[i] = s.altitude
        return StrategyProfile(ch, pw, al)

    def with_levels(self, power, altitude) -> "StrategyProfile":
        return StrategyProfile(self.channels, power, altitude)

    def __eq__(self, other):
        return isinstance(other, StrategyProfile) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        levels = ", ".join(f"({p},{h})" for p, h in zip(self.power.tolist(), self.altitude.tolist()))
        return f"StrategyProfile([{levels}])"


@dataclass(frozen=True)
class ChannelState:
    noise: tuple

    def __post_init__(self):
        object.__setattr__(self, "noise", tuple(float(v) for v in self.noise))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.noise, dtype=float)


class Aggregates(NamedTuple):
    power_interaction: np.ndarray
    area_interaction: float
    aggregator_power: np.ndarray
    aggregator_area: float


class CoverageTerms(NamedTuple):
    raw: float
    turbulence: float
    true: float

    @property
    def positive(self) -> bool:
        return self.true > 0


class UtilityBreakdown(NamedTuple):
    energy: float
    snr_utility: float
    coverage_utility: float
    total: float
    raw_coverage: float
    turbulence_coverage: float
    true_coverage: float


def check_profile(config: GameConfig, profile: StrategyProfile) -> None:
    """Raise ValueError unless ``profile`` is a valid joint strategy for ``config``."""
    M, N = config.uav_count, config.channel_count
    if profile.channels.shape != (M, N):
        raise ValueError(f"profile channels must have shape {(M, N)}, got {profile.channels.shape}")
    if not np.all(profile.channels.sum(axis=1) == config.channels_per_uav):
        raise ValueError(f"every UAV must occupy exactly {config.channels_per_uav} channels")
    if np.any(profile.channels.sum(axis=0) > config.channel_capacity):
        raise ValueError(f"channel occupancy exceeds capacity {config.channel_capacity}")
    if np.any((profile.power < 0) | (profile.power >= config.n_power)):
        raise ValueError("power index out of range")
    if np.any((profile.altitude < 0) | (profile.altitude >= config.n_altitude)):
        raise ValueError("altitude index out of range")


def init_deployment(config: GameConfig, seed: int) -> tuple:
    """Draw a feasible random channel assignment, initial levels and channel noise.

    Channels are placed greedily in UAV-id order, each UAV drawing
    ``channels_per_uav`` distinct channels uniformly among those with spare
    capacity. If a UAV cannot be placed the whole assignment is redrawn.
    """
    validate_config(config).raise_if_failed()
    rng = np.random.default_rng(seed)
    M, N, k = config.uav_count, config.channel_count, config.channels_per_uav
    for _ in range(_MAX_PLACEMENT_RETRIES):
        load = np.zeros(N, dtype=np.int64)
        channels = np.zeros((M, N), dtype=np.int8)
        for i in range(M):
            open_ = np.flatnonzero(load < config.channel_capacity)
            if open_.size < k:
                break
            pick = rng.choice(open_, size=k, replace=False)
            channels[i, pick] = 1
            load[pick] += 1
        else:
            break
    else:
        raise PlacementError(
            f"could not place {M} UAVs on {N} channels (capacity {config.channel_capacity}) "
            f"after {_MAX_PLACEMENT_RETRIES} attempts")
    power = rng.integers(0, config.n_power, size=M)
    altitude = rng.integers(0, config.n_altitude, size=M)
    lo, hi = config.noise_range
    noise = rng.uniform(lo, hi, size=N) if hi > lo else np.full(N, lo)
    return StrategyProfile(channels, power, altitude), ChannelState(noise)


def neighbor_set(config: GameConfig, s: Strategy) -> list:
    """Strategies reachable in one move: power and altitude each shift by at most one level.

    Diagonal moves are included; the channel vector never changes. Ordered by
    ascending (power index, altitude index).
    """
    out = []
    for p in range(s.power - 1, s.power + 2):
        if not 0 <= p < config.n_power:
            continue
        for h in range(s.altitude - 1, s.altitude + 2):
            if not 0 <= h < config.n_altitude or (p == s.power and h == s.altitude):
                continue
            out.append(Strategy(s.channels, p, h))
    return out


# ---- vectorised internals -------------------------------------------------

def _power_matrix(config, profile):
    """(M, N) matrix P_in: the UAV's level on selected channels, zero elsewhere."""
    p = np.asarray(config.power_levels)[profile.power]
    return profile.channels * p[:, None]


def raw_coverage_levels(config: GameConfig) -> np.ndarray:
    h = np.asarray(config.altitude_levels)
    return math.pi * (h * math.tan(config.field_angle)) ** 2


def turbulence_coverage_levels(config: GameConfig) -> np.ndarray:
    h = np.asarray(config.altitude_levels)
    beta = np.asarray(config.turbulence)
    return math.pi * (h * math.tan(config.field_angle)) ** (2 * beta)


def _coverage_arrays(config, profile):
    raw = raw_coverage_levels(config)[profile.altitude]
    turb = turbulence_coverage_levels(config)[profile.altitude]
    true = raw - config.overlap_index * (raw.sum() - raw)
    return raw, turb, true


def _power_interaction_matrix(config, profile, channel_state):
    pm = _power_matrix(config, profile)
    sigma = pm.sum(axis=0) + channel_state.as_array()
    return (sigma[None, :] - pm) * profile.channels


def utilities(config: GameConfig, profile: StrategyProfile, channel_state: ChannelState) -> np.ndarray:
    """All per-UAV utilities U_i as a length-M array."""
    c = config
    pm = _power_matrix(c, profile)
    total_power = pm.sum(axis=1)
    if np.any(total_power <= 0):
        raise ValueError("every UAV needs positive total power")
    interaction = _power_interaction_matrix(c, profile, channel_state)
    raw, turb, true = _coverage_arrays(c, profile)
    energy = c.battery / total_power
    snr_u = c.snr_index * ((pm - c.snr_balance * interaction) * profile.channels).sum(axis=1) \
        - c.coverage_tradeoff * true
    cov_u = turb / c.area
    return c.balance_a * energy + c.balance_b * snr_u + c.balance_c * cov_u


# ---- per-UAV operations ---------------------------------------------------

def aggregates(config: GameConfig, profile: StrategyProfile, channel_state: ChannelState,
               i: int) -> Aggregates:
    pm = _power_matrix(config, profile)
    sel = profile.channels[i].astype(bool)
    sigma = pm.sum(axis=0) + channel_state.as_array()
    power_interaction = np.where(sel, sigma - pm[i], 0.0)
    raw = raw_coverage_levels(config)[profile.altitude]
    area_interaction = float(raw.sum() - raw[i])
    agg_power = np.where(sel, power_interaction + pm[i], 0.0)
    return Aggregates(power_interaction, area_interaction, agg_power, area_interaction + float(raw[i]))


def coverage_terms(config: GameConfig, profile: StrategyProfile, i: int) -> CoverageTerms:
    """Raw disk coverage, turbulence-discounted coverage and overlap-corrected coverage.

    Check ``.positive`` on the result: a non-positive true coverage means the
    configuration's overlap index is too large for this profile.
    """
    raw, turb, true = _coverage_arrays(config, profile)
    return CoverageTerms(float(raw[i]), float(turb[i]), float(true[i]))


def snr(config: GameConfig, profile: StrategyProfile, channel_state: ChannelState,
        i: int, n: int) -> float:
    if not profile.channels[i, n]:
        raise ValueError(f"UAV {i} does not occupy channel {n}")
    pm = _power_matrix(config, profile)
    others = pm[:, n].sum() - pm[i, n]
    return float(pm[i, n] / (others + channel_state.noise[n]))


def linearized_snr(config: GameConfig, profile: StrategyProfile, channel_state: ChannelState,
                   i: int, n: int) -> float:
    """The linear SNR surrogate mu * C_in * (P_in - gamma * sigma_ip(n)) used inside U_SNR."""
    pm = _power_matrix(config, profile)
    sig = aggregates(config, profile, channel_state, i).power_interaction[n]
    return float(config.snr_index * profile.channels[i, n] * (pm[i, n] - config.snr_balance * sig))


def utility(config: GameConfig, profile: StrategyProfile, channel_state: ChannelState,
            i: int) -> UtilityBreakdown:
    c = config
    pm = _power_matrix(c, profile)
    total_power = pm[i].sum()
    if total_power <= 0:
        raise ValueError(f"UAV {i} has zero total power")
    agg = aggregates(c, profile, channel_state, i)
    raw, turb, true = coverage_terms(c, profile, i)
    energy = c.battery / total_power
    sel = profile.channels[i]
    snr_u = c.snr_index * float(np.sum((pm[i] - c.snr_balance * agg.power_interaction) * sel)) \
        - c.coverage_tradeoff * true
    cov_u = turb / c.area
    total = c.balance_a * energy + c.balance_b * snr_u + c.balance_c * cov_u
    return UtilityBreakdown(float(energy), float(snr_u), float(cov_u), float(total), raw, turb, true)


def global_utility(config: GameConfig, profile: StrategyProfile, channel_state: ChannelState) -> float:
    return float(utilities(config, profile, channel_state).sum())


def own_utility_parts(config: GameConfig, profile: StrategyProfile) -> np.ndarray:
    """The part of each U_i that depends only on that UAV's own strategy."""
    c = config
    pm = _power_matrix(c, profile)
    total_power = pm.sum(axis=1)
    raw = raw_coverage_levels(c)[profile.altitude]
    turb = turbulence_coverage_levels(c)[profile.altitude]
    return (c.balance_a * c.battery / total_power
            + c.balance_b * c.snr_index * total_power
            - c.balance_b * c.coverage_tradeoff * raw
            + c.balance_c * turb / c.area)


def potential(config: GameConfig, profile: StrategyProfile, channel_state: ChannelState,
              variant: str = "exact") -> float:
    """Potential function of the game.

    ``exact`` sums the own-strategy part of every utility, which changes by
    exactly the mover's utility change under any unilateral deviation.
    ``paper`` is the historical form (no SNR index on the power term, true
    coverage in place of raw coverage); it only matches utility changes when
    snr_index == 1 and overlap_index == 0.
    """
    c = config
    if variant == "exact":
        return float(own_utility_parts(c, profile).sum())
    if variant == "paper":
        pm = _power_matrix(c, profile)
        total_power = pm.sum(axis=1)
        _, turb, true = _coverage_arrays(c, profile)
        return float(np.sum(c.balance_a * c.battery / total_power
                            + c.balance_b * (total_power - c.coverage_tradeoff * true)
                            + c.balance_c * turb / c.area))
    raise ValueError(f"unknown potential variant {variant!r}")


def paper_potential_discrepancy(config: GameConfig, before: StrategyProfile,
                                after: StrategyProfile, i: int) -> float:
    """Closed form of (paper-variant potential change - mover's utility change).

    ``before`` and ``after`` must differ only in UAV ``i``'s levels.
    """
    c = config
    p = np.asarray(c.power_levels)
    d_power = c.channels_per_uav * (p[after.power[i]] - p[before.power[i]])
    raw = raw_coverage_levels(c)
    d_raw = raw[after.altitude[i]] - raw[before.altitude[i]]
    return (c.balance_b * (1 - c.snr_index) * d_power
            + c.balance_b * c.coverage_tradeoff * c.overlap_index * (c.uav_count - 1) * d_raw)
