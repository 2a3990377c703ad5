"""Network-level statistics computed from profiles and recorded series."""
from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

import numpy as np

from .game import ChannelState, GameConfig, StrategyProfile, _coverage_arrays, _power_matrix

TAIL_FRACTION = 0.1


class TrajectoryPoint(NamedTuple):
    iteration: int
    global_utility: float
    potential: float
    average_snr: float
    coverage_proportion: float
    active_flags: int


class Fluctuation(NamedTuple):
    mean: float
    max_abs_deviation: float
    std: float


def snr_matrix(config: GameConfig, profile: StrategyProfile, channel_state: ChannelState) -> np.ndarray:
    """(M, N) linear SNR of every UAV on every channel, zero off its selected channels."""
    pm = _power_matrix(config, profile)
    others = pm.sum(axis=0)[None, :] - pm + channel_state.as_array()[None, :]
    return np.where(profile.channels.astype(bool), pm / others, 0.0)


def average_snr(config: GameConfig, profile: StrategyProfile, channel_state: ChannelState) -> float:
    """Mean over UAVs of each UAV's mean linear SNR across its selected channels."""
    per_uav = snr_matrix(config, profile, channel_state).sum(axis=1) / profile.channels.sum(axis=1)
    return float(per_uav.mean())


def shannon_capacity(snr, bandwidth: float):
    """Shannon capacity bandwidth * log2(1 + snr); same units as ``bandwidth``."""
    return bandwidth * np.log2(1.0 + np.asarray(snr, dtype=float))


def coverage_proportion(config: GameConfig, profile: StrategyProfile) -> float:
    """Overlap-corrected covered area over the mission area, clamped to [0, 1]."""
    _, _, true = _coverage_arrays(config, profile)
    return float(np.clip(true.sum() / config.area, 0.0, 1.0))


def fluctuation_stats(series: Sequence[float], convergence_window: int) -> Fluctuation:
    """Mean, largest absolute deviation and standard deviation over the last ``convergence_window`` points."""
    x = np.asarray(series, dtype=float)
    if convergence_window < 1:
        raise ValueError("empty window")
    if convergence_window > x.size:
        raise ValueError(f"window {convergence_window} exceeds series length {x.size}")
    tail = x[-convergence_window:]
    mean = tail.mean()
    dev = tail - mean
    return Fluctuation(float(mean), float(np.abs(dev).max()), float(tail.std()))


def tail_mean(series: Sequence[float], fraction: float = TAIL_FRACTION) -> float:
    x = np.asarray(series, dtype=float)
    n = max(1, int(round(fraction * x.size)))
    return float(x[-n:].mean())


def convergence_iteration(series: Sequence[float], fraction: float, window: int,
                          iterations: Optional[Sequence[int]] = None,
                          tail: float = TAIL_FRACTION) -> Optional[int]:
    """First iteration after which the trailing moving average never drops below ``fraction`` of the tail mean.

    The tail mean is taken over the last ``tail`` share of the series. Returns
    ``None`` if the moving average ends below the threshold. Intended for
    positive series such as the global utility.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    x = np.asarray(series, dtype=float)
    if window < 1 or window > x.size:
        raise ValueError("window must lie in [1, len(series)]")
    its = np.arange(x.size) if iterations is None else np.asarray(iterations)
    c = np.concatenate(([0.0], np.cumsum(x)))
    ma = (c[window:] - c[:-window]) / window
    threshold = fraction * tail_mean(x, tail)
    below = np.flatnonzero(ma < threshold)
    if below.size == 0:
        return int(its[window - 1])
    last = below[-1]
    if last == ma.size - 1:
        return None
    return int(its[last + 1 + window - 1])
