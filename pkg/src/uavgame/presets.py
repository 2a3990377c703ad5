"""Ready-made game configurations.

``tiny2`` and the other ``tiny*`` games are small enough to enumerate. ``desk10``
is a 10-UAV, 4-channel game whose utility scale puts single-move payoff
changes on the order of the temperatures 0.01-0.03. ``paper`` carries the
large-scale scenario (100 UAVs, 30 channels).
"""
from __future__ import annotations

import math

import numpy as np

from .game import GameConfig


def linear_ramp(n: int, first: float = 1.0, last: float = 0.8) -> tuple:
    """Turbulence index per altitude level, decreasing linearly with altitude."""
    if n == 1:
        return (first,)
    return tuple(np.linspace(first, last, n).tolist())


def levels(first: float, gap: float, n: int) -> tuple:
    return tuple((first + gap * np.arange(n)).tolist())


def tiny2(**changes) -> GameConfig:
    """Two UAVs sharing one channel, two power and two altitude levels, decoupled payoffs."""
    cfg = GameConfig(
        uav_count=2, channel_count=1, channel_capacity=2, channels_per_uav=1,
        power_levels=(0.5, 1.0), altitude_levels=(1.0, 2.0), field_angle=math.pi / 4,
        battery=1.0, area=100.0, balance_a=1.0, balance_b=1.0, balance_c=1.0,
        snr_balance=0.0, snr_index=1.0, coverage_tradeoff=0.0, overlap_index=0.0,
        turbulence=(1.0, 1.0), noise_range=(0.5, 0.5))
    return cfg.replace(**changes) if changes else cfg


def tiny2_coupled(**changes) -> GameConfig:
    """tiny2 with interference, coverage trade-off and overlap switched on."""
    return tiny2(snr_balance=0.1, coverage_tradeoff=0.05, overlap_index=1e-3, **changes)


def tiny3(**changes) -> GameConfig:
    """Three UAVs on two channels with coupled payoffs and a 3x3 level grid."""
    cfg = GameConfig(
        uav_count=3, channel_count=2, channel_capacity=2, channels_per_uav=1,
        power_levels=(0.5, 0.75, 1.0), altitude_levels=(1.0, 1.5, 2.0),
        field_angle=math.pi / 6, battery=1.0, area=50.0,
        balance_a=0.5, balance_b=1.0, balance_c=2.0,
        snr_balance=0.2, snr_index=2.0, coverage_tradeoff=0.1, overlap_index=0.01,
        turbulence=(1.0, 0.95, 0.9), noise_range=(0.1, 0.6))
    return cfg.replace(**changes) if changes else cfg


def single_uav(**changes) -> GameConfig:
    cfg = GameConfig(
        uav_count=1, channel_count=2, channel_capacity=1, channels_per_uav=1,
        power_levels=(0.25, 0.5, 0.75), altitude_levels=(1.0, 2.0),
        field_angle=math.pi / 6, battery=0.2, area=20.0,
        balance_a=1.0, balance_b=1.0, balance_c=1.0,
        snr_balance=0.0, snr_index=1.0, coverage_tradeoff=0.01, overlap_index=0.0,
        turbulence=(1.0, 0.9), noise_range=(0.2, 0.4))
    return cfg.replace(**changes) if changes else cfg


def errata(**changes) -> GameConfig:
    """Six-UAV game with snr_index=10, overlap_index=1e-4 and unit balance indices."""
    cfg = GameConfig(
        uav_count=6, channel_count=3, channel_capacity=2, channels_per_uav=1,
        power_levels=levels(0.2, 0.2, 5), altitude_levels=levels(1.0, 0.5, 5),
        field_angle=math.pi / 6, battery=1.0, area=100.0,
        balance_a=1.0, balance_b=1.0, balance_c=1.0,
        snr_balance=0.1, snr_index=10.0, coverage_tradeoff=1.0, overlap_index=1e-4,
        turbulence=linear_ramp(5, 1.0, 0.9), noise_range=(0.025, 1.0))
    return cfg.replace(**changes) if changes else cfg


def desk10(**changes) -> GameConfig:
    """Desk-scale 10-UAV, 4-channel game.

    Payoffs rise with power (SNR term) and altitude (coverage term), so the
    maximiser sits at the top of both grids and 2*Delta stays near 0.01.
    Channel capacity admits up to 20 UAVs so the UAV-count sweep {5, 10, 20}
    stays feasible.
    """
    cfg = GameConfig(
        uav_count=10, channel_count=4, channel_capacity=10, channels_per_uav=2,
        power_levels=levels(0.1, 0.03, 30), altitude_levels=levels(1.0, 0.2, 30),
        field_angle=math.pi / 6, battery=1.0, area=400.0,
        balance_a=0.0002, balance_b=0.005, balance_c=0.75,
        snr_balance=0.01, snr_index=10.0, coverage_tradeoff=0.002, overlap_index=5e-4,
        turbulence=linear_ramp(30), noise_range=(0.025, 1.0))
    return cfg.replace(**changes) if changes else cfg


def paper(**changes) -> GameConfig:
    """Large-scale post-disaster scenario: 100 UAVs, 30 channels, 40 power and 46 altitude levels."""
    cfg = GameConfig(
        uav_count=100, channel_count=30, channel_capacity=25, channels_per_uav=5,
        power_levels=levels(0.025, 0.025, 40), altitude_levels=levels(1.0, 0.2, 46),
        field_angle=math.radians(30), battery=5.0, area=4000.0,
        balance_a=0.002, balance_b=0.005, balance_c=0.03,
        snr_balance=0.002, snr_index=10.0, coverage_tradeoff=0.002, overlap_index=1e-4,
        turbulence=linear_ramp(46), noise_range=(0.025, 1.0))
    return cfg.replace(**changes) if changes else cfg


ORACLE_CONFIGS = {
    "tiny2": tiny2,
    "tiny2_coupled": tiny2_coupled,
    "tiny3": tiny3,
    "single_uav": single_uav,
}

GAME_PRESETS = {**ORACLE_CONFIGS, "errata": errata, "desk10": desk10, "paper": paper}
