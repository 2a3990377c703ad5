"""Plain-Python PBLLA/SPBLLA step used to cross-check the compiled kernel.

Consumes uniforms in the documented layout and evaluates payoffs through
``uavgame.game`` rather than the kernel's lookup tables.
"""
import math

import numpy as np

from uavgame.game import StrategyProfile, Strategy, neighbor_set, utilities


def keep(u_prev, u_curr, tau):
    a, b = u_prev / tau, u_curr / tau
    top = max(a, b)
    return math.exp(b - top) / (math.exp(a - top) + math.exp(b - top))


def pick(config, channels, p, h, u):
    options = neighbor_set(config, Strategy(channels, p, h))
    if not options:
        return None
    s = options[min(int(u * len(options)), len(options) - 1)]
    return s.power, s.altitude


class RefChain:
    def __init__(self, config, profile, state):
        self.config = config
        self.channels = profile.channels
        self.state = state
        self.power = profile.power.tolist()
        self.alt = profile.altitude.tolist()
        self.prev_power = list(self.power)
        self.prev_alt = list(self.alt)
        self.flags = [0] * len(self.power)
        u = self.utilities()
        self.u_prev = list(u)
        self.u_curr = list(u)

    def profile(self):
        return StrategyProfile(self.channels, self.power, self.alt)

    def utilities(self):
        return utilities(self.config, self.profile(), self.state).tolist()

    def step(self, algorithm, tau, omega, uniforms):
        M = len(self.power)
        new_p, new_h = list(self.power), list(self.alt)
        if algorithm == "pblla":
            u0, u1 = uniforms
            if 1 in self.flags:
                i = self.flags.index(1)
                if u0 >= keep(self.u_prev[i], self.u_curr[i], tau):
                    new_p[i], new_h[i] = self.prev_power[i], self.prev_alt[i]
                self.flags[i] = 0
            else:
                i = min(int(u0 * M), M - 1)
                got = pick(self.config, tuple(self.channels[i].tolist()), self.power[i], self.alt[i], u1)
                if got:
                    new_p[i], new_h[i] = got
                    self.flags[i] = 1
        else:
            for i in range(M):
                u0, u1 = uniforms[2 * i], uniforms[2 * i + 1]
                if self.flags[i]:
                    if u0 >= keep(self.u_prev[i], self.u_curr[i], tau):
                        new_p[i], new_h[i] = self.prev_power[i], self.prev_alt[i]
                    self.flags[i] = 0
                elif u0 < omega:
                    got = pick(self.config, tuple(self.channels[i].tolist()), self.power[i],
                               self.alt[i], u1)
                    if got:
                        new_p[i], new_h[i] = got
                        self.flags[i] = 1
        self.prev_power, self.prev_alt = self.power, self.alt
        self.power, self.alt = new_p, new_h
        self.u_prev, self.u_curr = self.u_curr, self.utilities()
