"""When the stationary distribution is right but the chain never gets there.

On tiny2 with tau = 0.005 and m = 3.2 the synchronous learner almost never
lets anyone experiment: omega = exp(-640). Its stationary distribution still
puts all its mass on the potential maximiser; we compute it exactly by
elimination over the (previous, current, flags) chain. A simulation of 10^6
steps simply stays wherever it started.

Raising tau on a slightly richer game shows the two views agreeing.
"""
import math

from uavgame import presets
from uavgame.learning import LearnerParams, altering_probability
from uavgame.oracle import empirical_occupancy, exact_stationary

cfg = presets.tiny2()
frozen = LearnerParams(0.005, 3.2, 1, 0)
print(f"omega = exp({-3.2 / 0.005:.0f}) = {altering_probability(0.005, 3.2):.3g}")
exact = exact_stationary(cfg, "spblla", frozen)
print(f"exact stationary mass on the maximiser: {exact.maximizer_mass:.6f} "
      f"({len(exact.states)} augmented states)")
for seed in range(3):
    occ = empirical_occupancy(cfg, "spblla", LearnerParams(0.005, 3.2, 1_100_000, seed),
                              burn_in=100_000, samples=1_000_000)
    print(f"  seed {seed}: simulated mass {occ.maximizer_mass:.3f}")

# A regime where omega is moderate: the simulation tracks the exact answer.
cfg = presets.tiny2_coupled()
tau, m = 1.0, 1.1 * 2 * 2.115958
params = LearnerParams(tau, m, 1, 0)
print(f"\ntiny2_coupled, tau={tau}, m={m:.3f}, omega={math.exp(-m / tau):.3g}")
exact = exact_stationary(cfg, "spblla", params)
occ = empirical_occupancy(cfg, "spblla", LearnerParams(tau, m, 1_100_000, 0),
                          burn_in=100_000, samples=1_000_000)
print(f"  exact settled mass {exact.settled_maximizer_mass:.4f}, "
      f"simulated {occ.maximizer_mass:.4f}")
