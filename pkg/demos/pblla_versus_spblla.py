"""Sequential versus synchronous log-linear learning on the 10-UAV desk game.

PBLLA lets one UAV experiment per step. SPBLLA lets each UAV experiment with
probability omega = exp(-m / tau), so several move at once. With m just above
the stability bound that parallelism converges faster; as m grows, omega
collapses and the advantage reverses.

Takes about half a minute.
"""
import numpy as np

from uavgame import presets
from uavgame.learning import LearnerParams, altering_probability, delta_bound, run_learning
from uavgame.metrics import convergence_iteration, fluctuation_stats, tail_mean

cfg = presets.desk10()
two_delta = delta_bound(cfg).min_m
iterations, stride, seeds = 200_000, 100, range(5)


def summarise(algorithm, tau, m=None):
    conv, tail, dev = [], [], []
    for seed in seeds:
        rec = run_learning(algorithm, cfg, LearnerParams(tau, m, iterations, seed),
                           record_stride=stride)
        u = rec.global_utility
        c = convergence_iteration(u, 0.9, 2000 // stride, rec.iterations)
        conv.append(iterations + 1 if c is None else c)
        tail.append(tail_mean(u))
        dev.append(fluctuation_stats(u, u.size // 2).max_abs_deviation)
    return np.median(conv), np.median(tail), np.median(dev)


print(f"2*Delta = {two_delta:.5f}")
print(f"{'run':<28s}{'omega':>9s}{'converged at':>14s}{'tail U':>9s}{'max |dev|':>11s}")
base = None
for label, algo, tau, m in [
        ("PBLLA tau=0.01", "pblla", 0.01, None),
        ("PBLLA tau=0.03", "pblla", 0.03, None),
        ("SPBLLA m=1.05*(2*Delta)", "spblla", 0.01, 1.05 * two_delta),
        ("SPBLLA m=2*(2*Delta)", "spblla", 0.01, 2 * two_delta),
        ("SPBLLA m=3*(2*Delta)", "spblla", 0.01, 3 * two_delta)]:
    conv, tail, dev = summarise(algo, tau, m)
    omega = "" if m is None else f"{altering_probability(tau, m):.3f}"
    print(f"{label:<28s}{omega:>9s}{conv:>14.0f}{tail:>9.4f}{dev:>11.4f}")
    if base is None:
        base = conv
    elif algo == "spblla":
        print(f"{'':<28s}speedup over PBLLA: {base / conv:.2f}x")
