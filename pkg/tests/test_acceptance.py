"""Acceptance suite: one test per criterion, each recording a PASS/FAIL verdict line.

Desk-scale runs are cached per (spec variant, seed) so criteria that share a run
do not repeat it; reported runtimes add up the wall clock of every run a
criterion depends on, cached or not.
"""
import io
import time
from pathlib import Path

import numpy as np
import pytest

from uavgame import presets
from uavgame.cli import (CONVERGENCE_FRACTION, CONVERGENCE_WINDOW, cmd_sweep, execute,
                         resolve_spec_path, sweep_jobs, write_csv)
from uavgame.config import SweepPlan, load_spec
from uavgame.learning import LearnerParams, delta_bound
from uavgame.metrics import convergence_iteration, fluctuation_stats, tail_mean
from uavgame.oracle import (ProfileTable, brute_force_psne, exact_potential_check, exact_stationary,
                            empirical_occupancy, max_unilateral_delta, maximizer_indices)

SEEDS = 5

pytestmark = pytest.mark.acceptance


class Summary:
    def __init__(self, record):
        u = record.global_utility
        stride = record.record_stride
        self.tail_u = tail_mean(u)
        self.fluct = fluctuation_stats(u, max(1, u.size // 2))
        conv = convergence_iteration(u, CONVERGENCE_FRACTION,
                                     min(u.size, max(1, CONVERGENCE_WINDOW // stride)),
                                     record.iterations)
        # a run that never settles counts as slower than any that does
        self.conv = record.params.max_iterations + 1 if conv is None else conv
        self.coverage = tail_mean(record.coverage_proportion)
        self.seconds = record.wall_clock


_CACHE = {}


def runs(spec_name, axis, value, seeds=SEEDS):
    """Summaries for seeds 0..seeds-1 of one sweep variant, built exactly as the CLI builds them."""
    key = (spec_name, axis, value, seeds)
    if key not in _CACHE:
        spec = load_spec(resolve_spec_path(spec_name))
        plan = SweepPlan(axis, (value,), seeds, "delta" if axis == "m" else "abs")
        _CACHE[key] = [Summary(execute(job.spec)) for job in sweep_jobs(spec, plan, Path("unused"))]
    return _CACHE[key]


def seconds(*groups):
    return sum(s.seconds for g in groups for s in g)


def median(values):
    return float(np.median(values))


# -- 1 ---------------------------------------------------------------------

def test_criterion_1_exact_potential(verdict):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name in ("tiny2", "tiny2_coupled", "tiny3"):
        cfg = presets.ORACLE_CONFIGS[name]()
        table = ProfileTable(cfg)
        scale = max(1.0, float(np.abs(table.U).max()))
        chk = exact_potential_check(cfg, trials=10 ** 9)
        rel = chk.exact_max / scale
        ok &= chk.exhaustive and rel <= 1e-12
        parts.append(f"{name} {rel:.1e} rel over {chk.moves} moves")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    assert verdict(1, ok, "; ".join(parts) + f" (limit 1e-12, {elapsed:.2f}s < 1s)")
    coupled = presets.tiny2_coupled()
    assert coupled.coverage_tradeoff > 0 and coupled.snr_balance > 0 and coupled.overlap_index > 0


# -- 2 ---------------------------------------------------------------------

def test_criterion_2_errata(verdict):
    cfg = presets.errata()
    assert cfg.snr_index == 10 and cfg.overlap_index == 1e-4
    t0 = time.perf_counter()
    chk = exact_potential_check(cfg, trials=1000, seed=0)
    elapsed = time.perf_counter() - t0
    ok = (not chk.exhaustive and chk.moves == 1000 and chk.formula_max_rel <= 1e-9
          and chk.paper_max > 1e-3 and elapsed < 1.0)
    assert verdict(2, ok, f"closed-form gap {chk.formula_max_rel:.1e} rel (limit 1e-9) over "
                          f"{chk.moves} sampled moves; largest discrepancy {chk.paper_max:.4g}; "
                          f"{elapsed:.2f}s < 1s")


# -- 3 and 4 ---------------------------------------------------------------

def test_criterion_3_psne_containment(verdict):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, make in presets.ORACLE_CONFIGS.items():
        table = ProfileTable(make())
        psne = set(brute_force_psne(table.config, table=table).psne)
        maxi = {table.profile(int(k)) for k in maximizer_indices(table)}
        ok &= bool(psne) and maxi <= psne
        parts.append(f"{name} {len(maxi)}/{len(psne)}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 10.0
    assert verdict(3, ok, "maximisers/PSNE " + ", ".join(parts) + f"; {elapsed:.2f}s < 10s")


def test_criterion_4_delta_bound(verdict):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, make in presets.ORACLE_CONFIGS.items():
        cfg = make()
        total, worst = delta_bound(cfg).total, max_unilateral_delta(cfg)
        ok &= total >= worst
        parts.append(f"{name} {total:.6f} >= {worst:.6f}")
        if name == "tiny2":
            ok &= round(total, 6) == 1.594248 and round(worst, 6) == 0.594248
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    assert verdict(4, ok, "; ".join(parts) + f"; {elapsed:.2f}s < 1s")


# -- 5 and 6 ---------------------------------------------------------------

def occupancy_masses(algorithm, params_for_seed):
    cfg = presets.tiny2()
    return [empirical_occupancy(cfg, algorithm, params_for_seed(seed), burn_in=10 ** 5,
                                samples=10 ** 6) for seed in range(SEEDS)]


def test_criterion_5_spblla_stochastic_stability(verdict):
    t0 = time.perf_counter()
    occs = occupancy_masses("spblla", lambda s: LearnerParams(0.005, 3.2, 1_100_000, s))
    elapsed = time.perf_counter() - t0
    masses = [o.maximizer_mass for o in occs]
    exact = exact_stationary(presets.tiny2(), "spblla", LearnerParams(0.005, 3.2, 1, 0))
    ok = min(masses) >= 0.90 and elapsed < 30
    modes = ", ".join(f"{int(np.argmax(o.counts))}" for o in occs)
    detail = ("maximiser mass per seed " + ", ".join(f"{m:.3f}" for m in masses)
              + f" (need >= 0.90; maximiser is profile {int(occs[0].maximizers[0])}, most visited "
              f"profiles {modes}, settled fraction {occs[0].settled_fraction:.3f}); "
              f"{elapsed:.1f}s < 30s; exact stationary mass "
              f"{exact.maximizer_mass:.6f}, so the chain concentrates but mixes far too slowly "
              "to show it in 10^6 steps")
    assert verdict(5, ok, detail)


def test_criterion_6_pblla_convergence(verdict):
    t0 = time.perf_counter()
    masses = [o.maximizer_mass for o in
              occupancy_masses("pblla", lambda s: LearnerParams(0.005, None, 1_100_000, s))]
    elapsed = time.perf_counter() - t0
    ok = min(masses) >= 0.90 and elapsed < 30
    assert verdict(6, ok, "maximiser mass per seed " + ", ".join(f"{m:.3f}" for m in masses)
                          + f" (need >= 0.90); {elapsed:.1f}s < 30s")


# -- 7 to 9: desk-scale trends -----------------------------------------------

def test_criterion_7_tau_fluctuation(verdict):
    low, high = runs("desk10_pblla", "tau", 0.01), runs("desk10_pblla", "tau", 0.03)
    dev_low = [s.fluct.max_abs_deviation for s in low]
    dev_high = [s.fluct.max_abs_deviation for s in high]
    elapsed = seconds(low, high)
    ok = all(h > l for l, h in zip(dev_low, dev_high)) and elapsed < 120
    pairs = ", ".join(f"{h:.3g}>{l:.3g}" for l, h in zip(dev_low, dev_high))
    assert verdict(7, ok, f"tail max |dev| at tau 0.03 vs 0.01 per seed: {pairs}; {elapsed:.1f}s < 120s")


def test_criterion_8_spblla_speedup(verdict):
    pb = runs("desk10_pblla", "tau", 0.01)
    sp = runs("desk10_spblla", "m", 2.1)     # m = 1.05 * 2*Delta
    slow = runs("desk10_spblla", "m", 6.0)   # m = 3 * 2*Delta
    c_pb = median([s.conv for s in pb])
    c_sp = median([s.conv for s in sp])
    c_slow = median([s.conv for s in slow])
    ratio, inverted = c_sp / c_pb, c_slow / c_pb
    elapsed = seconds(pb, sp, slow)
    ok = ratio <= 0.67 and inverted > 1 and elapsed < 180
    assert verdict(8, ok, f"median convergence SPBLLA {c_sp:.0f} / PBLLA {c_pb:.0f} = {ratio:.2f} "
                          f"(need <= 0.67); at m = 3x(2*Delta) ratio {inverted:.2f} (need > 1); "
                          f"{elapsed:.1f}s < 180s")


def test_criterion_9_monotone_trends(verdict):
    taus = [runs("desk10_pblla", "tau", t) for t in (0.01, 0.02, 0.03)]
    counts = [runs("desk10_uav_count", "uav_count", m) for m in (5, 10, 20)]
    ms = [runs("desk10_spblla", "m", v) for v in (2.1, 3.0, 4.0)]
    u_tau = [median([s.tail_u for s in g]) for g in taus]
    u_m = [median([s.tail_u for s in g]) for g in counts]
    c_m = [median([s.conv for s in g]) for g in ms]
    elapsed = seconds(*taus, *counts, *ms)
    ok_tau = u_tau[0] >= u_tau[1] >= u_tau[2]
    ok_count = u_m[0] <= u_m[1] <= u_m[2]
    ok_m = c_m[0] <= c_m[1] <= c_m[2]
    ok = ok_tau and ok_count and ok_m and elapsed < 300
    fmt = lambda xs: " >= ".join(f"{x:.5g}" for x in xs)
    fmt_up = lambda xs: " <= ".join(f"{x:.5g}" for x in xs)
    assert verdict(9, ok, f"tail U over tau {fmt(u_tau)}; over M {fmt_up(u_m)}; "
                          f"convergence over m {fmt_up(c_m)}; {elapsed:.1f}s < 300s")


# -- 10 ----------------------------------------------------------------------

def test_criterion_10_paper_scale_coverage(verdict):
    hi, lo = runs("paper_fig7", "tau", 0.03), runs("paper_fig7", "tau", 0.01)
    cov_hi, cov_lo = [s.coverage for s in hi], [s.coverage for s in lo]
    elapsed = seconds(hi, lo)
    ok = median(cov_hi) >= 0.80 and median(cov_lo) >= 0.90 and elapsed < 600
    per = lambda xs: ", ".join(f"{x:.3f}" for x in xs)
    assert verdict(10, ok, f"median tail coverage {median(cov_hi):.3f} at tau 0.03 (need >= 0.80; "
                           f"seeds {per(cov_hi)}), {median(cov_lo):.3f} at tau 0.01 (need >= 0.90; "
                           f"seeds {per(cov_lo)}); {elapsed:.1f}s < 600s")


# -- 11 ----------------------------------------------------------------------

def test_criterion_11_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    spec = load_spec(resolve_spec_path("desk10_spblla"))
    texts = []
    for _ in range(2):
        path = tmp_path / f"r{len(texts)}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_csv(execute(spec.with_seed(4)), fh)
        texts.append(path.read_bytes())
    repeat_ok = texts[0] == texts[1]
    plan = SweepPlan("tau", (0.01, 0.03), 2)
    out = {}
    for workers in (1, 3):
        d = tmp_path / f"w{workers}"
        cmd_sweep(spec, plan, d, workers=workers, stream=io.StringIO())
        out[workers] = {f.name: f.read_bytes() for f in sorted(d.glob("tau_*.csv"))}
    sweep_ok = len(out[1]) == 4 and out[1] == out[3]
    elapsed = time.perf_counter() - t0
    ok = repeat_ok and sweep_ok and elapsed < 30
    assert verdict(11, ok, f"repeat CSVs identical: {repeat_ok}; sweep CSVs identical across 1 and 3 "
                           f"workers: {sweep_ok} ({len(out[1])} files); {elapsed:.1f}s < 30s")
