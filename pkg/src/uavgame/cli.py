"""Command-line entry point: ``uavgame run | sweep | verify``."""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from . import __version__, oracle, presets
from .config import ExperimentSpec, SpecParseError, SweepPlan, dump_spec, load_spec
from .game import ConfigError, init_deployment, utilities, validate_config
from .learning import (LearnerParams, ParameterBoundError, RunRecord, check_m_bound,
                       delta_bound, run_learning)
from .metrics import convergence_iteration, fluctuation_stats, tail_mean

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_VERIFY = 0, 2, 3, 4
CSV_HEADER = RunRecord.columns
CONVERGENCE_WINDOW = 2000
CONVERGENCE_FRACTION = 0.9

SUMMARY_HEADER = ("axis", "value", "seed", "m", "tail_mean_u", "fluct_mean",
                  "fluct_max_abs_dev", "fluct_std", "convergence_iteration",
                  "tail_coverage", "tail_avg_snr", "csv")


def bundled_specs() -> list:
    root = resources.files("uavgame") / "specs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_spec_path(name: str) -> Path:
    """A file path, or the name of a bundled spec with or without ``.cfg``."""
    path = Path(name)
    if path.exists():
        return path
    stem = name[:-4] if name.endswith(".cfg") else name
    if stem in bundled_specs():
        with resources.as_file(resources.files("uavgame") / "specs" / f"{stem}.cfg") as p:
            return Path(p)
    raise FileNotFoundError(f"no spec file {name!r} (bundled: {', '.join(bundled_specs())})")


def _g(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(record: RunRecord, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in record.records:
        w.writerow((int(r[0]), _g(r[1]), _g(r[2]), _g(r[3]), _g(r[4]), int(r[5])))


def csv_text(record: RunRecord) -> str:
    buf = io.StringIO()
    write_csv(record, buf)
    return buf.getvalue()


def execute(spec: ExperimentSpec) -> RunRecord:
    record = run_learning(spec.algorithm, spec.game, spec.params, record_stride=spec.record_stride)
    record.spec = spec
    return record


def _write_outputs(spec: ExperimentSpec, record: RunRecord, out: Path) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        write_csv(record, fh)
    out.with_suffix(".cfg").write_text(dump_spec(spec.replace(output=str(out))), encoding="utf-8")


def cmd_run(spec: ExperimentSpec, out: Path, stream=None) -> RunRecord:
    stream = stream or sys.stdout
    record = execute(spec)
    _write_outputs(spec, record, out)
    bound = delta_bound(spec.game)
    print(f"delta bound: total {bound.total:.6g}  (2*Delta = {bound.min_m:.6g})", file=stream)
    for name, value in bound.breakdown().items():
        print(f"  {name:<22s}{value:.6g}", file=stream)
    last = record.trajectory[-1]
    print(f"{spec.algorithm} tau={spec.params.tau:g}"
          + (f" m={spec.params.m:.6g}" if spec.params.m is not None else "")
          + f" seed={spec.params.seed} iterations={spec.params.max_iterations}", file=stream)
    print(f"final: global_utility {last.global_utility:.6g}  potential {last.potential:.6g}  "
          f"avg_snr {last.average_snr:.6g}  coverage {last.coverage_proportion:.4f}  "
          f"active_flags {last.active_flags}", file=stream)
    print(f"tail mean U {tail_mean(record.global_utility):.6g}  "
          f"rng draws {record.rng_draws}  wall clock {record.wall_clock:.2f}s", file=stream)
    print(f"wrote {out}", file=stream)
    return record


# ---- sweeps ---------------------------------------------------------------

class SweepJob(NamedTuple):
    index: int
    axis: str
    value: float
    seed: int
    spec: ExperimentSpec
    out: str


def sweep_jobs(spec: ExperimentSpec, plan: SweepPlan, out_dir: Path) -> list:
    """Values x seeds. Seeds are paired: every value runs seeds base, base+1, ..."""
    base = spec.params.seed
    jobs = []
    for vi, value in enumerate(plan.values):
        if plan.axis == "tau":
            variant = spec.replace(params=LearnerParams(
                float(value), spec.params.m, spec.params.max_iterations, base,
                spec.params.allow_unstable_m))
        elif plan.axis == "m":
            m = float(value) * (delta_bound(spec.game).total if plan.m_unit == "delta" else 1.0)
            variant = spec.replace(m_factor=None, params=LearnerParams(
                spec.params.tau, m, spec.params.max_iterations, base, spec.params.allow_unstable_m))
        else:
            if int(value) != value:
                raise ConfigError([f"uav_count value {value!r} is not an integer"])
            variant = spec.with_game(spec.game.replace(uav_count=int(value)))
        validate_config(variant.game).raise_if_failed()
        if variant.algorithm == "spblla":
            check_m_bound(variant.game, variant.params)
        for k in range(plan.seeds):
            s = variant.with_seed(base + k)
            out = out_dir / f"{plan.axis}_{vi}_seed{base + k}.csv"
            jobs.append(SweepJob(len(jobs), plan.axis, value, base + k, s, str(out)))
    return jobs


def _summarise(job: SweepJob, record: RunRecord, window: int, fraction: float) -> tuple:
    u = record.global_utility
    points = max(1, window // job.spec.record_stride)
    points = min(points, u.size)
    fl = fluctuation_stats(u, max(1, u.size // 2))
    conv = convergence_iteration(u, fraction, points, record.iterations)
    return (job.axis, repr(job.value), job.seed,
            "" if job.spec.params.m is None else _g(job.spec.params.m),
            _g(tail_mean(u)), _g(fl.mean), _g(fl.max_abs_deviation), _g(fl.std),
            "" if conv is None else conv,
            _g(tail_mean(record.coverage_proportion)), _g(tail_mean(record.avg_snr)), job.out)


def run_sweep_job(job: SweepJob, window: int = CONVERGENCE_WINDOW,
                  fraction: float = CONVERGENCE_FRACTION):
    """Run one child; returns (index, summary row) or (index, error text)."""
    try:
        record = execute(job.spec)
        _write_outputs(job.spec, record, Path(job.out))
        return job.index, _summarise(job, record, window, fraction), None
    except Exception as exc:  # reported per run by the parent
        return job.index, None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(spec: ExperimentSpec, plan: SweepPlan, out_dir: Path, workers: int = 1,
              window: int = CONVERGENCE_WINDOW, fraction: float = CONVERGENCE_FRACTION,
              stream=None) -> list:
    """Run every (value, seed) pair and write ``summary.csv``; returns the summary rows.

    Children write their own CSV files; the summary is assembled in job order
    once all of them finish, so it does not depend on scheduling.
    """
    stream = stream or sys.stdout
    jobs = sweep_jobs(spec, plan, out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if workers <= 1:
        results = [run_sweep_job(j, window, fraction) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_sweep_job, jobs, [window] * len(jobs),
                                    [fraction] * len(jobs)))
    results.sort(key=lambda r: r[0])
    failed = [(jobs[i], err) for i, _, err in results if err is not None]
    if failed:
        lines = [f"  {j.axis}={j.value!r} seed={j.seed}: {err}" for j, err in failed]
        raise SweepError(f"{len(failed)} of {len(jobs)} runs failed:\n" + "\n".join(lines))
    rows = [row for _, row, _ in results]
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)
    _print_sweep(plan, rows, stream)
    print(f"wrote {out_dir / 'summary.csv'}", file=stream)
    return rows


class SweepError(RuntimeError):
    pass


def _print_sweep(plan, rows, stream):
    print(f"{plan.axis:>10s} {'median tail U':>14s} {'median conv':>12s} {'median fluct':>13s}",
          file=stream)
    for value in plan.values:
        sel = [r for r in rows if r[1] == repr(value)]
        tu = np.median([float(r[4]) for r in sel])
        med = float(np.median([math.inf if r[8] == "" else r[8] for r in sel]))
        mc = "none" if math.isinf(med) else f"{med:g}"
        fl = np.median([float(r[6]) for r in sel])
        print(f"{value!r:>10s} {tu:14.6g} {mc:>12s} {fl:13.4g}", file=stream)


# ---- verification ---------------------------------------------------------

class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def verify_checks(scale: str = "tiny", variant: str = "exact") -> list:
    """Run the oracle suite and return one Check per named invariant."""
    if scale not in ("tiny", "small"):
        raise ValueError("scale must be tiny or small")
    checks = []
    occupancy_samples = 2 * 10 ** 5 if scale == "tiny" else 10 ** 6
    potential_games = dict(presets.ORACLE_CONFIGS)
    potential_games["errata"] = presets.errata
    if scale == "small":
        potential_games["desk10"] = presets.desk10
    for name, make in potential_games.items():
        cfg = make()
        chk = oracle.exact_potential_check(cfg, 1000, seed=0)
        measured = chk.exact_max if variant == "exact" else chk.paper_max
        checks.append(Check(f"{variant}_potential[{name}]", measured <= 1e-12 * max(1.0, _u_scale(cfg)),
                            f"max |dU - dphi| = {measured:.3g} over {chk.moves} moves; "
                            f"paper-variant discrepancy {chk.paper_max:.6g}, closed-form gap "
                            f"{chk.formula_max_rel:.2g}"))
    err = oracle.exact_potential_check(presets.errata(), 1000, seed=0)
    checks.append(Check("paper_discrepancy_closed_form[errata]", err.formula_max_rel <= 1e-9,
                        f"relative gap {err.formula_max_rel:.3g}, largest discrepancy {err.paper_max:.6g}"))
    for name, make in presets.ORACLE_CONFIGS.items():
        cfg = make()
        table = oracle.ProfileTable(cfg)
        res = oracle.brute_force_psne(cfg, table=table)
        best = oracle.phi_maximizers(cfg, table=table)
        checks.append(Check(f"maximizers_in_psne[{name}]", bool(res.psne) and best <= res.psne,
                            f"{len(best)} maximiser(s), {len(res.psne)} PSNE, "
                            f"{len(res.local_psne)} local PSNE"))
        bound = delta_bound(cfg).total
        worst = oracle.max_unilateral_delta(cfg, table=table)
        checks.append(Check(f"delta_bound[{name}]", bound >= worst,
                            f"bound {bound:.6f} >= max delta {worst:.6f}"))
    cfg = presets.single_uav()
    table = oracle.ProfileTable(cfg)
    res = oracle.brute_force_psne(cfg, table=table)
    best = oracle.phi_maximizers(cfg, table=table)
    top = {table.profile(k) for k in np.flatnonzero(table.U[:, 0] >= table.U[:, 0].max() - 1e-12)}
    checks.append(Check("single_uav_coincidence", res.psne == best == top,
                        f"PSNE {len(res.psne)}, maximisers {len(best)}, argmax {len(top)}"))
    tiny = presets.tiny2()
    occ = oracle.empirical_occupancy(tiny, "pblla", LearnerParams(0.005, seed=0), 10 ** 5,
                                     occupancy_samples)
    checks.append(Check("pblla_occupancy[tiny2]", occ.maximizer_mass >= 0.9,
                        f"mass on maximiser {occ.maximizer_mass:.5f} over {occ.total} settled steps"))
    stat = oracle.exact_stationary(tiny, "spblla", LearnerParams(0.005, m=3.2))
    checks.append(Check("spblla_stationary[tiny2]", stat.settled_maximizer_mass >= 0.9,
                        f"exact stationary mass on maximiser {stat.settled_maximizer_mass:.6f} "
                        f"({len(stat.states)} augmented states)"))
    if scale == "small":
        cfg = presets.tiny2_coupled()
        occ = oracle.empirical_occupancy(cfg, "pblla", LearnerParams(0.1, seed=1), 10 ** 4, 10 ** 6)
        exact = oracle.exact_stationary(cfg, "pblla", LearnerParams(0.1))
        gap = abs(occ.maximizer_mass - exact.settled_maximizer_mass)
        checks.append(Check("pblla_occupancy_vs_exact[tiny2_coupled]", gap <= 0.01,
                            f"empirical {occ.maximizer_mass:.4f} vs exact "
                            f"{exact.settled_maximizer_mass:.4f}"))
    return checks


def _u_scale(cfg):
    profile, state = init_deployment(cfg, 0)
    return float(np.abs(utilities(cfg, profile, state)).max())


def cmd_verify(scale: str = "tiny", variant: str = "exact", stream=None) -> bool:
    stream = stream or sys.stdout
    checks = verify_checks(scale, variant)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<44s} {c.detail}", file=stream)
    ok = all(c.passed for c in checks)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} checks passed", file=stream)
    return ok


# ---- argument handling ----------------------------------------------------

def _parse_values(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavgame",
                                 description="Log-linear learning for the UAV channel, power "
                                             "and altitude game.")
    ap.add_argument("--version", action="version", version=f"uavgame {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write its trajectory CSV")
    run.add_argument("spec", help="spec file or bundled spec name")
    run.add_argument("--seed", type=int, help="override learning.seed")
    run.add_argument("--out", help="CSV path (default: run.output or <spec>_seed<N>.csv)")

    sw = sub.add_parser("sweep", help="run a parameter sweep over paired seeds")
    sw.add_argument("spec")
    sw.add_argument("--axis", choices=("tau", "m", "uav_count"))
    sw.add_argument("--values", type=_parse_values, help="comma-separated values")
    sw.add_argument("--seeds", type=int, help="seeds per value (base seed is learning.seed)")
    sw.add_argument("--m-unit", choices=("abs", "delta"),
                    help="read m values as absolute or as multiples of Delta")
    sw.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    sw.add_argument("--out-dir", default=None, help="directory for per-run CSVs and summary.csv")
    sw.add_argument("--window", type=int, default=CONVERGENCE_WINDOW,
                    help="convergence moving-average window in iterations")
    sw.add_argument("--fraction", type=float, default=CONVERGENCE_FRACTION)

    ver = sub.add_parser("verify", help="run the brute-force oracle suite")
    ver.add_argument("--scale", choices=("tiny", "small"), default="tiny")
    ver.add_argument("--potential", choices=("exact", "paper"), default="exact",
                     help="potential checked against utility differences")
    return ap


def _sweep_plan(args, spec: ExperimentSpec) -> SweepPlan:
    base = spec.sweep
    axis = args.axis or (base.axis if base else None)
    values = args.values or (base.values if base and base.axis == axis else None)
    if axis is None or values is None:
        raise ConfigError(["sweep needs --axis and --values (or a sweep section in the spec)"])
    seeds = args.seeds or (base.seeds if base else 1)
    unit = args.m_unit or (base.m_unit if base and base.axis == axis else "abs")
    try:
        return SweepPlan(axis, values, seeds, unit)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return EXIT_OK if cmd_verify(args.scale, args.potential) else EXIT_VERIFY
        path = resolve_spec_path(args.spec)
        spec = load_spec(path)
        if args.command == "run":
            if args.seed is not None:
                spec = spec.with_seed(args.seed)
            out = Path(args.out or spec.output or f"{path.stem}_seed{spec.params.seed}.csv")
            cmd_run(spec, out)
        else:
            plan = _sweep_plan(args, spec)
            out_dir = Path(args.out_dir or f"{path.stem}_sweep")
            cmd_sweep(spec, plan, out_dir, args.workers, args.window, args.fraction)
        return EXIT_OK
    except (SpecParseError, ConfigError, ParameterBoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, SweepError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
