"""Compiled inner loops for the learning dynamics.

Uniform draws are supplied by the caller in a fixed layout so the stream a
run consumes does not depend on which branch each UAV takes:

* PBLLA uses two uniforms per iteration. Slot 0 picks the exploring UAV
  (no flags set) or decides keep/revert (a flag is set). Slot 1 picks the
  trial neighbour and is unused during resolution.
* SPBLLA uses two uniforms per UAV per iteration, in ascending UAV id.
  Slot 0 is the exploration draw (flag clear) or the keep/revert draw
  (flag set). Slot 1 picks the trial neighbour when the UAV explores.
"""
import math

import numpy as np
from numba import njit

PBLLA = 0
SPBLLA = 1

# coefficient vector layout
A, B, C, E, AREA, MU, GAMMA, ALPHA, KAPPA = range(9)

# recorded columns
REC_ITER, REC_U, REC_PHI, REC_SNR, REC_COV, REC_FLAGS = range(6)
N_REC = 6


@njit(cache=True)
def keep_probability(u_prev, u_curr, tau):
    d = (u_curr - u_prev) / tau
    if d >= 0.0:
        return 1.0 / (1.0 + math.exp(-d))
    e = math.exp(d)
    return e / (1.0 + e)


@njit(cache=True)
def channel_totals(power_idx, chan, ptable, n_channels):
    tot = np.zeros(n_channels)
    for i in range(chan.shape[0]):
        p = ptable[power_idx[i]]
        for k in range(chan.shape[1]):
            tot[chan[i, k]] += p
    return tot


@njit(cache=True)
def evaluate(power_idx, alt_idx, chan, noise, ptable, dtable, dttable, coef, out):
    """Fill ``out`` with U_i for every UAV; return (sum of raw coverage, channel totals)."""
    M, nc = chan.shape
    tot = channel_totals(power_idx, chan, ptable, noise.shape[0])
    dsum = 0.0
    for i in range(M):
        dsum += dtable[alt_idx[i]]
    for i in range(M):
        p = ptable[power_idx[i]]
        sig = 0.0
        for k in range(nc):
            c = chan[i, k]
            sig += tot[c] + noise[c] - p
        d = dtable[alt_idx[i]]
        dbar = d - coef[KAPPA] * (dsum - d)
        snr_u = coef[MU] * (nc * p - coef[GAMMA] * sig) - coef[ALPHA] * dbar
        out[i] = (coef[A] * coef[E] / (nc * p) + coef[B] * snr_u
                  + coef[C] * dttable[alt_idx[i]] / coef[AREA])
    return dsum, tot


@njit(cache=True)
def _pick_neighbor(p, h, n_p, n_h, u):
    """Return the chosen (power, altitude) neighbour, or (-1, -1) if none exist."""
    count = 0
    for dp in range(-1, 2):
        for dh in range(-1, 2):
            q = p + dp
            g = h + dh
            if (dp != 0 or dh != 0) and 0 <= q < n_p and 0 <= g < n_h:
                count += 1
    if count == 0:
        return -1, -1
    target = int(u * count)
    if target >= count:
        target = count - 1
    j = 0
    for dp in range(-1, 2):
        for dh in range(-1, 2):
            q = p + dp
            g = h + dh
            if (dp != 0 or dh != 0) and 0 <= q < n_p and 0 <= g < n_h:
                if j == target:
                    return q, g
                j += 1
    return -1, -1


@njit(cache=True)
def _record(rec, row, t, power_idx, alt_idx, chan, noise, ptable, dtable, dttable,
            coef, u_curr, flags, dsum, tot):
    M, nc = chan.shape
    phi = 0.0
    snr_total = 0.0
    for i in range(M):
        p = ptable[power_idx[i]]
        phi += (coef[A] * coef[E] / (nc * p) + coef[B] * coef[MU] * nc * p
                - coef[B] * coef[ALPHA] * dtable[alt_idx[i]]
                + coef[C] * dttable[alt_idx[i]] / coef[AREA])
        s = 0.0
        for k in range(nc):
            c = chan[i, k]
            s += p / (tot[c] - p + noise[c])
        snr_total += s / nc
    cov = dsum * (1.0 - coef[KAPPA] * (M - 1)) / coef[AREA]
    if cov > 1.0:
        cov = 1.0
    n_flags = 0
    for i in range(M):
        n_flags += flags[i]
    rec[row, REC_ITER] = t
    rec[row, REC_U] = u_curr.sum()
    rec[row, REC_PHI] = phi
    rec[row, REC_SNR] = snr_total / M
    rec[row, REC_COV] = cov
    rec[row, REC_FLAGS] = n_flags


@njit(cache=True)
def advance(algo, n_steps, t0, tau, omega, uniforms,
            power_idx, alt_idx, prev_power, prev_alt, flags, u_prev, u_curr,
            chan, noise, ptable, dtable, dttable, coef,
            stride, rec, rec_row, occ, occ_from, settled_only, trace):
    """Run ``n_steps`` iterations in place, starting at iteration ``t0``.

    Returns the next free row of ``rec``. ``occ`` (profile histogram) and
    ``trace`` (per-iteration profile code, -1 when unsettled) are skipped
    when empty.
    """
    M = power_idx.shape[0]
    n_p = ptable.shape[0]
    n_h = dtable.shape[0]
    base = n_p * n_h
    new_u = np.empty(M)
    new_p = np.empty(M, dtype=np.int64)
    new_h = np.empty(M, dtype=np.int64)
    for step in range(n_steps):
        for i in range(M):
            new_p[i] = power_idx[i]
            new_h[i] = alt_idx[i]
        if algo == PBLLA:
            u0 = uniforms[2 * step]
            u1 = uniforms[2 * step + 1]
            flagged = -1
            for i in range(M):
                if flags[i]:
                    flagged = i
                    break
            if flagged < 0:
                i = int(u0 * M)
                if i >= M:
                    i = M - 1
                q, g = _pick_neighbor(power_idx[i], alt_idx[i], n_p, n_h, u1)
                if q >= 0:
                    new_p[i] = q
                    new_h[i] = g
                    flags[i] = 1
            else:
                i = flagged
                if u0 >= keep_probability(u_prev[i], u_curr[i], tau):
                    new_p[i] = prev_power[i]
                    new_h[i] = prev_alt[i]
                flags[i] = 0
        else:
            off = 2 * M * step
            for i in range(M):
                u0 = uniforms[off + 2 * i]
                u1 = uniforms[off + 2 * i + 1]
                if flags[i] == 0:
                    if u0 < omega:
                        q, g = _pick_neighbor(power_idx[i], alt_idx[i], n_p, n_h, u1)
                        if q >= 0:
                            new_p[i] = q
                            new_h[i] = g
                            flags[i] = 1
                else:
                    if u0 >= keep_probability(u_prev[i], u_curr[i], tau):
                        new_p[i] = prev_power[i]
                        new_h[i] = prev_alt[i]
                    flags[i] = 0
        for i in range(M):
            prev_power[i] = power_idx[i]
            prev_alt[i] = alt_idx[i]
            power_idx[i] = new_p[i]
            alt_idx[i] = new_h[i]
        dsum, tot = evaluate(power_idx, alt_idx, chan, noise, ptable, dtable, dttable, coef, new_u)
        for i in range(M):
            u_prev[i] = u_curr[i]
            u_curr[i] = new_u[i]
        t = t0 + step + 1
        if stride > 0 and t % stride == 0:
            _record(rec, rec_row, t, power_idx, alt_idx, chan, noise, ptable, dtable,
                    dttable, coef, u_curr, flags, dsum, tot)
            rec_row += 1
        if occ.shape[0] > 0 or trace.shape[0] > 0:
            settled = True
            if settled_only:
                for i in range(M):
                    if flags[i]:
                        settled = False
                        break
            code = -1
            if settled:
                code = 0
                for i in range(M):
                    code = code * base + power_idx[i] * n_h + alt_idx[i]
            if trace.shape[0] > 0:
                trace[step] = code
            if occ.shape[0] > 0 and settled and t > occ_from:
                occ[code] += 1
    return rec_row


@njit(cache=True)
def record_initial(rec, t, power_idx, alt_idx, chan, noise, ptable, dtable, dttable,
                   coef, u_curr, flags):
    tmp = np.empty(power_idx.shape[0])
    dsum, tot = evaluate(power_idx, alt_idx, chan, noise, ptable, dtable, dttable, coef, tmp)
    _record(rec, 0, t, power_idx, alt_idx, chan, noise, ptable, dtable, dttable,
            coef, u_curr, flags, dsum, tot)
