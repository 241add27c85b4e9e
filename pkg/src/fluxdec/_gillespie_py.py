"""Pure-Python twin of the compiled event loop in ``_gillespie.pyx``.

Same rate law, same two-uniforms-per-event consumption, same cumulative-scan
transition choice and the same checkpoint thinning, so for a given bit
generator the event sequence matches the compiled kernel bit for bit.  Used
when the extension is unavailable or when ``FLUXDEC_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import math

import numpy as np


def run(coef, expo, delta, flux_idx, flux_sign, scale, counts0, n_flux,
        t_final, bit_generator, max_checkpoints):
    gen = np.random.Generator(bit_generator)
    nt, k = expo.shape
    cap = max_checkpoints
    counts = counts0.astype(np.int64).copy()
    flux = np.zeros(n_flux, dtype=np.int64)
    times = np.empty(cap)
    chist = np.empty((cap, k), dtype=np.int64)
    fhist = np.empty((cap, n_flux), dtype=np.int64)
    base = coef * scale
    feasible_cols = [np.flatnonzero(expo[:, x]) for x in range(k)]

    t = 0.0
    n_events = 0
    stride = 1
    stored = 0
    absorbed = False
    t_absorbed = 0.0

    while True:
        rates = base.copy()
        for x in range(k):
            cols = feasible_cols[x]
            if cols.size:
                rates[cols] *= (counts[x] / scale) ** expo[cols, x]
        rates[np.any(counts[None, :] + delta < 0, axis=1)] = 0.0
        cum = np.cumsum(rates)
        total = cum[-1]
        if total <= 0.0:
            absorbed = True
            t_absorbed = t
            break
        u = gen.random()
        t += -math.log1p(-u) / total
        if t >= t_final:
            t = t_final
            break
        u = gen.random()
        i = min(int(np.searchsorted(cum, u * total, side="right")), nt - 1)
        counts += delta[i]
        flux[flux_idx[i]] += flux_sign[i]
        n_events += 1
        if n_events % stride == 0:
            if stored == cap:
                keep = np.arange(0, stored, 2)
                half = keep.size
                times[:half] = times[keep]
                chist[:half] = chist[keep]
                fhist[:half] = fhist[keep]
                stored = half
                stride *= 2
                if n_events % stride != 0:
                    continue
            times[stored] = t
            chist[stored] = counts
            fhist[stored] = flux
            stored += 1

    return (
        times[:stored].copy(),
        chist[:stored].copy(),
        fhist[:stored].copy(),
        counts,
        flux,
        int(n_events),
        bool(absorbed),
        float(t_absorbed),
    )
