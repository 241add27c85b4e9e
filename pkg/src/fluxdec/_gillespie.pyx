# cython: boundscheck=False, wraparound=False, cdivision=True
"""Event loop for the exact jump-process simulation.

Transitions are generalised mass-action: transition i fires at rate

    rate_i = coef_i * scale * prod_x (counts_x / scale)^{expo_ix},

changes the integer counts by delta_i, and moves the net-flux counter
flux_idx_i by flux_sign_i.  A transition whose firing would drive any count
negative has rate zero.  Waiting times are inverse-CDF exponentials and the
transition choice is a cumulative scan, consuming exactly two uniforms per
event from the supplied bit generator, so the pure-Python twin in
``_gillespie_py`` reproduces the event sequence bit for bit.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport log1p, pow
from numpy.random cimport bitgen_t

cnp.import_array()


def run(double[::1] coef, double[:, ::1] expo, cnp.int64_t[:, ::1] delta,
        cnp.int64_t[::1] flux_idx, cnp.int64_t[::1] flux_sign,
        double scale, cnp.int64_t[::1] counts0, int n_flux, double t_final,
        object bit_generator, int max_checkpoints):
    cdef int nt = coef.shape[0]
    cdef int k = counts0.shape[0]
    cdef int cap = max_checkpoints

    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy BitGenerator")
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    counts_arr = np.array(counts0, dtype=np.int64)
    flux_arr = np.zeros(n_flux, dtype=np.int64)
    rates_arr = np.empty(nt, dtype=np.float64)
    times_arr = np.empty(cap, dtype=np.float64)
    chist_arr = np.empty((cap, k), dtype=np.int64)
    fhist_arr = np.empty((cap, n_flux), dtype=np.int64)

    cdef cnp.int64_t[::1] counts = counts_arr
    cdef cnp.int64_t[::1] flux = flux_arr
    cdef double[::1] rates = rates_arr
    cdef double[::1] times = times_arr
    cdef cnp.int64_t[:, ::1] chist = chist_arr
    cdef cnp.int64_t[:, ::1] fhist = fhist_arr

    cdef double t = 0.0
    cdef double total, u, v, acc, e
    cdef long long n_events = 0, stride = 1
    cdef int stored = 0, absorbed = 0
    cdef int i, x, half
    cdef double t_absorbed = 0.0

    with bit_generator.lock, nogil:
        while True:
            total = 0.0
            for i in range(nt):
                v = coef[i] * scale
                for x in range(k):
                    e = expo[i, x]
                    if e != 0.0:
                        v *= pow(counts[x] / scale, e)
                for x in range(k):
                    if counts[x] + delta[i, x] < 0:
                        v = 0.0
                        break
                total += v
                rates[i] = total  # cumulative
            if total <= 0.0:
                absorbed = 1
                t_absorbed = t
                break
            u = rng.next_double(rng.state)
            t += -log1p(-u) / total
            if t >= t_final:
                t = t_final
                break
            u = rng.next_double(rng.state)
            v = u * total
            i = 0
            while i < nt - 1 and rates[i] <= v:
                i += 1
            for x in range(k):
                counts[x] += delta[i, x]
            flux[flux_idx[i]] += flux_sign[i]
            n_events += 1
            if n_events % stride == 0:
                if stored == cap:
                    half = 0
                    for x in range(0, stored, 2):
                        times[half] = times[x]
                        chist[half, :] = chist[x, :]
                        fhist[half, :] = fhist[x, :]
                        half += 1
                    stored = half
                    stride *= 2
                    if n_events % stride != 0:
                        continue
                times[stored] = t
                chist[stored, :] = counts[:]
                fhist[stored, :] = flux[:]
                stored += 1

    return (
        times_arr[:stored].copy(),
        chist_arr[:stored].copy(),
        fhist_arr[:stored].copy(),
        counts_arr,
        flux_arr,
        int(n_events),
        bool(absorbed),
        float(t_absorbed),
    )
