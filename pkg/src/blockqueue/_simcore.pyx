# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled replication kernel.

Bit-compatible twin of _simcore_py.simulate: identical event ordering,
tie rules, and random-number consumption. The generator's raw
next_double is the same primitive Generator.random() consumes, so both
kernels see the same uniform stream. Keep the two files in lockstep
when changing either.

Discipline: a service (block assembly) runs whenever at least one
transaction is present and starts when an arrival finds the system
empty. Block content is settled at commit time: at each completion the
min(n, b) highest-priority transactions present depart, FIFO within a
class, so a late high-priority arrival can claim space ahead of
earlier low-priority ones. If transactions remain, the next service
starts immediately.
"""

from libc.math cimport log1p, INFINITY
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t

cnp.import_array()


cdef inline double _exp_draw(bitgen_t *rng, double rate) noexcept nogil:
    cdef double u = rng.next_double(rng.state)
    return -log1p(-u) / rate


cdef inline double _service_draw(bitgen_t *rng, int kind, double p1, long p2) noexcept nogil:
    cdef double s
    cdef long j
    if kind == 0:
        return _exp_draw(rng, p1)
    if kind == 1:
        return p1
    s = 0.0
    for j in range(p2):
        s += _exp_draw(rng, p1)
    return s


def simulate(gen, rates, long b, int kind, double p1, long p2,
             long warmup, long horizon, long queue_limit):
    """Run one replication; see des.run_replication for the wrapper.

    Returns (counts, sums, area, idle_area, elapsed, overflow,
    arrivals, departures, in_system).
    """
    capsule = gen.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a numpy Generator with a BitGenerator capsule")
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef long c = len(rates)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rate_arr = np.asarray(rates, dtype=np.float64)
    cdef double[::1] rate_v = rate_arr

    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts_arr = np.zeros(c, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sums_arr = np.zeros(c, dtype=np.float64)
    cdef long[::1] counts = counts_arr
    cdef double[::1] sums = sums_arr

    cdef double *next_arrival = <double *> malloc(c * sizeof(double))
    cdef long cap = queue_limit + 2
    cdef double *qbuf = <double *> malloc(c * cap * sizeof(double))
    cdef long *qhead = <long *> malloc(c * sizeof(long))
    cdef long *qsize = <long *> malloc(c * sizeof(long))
    if next_arrival == NULL or qbuf == NULL or qhead == NULL or qsize == NULL:
        free(next_arrival); free(qbuf); free(qhead); free(qsize)
        raise MemoryError("replication buffers")

    cdef long i, ai, remaining
    cdef double t, dt, s, amin, arrived
    cdef bint busy = False
    cdef double completion = INFINITY
    cdef double t_prev = 0.0
    cdef long n_in_system = 0
    cdef long confirmed = 0
    cdef long stop_at = warmup + horizon
    cdef bint measuring = warmup == 0
    cdef double window_start = 0.0
    cdef double window_end = 0.0
    cdef double area = 0.0
    cdef double idle_area = 0.0
    cdef long arrivals = 0
    cdef long departures = 0
    cdef int overflow = 0

    with nogil:
        for i in range(c):
            next_arrival[i] = _exp_draw(rng, rate_v[i])
            qhead[i] = 0
            qsize[i] = 0

        while True:
            amin = INFINITY
            ai = -1
            for i in range(c):
                if next_arrival[i] < amin:
                    amin = next_arrival[i]
                    ai = i

            if busy and completion <= amin:
                t = completion
                if measuring:
                    dt = t - t_prev
                    area += n_in_system * dt
                t_prev = t

                remaining = b
                for i in range(c):
                    while remaining > 0 and qsize[i] > 0:
                        arrived = qbuf[i * cap + qhead[i]]
                        qhead[i] += 1
                        if qhead[i] == cap:
                            qhead[i] = 0
                        qsize[i] -= 1
                        remaining -= 1
                        confirmed += 1
                        departures += 1
                        n_in_system -= 1
                        if warmup < confirmed and confirmed <= stop_at:
                            counts[i] += 1
                            sums[i] += t - arrived

                if not measuring and confirmed >= warmup:
                    measuring = True
                    window_start = t
                    t_prev = t
                if confirmed >= stop_at:
                    window_end = t
                    break

                if n_in_system > 0:
                    s = _service_draw(rng, kind, p1, p2)
                    completion = t + s
                else:
                    busy = False
                    completion = INFINITY
            else:
                t = amin
                if measuring:
                    dt = t - t_prev
                    area += n_in_system * dt
                    if not busy:
                        idle_area += dt
                t_prev = t

                arrivals += 1
                n_in_system += 1
                next_arrival[ai] = t + _exp_draw(rng, rate_v[ai])
                qbuf[ai * cap + ((qhead[ai] + qsize[ai]) % cap)] = t
                qsize[ai] += 1

                if not busy:
                    s = _service_draw(rng, kind, p1, p2)
                    completion = t + s
                    busy = True
                elif n_in_system > queue_limit:
                    overflow = 1
                    window_end = t if measuring else window_start
                    break

    free(next_arrival)
    free(qbuf)
    free(qhead)
    free(qsize)

    return (
        counts_arr,
        sums_arr,
        area,
        idle_area,
        window_end - window_start,
        overflow,
        arrivals,
        departures,
        n_in_system,
    )
