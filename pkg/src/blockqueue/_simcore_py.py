"""Pure-python replication kernel.

Bit-compatible twin of the compiled kernel in _simcore.pyx: identical
event ordering, identical tie rules, and identical random-number
consumption, drawing through Generator.random() which consumes exactly
one next_double per call, the same primitive the compiled kernel calls
directly. Keep the two files in lockstep when changing either.

Discipline: a service (block assembly) runs whenever at least one
transaction is present and starts when an arrival finds the system
empty. Block content is settled at commit time: at each completion the
min(n, b) highest-priority transactions present depart, FIFO within a
class, so a late high-priority arrival can claim space ahead of
earlier low-priority ones. Lower classes are therefore invisible to
higher ones except through the phase of the service in progress. If
transactions remain, the next service starts immediately.

Service kinds: 0 exponential (p1 = rate), 1 deterministic (p1 = delay),
2 Erlang (p1 = stage rate, p2 = stage count).
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np


def simulate(gen, rates, b, kind, p1, p2, warmup, horizon, queue_limit):
    """Run one replication; see des.run_replication for the wrapper.

    Returns (counts, sums, area, idle_area, elapsed, overflow,
    arrivals, departures, in_system).
    """
    rnd = gen.random
    c = len(rates)
    rates = [float(r) for r in rates]
    inf = math.inf

    # next absolute arrival time per class; one draw per class, in
    # class order, before anything else
    next_arrival = [-math.log1p(-rnd()) / rates[i] for i in range(c)]

    queues = [deque() for _ in range(c)]

    busy = False
    completion = inf
    t_prev = 0.0
    n_in_system = 0

    counts = [0] * c
    sums = [0.0] * c
    confirmed = 0
    stop_at = warmup + horizon
    measuring = warmup == 0
    window_start = 0.0
    window_end = 0.0
    area = 0.0
    idle_area = 0.0
    arrivals = 0
    departures = 0
    overflow = 0

    while True:
        amin = inf
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
                qi = queues[i]
                while remaining > 0 and qi:
                    arrived = qi.popleft()
                    remaining -= 1
                    confirmed += 1
                    departures += 1
                    n_in_system -= 1
                    if warmup < confirmed <= stop_at:
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
                if kind == 0:
                    s = -math.log1p(-rnd()) / p1
                elif kind == 1:
                    s = p1
                else:
                    s = 0.0
                    for _ in range(p2):
                        s += -math.log1p(-rnd()) / p1
                completion = t + s
            else:
                busy = False
                completion = inf
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
            next_arrival[ai] = t + (-math.log1p(-rnd()) / rates[ai])
            queues[ai].append(t)

            if not busy:
                if kind == 0:
                    s = -math.log1p(-rnd()) / p1
                elif kind == 1:
                    s = p1
                else:
                    s = 0.0
                    for _ in range(p2):
                        s += -math.log1p(-rnd()) / p1
                completion = t + s
                busy = True
            elif n_in_system > queue_limit:
                overflow = 1
                window_end = t if measuring else window_start
                break

    elapsed = window_end - window_start
    return (
        np.array(counts, dtype=np.int64),
        np.array(sums, dtype=np.float64),
        area,
        idle_area,
        elapsed,
        overflow,
        arrivals,
        departures,
        n_in_system,
    )
