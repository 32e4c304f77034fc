"""Pure-Python event loop for the parallel-queue age simulator.

One replication simulates K independent queues fed by split Poisson
streams of monitored (source-1) and background packets.  Each queue holds
one packet in service plus ``cap - 1`` waiting slots; a full queue either
preempts service (single-slot queues) or replaces its last waiting packet.
In-service packets race an exponential service timer against an optional
exponential loss timer, both redrawn whenever a new packet starts service.

Every packet carries a tag: the effective generation time its delivery
would install at the monitor.  Source-1 packets are tagged with their own
arrival time; background packets inherit the monitor's current value when
they start service (or preempt into it) and their predecessor's tag when
they queue behind it.  A delivery sets the monitor to the served packet's
tag unconditionally, so stale deliveries are applied exactly as the age
recursion prescribes.  The age ``t - monitor`` is integrated in closed
form between events, starting after the warmup cutoff.

The draw order from the replication's generator is part of the engine
contract (the compiled kernel follows it draw for draw): at start, one
interarrival per queue and packet class in queue order, source-1 first;
on each arrival, the next interarrival of the same class first, then — if
the packet starts service — its service timer and, only when the loss
rate is positive, its loss timer; after a delivery or loss that leaves
the queue nonempty, the promoted packet's service then loss timer.   All
draws are unit exponentials scaled by the inverse rate.
"""

from __future__ import annotations

import math

INF = math.inf

ARRIVAL_SRC1 = "arrival-src1"
ARRIVAL_OTHER = "arrival-other"
DELIVERY = "delivery"
LOSS = "loss"
PREEMPT = "preempt"
REPLACE = "replace"


def run_replication(
    lam1,
    lamo,
    mu,
    theta,
    cap,
    horizon,
    warmup_time,
    rng,
    record=None,
    max_events=None,
):
    """Simulate one replication; returns (aoi, mean_occupancy, counts).

    ``counts`` is the tuple (arrivals, deliveries, losses, preemptions,
    replacements, in_flight).  ``aoi`` is NaN when no packet was delivered
    over the whole horizon.  When ``record`` is a list, events are appended
    to it as ``(time, queue, kind)`` until ``max_events`` entries exist,
    after which the replication stops early.
    """
    exp = rng.standard_exponential
    k = len(mu)
    t1 = [INF] * k
    to = [INF] * k
    ts = [INF] * k
    tl = [INF] * k
    for j in range(k):
        if lam1[j] > 0.0:
            t1[j] = exp() / lam1[j]
        if lamo[j] > 0.0:
            to[j] = exp() / lamo[j]
    tags = [[0.0] * cap[j] for j in range(k)]
    n = [0] * k
    total = 0
    monitor = 0.0
    t = 0.0
    area = 0.0
    occ_area = 0.0
    n_arrival = n_delivery = n_loss = n_preempt = n_replace = 0

    while True:
        if max_events is not None and record is not None and len(record) >= max_events:
            break
        when = horizon
        j = -1
        kind = -1
        for q in range(k):
            if t1[q] < when:
                when, j, kind = t1[q], q, 0
            if to[q] < when:
                when, j, kind = to[q], q, 1
            if ts[q] < when:
                when, j, kind = ts[q], q, 2
            if tl[q] < when:
                when, j, kind = tl[q], q, 3
        if when > warmup_time:
            start = t if t > warmup_time else warmup_time
            area += (when - start) * ((start + when) / 2.0 - monitor)
            occ_area += total * (when - start)
        t = when
        if j < 0:
            break
        q = tags[j]
        if kind == 0:
            n_arrival += 1
            t1[j] = t + exp() / lam1[j]
            if n[j] == 0:
                q[0] = t
                n[j] = 1
                total += 1
                ts[j] = t + exp() / mu[j] if mu[j] > 0.0 else INF
                tl[j] = t + exp() / theta[j] if theta[j] > 0.0 else INF
                if record is not None:
                    record.append((t, j, ARRIVAL_SRC1))
            elif n[j] < cap[j]:
                q[n[j]] = t
                n[j] += 1
                total += 1
                if record is not None:
                    record.append((t, j, ARRIVAL_SRC1))
            elif cap[j] == 1:
                n_preempt += 1
                q[0] = t
                ts[j] = t + exp() / mu[j] if mu[j] > 0.0 else INF
                tl[j] = t + exp() / theta[j] if theta[j] > 0.0 else INF
                if record is not None:
                    record.append((t, j, ARRIVAL_SRC1))
                    record.append((t, j, PREEMPT))
            else:
                n_replace += 1
                q[cap[j] - 1] = t
                if record is not None:
                    record.append((t, j, ARRIVAL_SRC1))
                    record.append((t, j, REPLACE))
        elif kind == 1:
            n_arrival += 1
            to[j] = t + exp() / lamo[j]
            if n[j] == 0:
                q[0] = monitor
                n[j] = 1
                total += 1
                ts[j] = t + exp() / mu[j] if mu[j] > 0.0 else INF
                tl[j] = t + exp() / theta[j] if theta[j] > 0.0 else INF
                if record is not None:
                    record.append((t, j, ARRIVAL_OTHER))
            elif n[j] < cap[j]:
                q[n[j]] = q[n[j] - 1]
                n[j] += 1
                total += 1
                if record is not None:
                    record.append((t, j, ARRIVAL_OTHER))
            elif cap[j] == 1:
                n_preempt += 1
                q[0] = monitor
                ts[j] = t + exp() / mu[j] if mu[j] > 0.0 else INF
                tl[j] = t + exp() / theta[j] if theta[j] > 0.0 else INF
                if record is not None:
                    record.append((t, j, ARRIVAL_OTHER))
                    record.append((t, j, PREEMPT))
            else:
                n_replace += 1
                q[cap[j] - 1] = q[cap[j] - 2]
                if record is not None:
                    record.append((t, j, ARRIVAL_OTHER))
                    record.append((t, j, REPLACE))
        elif kind == 2:
            n_delivery += 1
            monitor = q[0]
            n[j] -= 1
            total -= 1
            for m in range(n[j]):
                q[m] = q[m + 1]
            if n[j] > 0:
                ts[j] = t + exp() / mu[j] if mu[j] > 0.0 else INF
                tl[j] = t + exp() / theta[j] if theta[j] > 0.0 else INF
            else:
                ts[j] = INF
                tl[j] = INF
            if record is not None:
                record.append((t, j, DELIVERY))
        else:
            n_loss += 1
            n[j] -= 1
            total -= 1
            for m in range(n[j]):
                q[m] = q[m + 1]
            if n[j] > 0:
                ts[j] = t + exp() / mu[j] if mu[j] > 0.0 else INF
                tl[j] = t + exp() / theta[j] if theta[j] > 0.0 else INF
            else:
                ts[j] = INF
                tl[j] = INF
            if record is not None:
                record.append((t, j, LOSS))

    span = horizon - warmup_time
    aoi = area / span if n_delivery > 0 else math.nan
    counts = (n_arrival, n_delivery, n_loss, n_preempt, n_replace, total)
    return aoi, occ_area / span, counts
