# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event loop mirroring ``aoiq.sim._engine.run_replication``.

Draw-for-draw identical to the Python engine: it consumes the same
NumPy bit generator through the C distributions API, performs the same
unit-exponential draws in the same order, and accumulates the age area
with the same floating-point expressions (the build disables fused
multiply-adds), so both engines produce bit-identical replications.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdlib cimport free, malloc
from libc.math cimport INFINITY, NAN

from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_exponential


def run_replication(
    double[::1] lam1,
    double[::1] lamo,
    double[::1] mu,
    double[::1] theta,
    long[::1] cap,
    double horizon,
    double warmup_time,
    object rng,
):
    """Simulate one replication; returns (aoi, mean_occupancy, counts)."""
    cdef bitgen_t *bg = <bitgen_t *> PyCapsule_GetPointer(
        rng.bit_generator.capsule, "BitGenerator"
    )
    cdef Py_ssize_t k = mu.shape[0]
    cdef long max_cap = 0
    cdef Py_ssize_t q
    for q in range(k):
        if cap[q] > max_cap:
            max_cap = cap[q]

    cdef double *t1 = <double *> malloc(k * sizeof(double))
    cdef double *to = <double *> malloc(k * sizeof(double))
    cdef double *ts = <double *> malloc(k * sizeof(double))
    cdef double *tl = <double *> malloc(k * sizeof(double))
    cdef double *tags = <double *> malloc(k * max_cap * sizeof(double))
    cdef long *n = <long *> malloc(k * sizeof(long))
    if t1 == NULL or to == NULL or ts == NULL or tl == NULL or tags == NULL or n == NULL:
        free(t1); free(to); free(ts); free(tl); free(tags); free(n)
        raise MemoryError

    cdef double monitor = 0.0, t = 0.0, area = 0.0, occ_area = 0.0
    cdef double when, start, span, aoi
    cdef long total = 0
    cdef long n_arrival = 0, n_delivery = 0, n_loss = 0
    cdef long n_preempt = 0, n_replace = 0
    cdef Py_ssize_t j, m
    cdef int kind
    cdef double *row

    with nogil:
        for q in range(k):
            t1[q] = INFINITY
            to[q] = INFINITY
            ts[q] = INFINITY
            tl[q] = INFINITY
            n[q] = 0
            for m in range(max_cap):
                tags[q * max_cap + m] = 0.0
        for q in range(k):
            if lam1[q] > 0.0:
                t1[q] = random_standard_exponential(bg) / lam1[q]
            if lamo[q] > 0.0:
                to[q] = random_standard_exponential(bg) / lamo[q]

        while True:
            when = horizon
            j = -1
            kind = -1
            for q in range(k):
                if t1[q] < when:
                    when = t1[q]; j = q; kind = 0
                if to[q] < when:
                    when = to[q]; j = q; kind = 1
                if ts[q] < when:
                    when = ts[q]; j = q; kind = 2
                if tl[q] < when:
                    when = tl[q]; j = q; kind = 3
            if when > warmup_time:
                start = t if t > warmup_time else warmup_time
                area += (when - start) * ((start + when) / 2.0 - monitor)
                occ_area += total * (when - start)
            t = when
            if j < 0:
                break
            row = tags + j * max_cap
            if kind == 0:
                n_arrival += 1
                t1[j] = t + random_standard_exponential(bg) / lam1[j]
                if n[j] == 0:
                    row[0] = t
                    n[j] = 1
                    total += 1
                    ts[j] = t + random_standard_exponential(bg) / mu[j] if mu[j] > 0.0 else INFINITY
                    tl[j] = t + random_standard_exponential(bg) / theta[j] if theta[j] > 0.0 else INFINITY
                elif n[j] < cap[j]:
                    row[n[j]] = t
                    n[j] += 1
                    total += 1
                elif cap[j] == 1:
                    n_preempt += 1
                    row[0] = t
                    ts[j] = t + random_standard_exponential(bg) / mu[j] if mu[j] > 0.0 else INFINITY
                    tl[j] = t + random_standard_exponential(bg) / theta[j] if theta[j] > 0.0 else INFINITY
                else:
                    n_replace += 1
                    row[cap[j] - 1] = t
            elif kind == 1:
                n_arrival += 1
                to[j] = t + random_standard_exponential(bg) / lamo[j]
                if n[j] == 0:
                    row[0] = monitor
                    n[j] = 1
                    total += 1
                    ts[j] = t + random_standard_exponential(bg) / mu[j] if mu[j] > 0.0 else INFINITY
                    tl[j] = t + random_standard_exponential(bg) / theta[j] if theta[j] > 0.0 else INFINITY
                elif n[j] < cap[j]:
                    row[n[j]] = row[n[j] - 1]
                    n[j] += 1
                    total += 1
                elif cap[j] == 1:
                    n_preempt += 1
                    row[0] = monitor
                    ts[j] = t + random_standard_exponential(bg) / mu[j] if mu[j] > 0.0 else INFINITY
                    tl[j] = t + random_standard_exponential(bg) / theta[j] if theta[j] > 0.0 else INFINITY
                else:
                    n_replace += 1
                    row[cap[j] - 1] = row[cap[j] - 2]
            elif kind == 2:
                n_delivery += 1
                monitor = row[0]
                n[j] -= 1
                total -= 1
                for m in range(n[j]):
                    row[m] = row[m + 1]
                if n[j] > 0:
                    ts[j] = t + random_standard_exponential(bg) / mu[j] if mu[j] > 0.0 else INFINITY
                    tl[j] = t + random_standard_exponential(bg) / theta[j] if theta[j] > 0.0 else INFINITY
                else:
                    ts[j] = INFINITY
                    tl[j] = INFINITY
            else:
                n_loss += 1
                n[j] -= 1
                total -= 1
                for m in range(n[j]):
                    row[m] = row[m + 1]
                if n[j] > 0:
                    ts[j] = t + random_standard_exponential(bg) / mu[j] if mu[j] > 0.0 else INFINITY
                    tl[j] = t + random_standard_exponential(bg) / theta[j] if theta[j] > 0.0 else INFINITY
                else:
                    ts[j] = INFINITY
                    tl[j] = INFINITY

    free(t1); free(to); free(ts); free(tl); free(tags)
    span = horizon - warmup_time
    aoi = area / span if n_delivery > 0 else NAN
    counts = (n_arrival, n_delivery, n_loss, n_preempt, n_replace, total)
    free(n)
    return aoi, occ_area / span, counts
