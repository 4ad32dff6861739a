# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled routing kernels.

Mirrors pykernels.py operation for operation: identical leg-summation
order (left to right in visit order, vehicles ascending), identical strict
'<' minima over lexicographic enumeration. Both backends must return
bit-identical results; test_kernels.py asserts it.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

BACKEND_NAME = "compiled"


def tsp_subset_costs(dist, depot, customers):
    """Optimal closed-tour cost for every subset of `customers`.

    Returns an array of length 2**m indexed by bitmask over the customer
    list (bit j = customers[j]); entry 0 is 0.0.
    """
    cdef cnp.ndarray[double, ndim=2] dist_arr = np.ascontiguousarray(dist, dtype=np.float64)
    cdef cnp.ndarray[long long, ndim=1] cust = np.asarray(list(customers), dtype=np.int64)
    cdef int m = cust.shape[0]
    cdef long long n_masks = 1LL << m
    cdef int dep = depot

    cdef cnp.ndarray[double, ndim=2] leg = np.empty((m, m), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] start = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ret = np.empty(m, dtype=np.float64)
    cdef int a, b
    for a in range(m):
        start[a] = dist_arr[dep, cust[a]]
        ret[a] = dist_arr[cust[a], dep]
        for b in range(m):
            leg[a, b] = dist_arr[cust[a], cust[b]]

    cdef cnp.ndarray[double, ndim=2] fwd = np.full((n_masks, m), INFINITY, dtype=np.float64)
    cdef long long mask, pmask, bit
    cdef int last, prev
    cdef double best, cand
    for last in range(m):
        fwd[1LL << last, last] = start[last]
    for mask in range(1, n_masks):
        if mask & (mask - 1) == 0:
            continue
        for last in range(m):
            bit = 1LL << last
            if not mask & bit:
                continue
            pmask = mask ^ bit
            best = INFINITY
            for prev in range(m):
                if not pmask & (1LL << prev):
                    continue
                cand = fwd[pmask, prev] + leg[prev, last]
                if cand < best:
                    best = cand
            fwd[mask, last] = best

    cdef cnp.ndarray[double, ndim=1] closed = np.empty(n_masks, dtype=np.float64)
    closed[0] = 0.0
    for mask in range(1, n_masks):
        best = INFINITY
        for last in range(m):
            if not mask & (1LL << last):
                continue
            cand = fwd[mask, last] + ret[last]
            if cand < best:
                best = cand
        closed[mask] = best
    return closed


def tsp_order(dist, depot, customers):
    """Optimal closed tour through all of `customers`; returns (cost, order).

    Order tie-break matches pykernels.tsp_order: lexicographically smallest
    among DP-consistent optimal orders.
    """
    cdef cnp.ndarray[double, ndim=2] dist_arr = np.ascontiguousarray(dist, dtype=np.float64)
    cdef cnp.ndarray[long long, ndim=1] cust = np.asarray(list(customers), dtype=np.int64)
    cdef int m = cust.shape[0]
    if m == 0:
        return 0.0, []
    cdef long long n_masks = 1LL << m
    cdef int dep = depot

    cdef cnp.ndarray[double, ndim=2] leg = np.empty((m, m), dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] start = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ret = np.empty(m, dtype=np.float64)
    cdef int a, b
    for a in range(m):
        start[a] = dist_arr[dep, cust[a]]
        ret[a] = dist_arr[cust[a], dep]
        for b in range(m):
            leg[a, b] = dist_arr[cust[a], cust[b]]

    cdef cnp.ndarray[double, ndim=2] fwd = np.full((n_masks, m), INFINITY, dtype=np.float64)
    cdef long long mask, pmask, bit
    cdef int last, prev, c
    cdef double best, cand
    for last in range(m):
        fwd[1LL << last, last] = start[last]
    for mask in range(1, n_masks):
        if mask & (mask - 1) == 0:
            continue
        for last in range(m):
            bit = 1LL << last
            if not mask & bit:
                continue
            pmask = mask ^ bit
            best = INFINITY
            for prev in range(m):
                if not pmask & (1LL << prev):
                    continue
                cand = fwd[pmask, prev] + leg[prev, last]
                if cand < best:
                    best = cand
            fwd[mask, last] = best

    cdef long long full = n_masks - 1
    cdef double opt = INFINITY
    for last in range(m):
        cand = fwd[full, last] + ret[last]
        if cand < opt:
            opt = cand

    cdef cnp.ndarray[cnp.uint8_t, ndim=2] good = np.zeros((n_masks, m), dtype=np.uint8)
    for last in range(m):
        if fwd[full, last] + ret[last] == opt:
            good[full, last] = 1
    for mask in range(full - 1, 0, -1):
        for last in range(m):
            if not mask & (1LL << last):
                continue
            for c in range(m):
                bit = 1LL << c
                if mask & bit:
                    continue
                if good[mask | bit, c] and fwd[mask, last] + leg[last, c] == fwd[mask | bit, c]:
                    good[mask, last] = 1
                    break

    order = []
    mask = 0
    last = -1
    cdef int step
    cdef double nxt
    for step in range(m):
        for c in range(m):
            bit = 1LL << c
            if mask & bit:
                continue
            nxt = start[c] if mask == 0 else fwd[mask, last] + leg[last, c]
            if nxt == fwd[mask | bit, c] and good[mask | bit, c]:
                order.append(int(cust[c]))
                mask |= bit
                last = c
                break
        else:
            raise AssertionError("tour reconstruction failed")
    return opt, order


def best_assignment(tsp_costs, m, require_nonempty=False):
    """Minimum-cost assignment; see pykernels.best_assignment.

    Enumerates digit vectors by odometer in the same lexicographic order as
    the fallback (digit 0 most significant), strict '<' argmin.
    """
    cdef cnp.ndarray[double, ndim=2] costs = np.ascontiguousarray(tsp_costs, dtype=np.float64)
    cdef int n_vehicles = costs.shape[0]
    cdef int mm = m
    cdef bint nonempty = require_nonempty
    cdef long long n_codes = 1
    cdef int j, v
    for j in range(mm):
        n_codes *= n_vehicles

    cdef cnp.ndarray[long long, ndim=1] digits = np.zeros(mm, dtype=np.int64)
    cdef cnp.ndarray[long long, ndim=1] masks = np.zeros(n_vehicles, dtype=np.int64)
    cdef cnp.ndarray[long long, ndim=1] counts = np.zeros(n_vehicles, dtype=np.int64)
    # code 0: every customer on vehicle 0
    masks[0] = (1LL << mm) - 1
    counts[0] = mm
    cdef int n_empty = n_vehicles - 1

    cdef double best_total = INFINITY
    cdef long long best_code = -1
    cdef long long code
    cdef double total
    cdef long long bit
    cdef int dig
    for code in range(n_codes):
        if code > 0:
            # odometer increment on the least significant digit (customer m-1)
            j = mm - 1
            while digits[j] == n_vehicles - 1:
                bit = 1LL << j
                dig = digits[j]
                masks[dig] ^= bit
                counts[dig] -= 1
                if counts[dig] == 0:
                    n_empty += 1
                if counts[0] == 0:
                    n_empty -= 1
                masks[0] |= bit
                counts[0] += 1
                digits[j] = 0
                j -= 1
            bit = 1LL << j
            dig = digits[j]
            masks[dig] ^= bit
            counts[dig] -= 1
            if counts[dig] == 0:
                n_empty += 1
            if counts[dig + 1] == 0:
                n_empty -= 1
            masks[dig + 1] |= bit
            counts[dig + 1] += 1
            digits[j] = dig + 1
        if nonempty and n_empty:
            continue
        total = 0.0
        for v in range(n_vehicles):
            total += costs[v, masks[v]]
        if total < best_total:
            best_total = total
            best_code = code

    if best_code < 0:
        raise ValueError("no assignment leaves every vehicle nonempty")
    out = np.empty(mm, dtype=np.int64)
    code = best_code
    for j in range(mm - 1, -1, -1):
        out[j] = code % n_vehicles
        code //= n_vehicles
    return best_total, out
