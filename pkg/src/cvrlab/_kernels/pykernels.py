"""Pure-Python (numpy) routing kernels.

These are the reference implementations of the three hot kernels; the
compiled backend in _core.pyx mirrors them operation for operation so both
produce bit-identical results:

* tsp_subset_costs: optimal closed-tour cost through every subset of a
  customer list, starting and ending at one depot (Held-Karp over bitmasks).
* tsp_order: optimal visit order for one customer list, tie-broken to the
  lexicographically smallest order among DP-consistent optima.
* best_assignment: scan of all vehicle assignments (each vehicle nonempty)
  in lexicographic order, combining per-vehicle subset costs.

Floating-point convention, shared with every consumer: a tour cost is the
leg distances accumulated left to right (depot -> c1 -> ... -> ck -> depot),
and a multi-vehicle total accumulates per-vehicle costs left to right in
ascending vehicle order. Minima are taken with strict '<' over lexicographic
enumeration so ties resolve to the lexicographically smallest candidate.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def tsp_subset_costs(dist: np.ndarray, depot: int, customers) -> np.ndarray:
    """Optimal closed-tour cost for every subset of `customers`.

    Returns an array of length 2**m indexed by bitmask over the customer
    list (bit j = customers[j]); entry 0 is 0.0 (empty tour).
    """
    customers = list(customers)
    m = len(customers)
    n_masks = 1 << m
    # leg[p, l] = dist(customers[p], customers[l]); start/return legs split out
    leg = np.array([[dist[a, b] for b in customers] for a in customers], dtype=np.float64)
    start = np.array([dist[depot, c] for c in customers], dtype=np.float64)
    ret = np.array([dist[c, depot] for c in customers], dtype=np.float64)

    fwd = np.full((n_masks, m), np.inf, dtype=np.float64)
    for j in range(m):
        fwd[1 << j, j] = start[j]
    for mask in range(1, n_masks):
        if mask & (mask - 1) == 0:
            continue  # singletons already seeded
        for last in range(m):
            bit = 1 << last
            if not mask & bit:
                continue
            # non-members of mask^bit hold inf, so the full-row min equals
            # the min over member predecessors
            fwd[mask, last] = np.min(fwd[mask ^ bit] + leg[:, last])
    closed = np.min(fwd + ret[None, :], axis=1)
    closed[0] = 0.0
    return closed


def tsp_order(dist: np.ndarray, depot: int, customers) -> tuple[float, list[int]]:
    """Optimal closed tour through all of `customers`; returns (cost, order).

    The order is in original node indices and is the lexicographically
    smallest among orders consistent with the DP table that reach the
    optimal cost. The returned cost equals the left-to-right leg sum of the
    returned order bit for bit.
    """
    customers = list(customers)
    m = len(customers)
    if m == 0:
        return 0.0, []
    n_masks = 1 << m
    leg = np.array([[dist[a, b] for b in customers] for a in customers], dtype=np.float64)
    start = np.array([dist[depot, c] for c in customers], dtype=np.float64)
    ret = np.array([dist[c, depot] for c in customers], dtype=np.float64)

    fwd = np.full((n_masks, m), np.inf, dtype=np.float64)
    for j in range(m):
        fwd[1 << j, j] = start[j]
    for mask in range(1, n_masks):
        if mask & (mask - 1) == 0:
            continue
        for last in range(m):
            bit = 1 << last
            if not mask & bit:
                continue
            fwd[mask, last] = np.min(fwd[mask ^ bit] + leg[:, last])

    full = n_masks - 1
    totals = fwd[full] + ret
    opt = float(np.min(totals))

    # good[mask, last]: the prefix state can be extended to a tour of cost
    # exactly opt while staying DP-consistent at every step
    good = np.zeros((n_masks, m), dtype=bool)
    good[full] = totals == opt
    for mask in range(full - 1, 0, -1):
        for last in range(m):
            if not mask & (1 << last):
                continue
            for c in range(m):
                bit = 1 << c
                if mask & bit:
                    continue
                if good[mask | bit, c] and fwd[mask, last] + leg[last, c] == fwd[mask | bit, c]:
                    good[mask, last] = True
                    break

    order: list[int] = []
    mask = 0
    last = -1
    for _ in range(m):
        for c in range(m):
            bit = 1 << c
            if mask & bit:
                continue
            nxt = start[c] if mask == 0 else fwd[mask, last] + leg[last, c]
            if nxt == fwd[mask | bit, c] and good[mask | bit, c]:
                order.append(c)
                mask |= bit
                last = c
                break
        else:  # pragma: no cover - the optimal tour always provides a step
            raise AssertionError("tour reconstruction failed")
    return opt, [customers[c] for c in order]


def best_assignment(
    tsp_costs: np.ndarray, m: int, require_nonempty: bool = False
) -> tuple[float, np.ndarray]:
    """Minimum-cost assignment of m customers to K vehicles.

    tsp_costs is (K, 2**m): per-vehicle optimal closed-tour cost for every
    customer subset. A vehicle left without customers contributes exactly
    0.0 (it never leaves its depot); require_nonempty=True instead rejects
    assignments with idle vehicles. Assignments are enumerated in
    lexicographic order of the digit vector (digit j = vehicle of customer
    j, digit 0 most significant), so the returned argmin is the
    lexicographically smallest optimal assignment. Returns (total, digits).
    """
    n_vehicles = tsp_costs.shape[0]
    codes = np.arange(n_vehicles**m, dtype=np.int64)
    place = n_vehicles ** np.arange(m - 1, -1, -1, dtype=np.int64)
    digits = (codes[:, None] // place[None, :]) % n_vehicles
    pow2 = 1 << np.arange(m, dtype=np.int64)

    masks0 = (digits == 0) @ pow2
    totals = tsp_costs[0][masks0]
    valid = masks0 != 0
    for v in range(1, n_vehicles):
        masks_v = (digits == v) @ pow2
        totals = totals + tsp_costs[v][masks_v]
        valid &= masks_v != 0
    if require_nonempty:
        totals = np.where(valid, totals, np.inf)
    best = int(np.argmin(totals))  # first occurrence = lexicographically smallest
    if require_nonempty and not valid[best]:
        raise ValueError("no assignment leaves every vehicle nonempty")
    return float(totals[best]), digits[best].astype(np.int64)
