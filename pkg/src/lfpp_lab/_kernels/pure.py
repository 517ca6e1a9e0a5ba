"""Pure-Python shortest-path kernel, the fallback for the compiled extension.

Semantics must match _gridpath.pyx bit for bit: same neighbor order, same
edge-weight arithmetic (step * (mult[u] * mult[v])), strict-improvement
predecessor updates, and (distance, vertex index) lexicographic tie-breaking.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

IMPL = "pure"

_SQRT2 = math.sqrt(2.0)


def dijkstra(mult, n, spacing, eight, mask, sides, sources, targets, need_pred):
    """Label-setting search on the weighted grid graph.

    mult: flat float64 multipliers, vertex (i, j) at index i*n + j.
    mask: flat uint8, 1 = vertex usable.
    sides: flat int8 cut labels; edges joining +1 to -1 are severed.
    sources start at distance 0.  If targets is nonempty the search stops when
    the first target settles; returns (dist, pred, hit).
    """
    size = n * n
    dist = np.full(size, np.inf)
    pred = np.full(size, -1, dtype=np.int64) if need_pred else None
    settled = np.zeros(size, dtype=bool)
    is_target = np.zeros(size, dtype=bool)
    if len(targets):
        is_target[targets] = True

    offsets = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    steps = [spacing] * 4
    if eight:
        offsets += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
        steps += [spacing * _SQRT2] * 4

    heap = []
    for s in sources:
        s = int(s)
        if dist[s] > 0.0:
            dist[s] = 0.0
            heapq.heappush(heap, (0.0, s))

    hit = -1
    while heap:
        d, u = heapq.heappop(heap)
        if settled[u]:
            continue
        settled[u] = True
        if is_target[u]:
            hit = u
            break
        ui, uj = divmod(u, n)
        mu = mult[u]
        su = sides[u]
        for (di, dj), step in zip(offsets, steps):
            vi = ui + di
            vj = uj + dj
            if not (0 <= vi < n and 0 <= vj < n):
                continue
            v = vi * n + vj
            if not mask[v] or settled[v]:
                continue
            if su * sides[v] == -1:
                continue
            nd = d + step * (mu * mult[v])
            if nd < dist[v]:
                dist[v] = nd
                if need_pred:
                    pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred, hit
