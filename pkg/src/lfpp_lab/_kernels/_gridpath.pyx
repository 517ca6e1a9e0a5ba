# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled shortest-path kernel for weighted grid graphs.

Indexed binary heap (decrease-key) with (distance, vertex) lexicographic
ordering, so settle order and tie-breaking are fully deterministic and match
the pure-Python fallback exactly.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport free, malloc

cnp.import_array()

IMPL = "compiled"

cdef inline bint _less(double da, long va, double db, long vb) nogil:
    if da != db:
        return da < db
    return va < vb


cdef void _sift_up(double* dist, long* heap, long* pos, long k) nogil:
    cdef long parent, hv, hp
    while k > 0:
        parent = (k - 1) >> 1
        hv = heap[k]
        hp = heap[parent]
        if _less(dist[hv], hv, dist[hp], hp):
            heap[k] = hp
            heap[parent] = hv
            pos[hp] = k
            pos[hv] = parent
            k = parent
        else:
            break


cdef void _sift_down(double* dist, long* heap, long* pos, long size, long k) nogil:
    cdef long child, right, hv, hc
    while True:
        child = 2 * k + 1
        if child >= size:
            break
        right = child + 1
        if right < size and _less(dist[heap[right]], heap[right],
                                  dist[heap[child]], heap[child]):
            child = right
        hv = heap[k]
        hc = heap[child]
        if _less(dist[hc], hc, dist[hv], hv):
            heap[k] = hc
            heap[child] = hv
            pos[hc] = k
            pos[hv] = child
            k = child
        else:
            break


def dijkstra(cnp.ndarray[cnp.float64_t, ndim=1] mult,
             long n,
             double spacing,
             bint eight,
             cnp.ndarray[cnp.uint8_t, ndim=1] mask,
             cnp.ndarray[cnp.int8_t, ndim=1] sides,
             cnp.ndarray[cnp.int64_t, ndim=1] sources,
             cnp.ndarray[cnp.int64_t, ndim=1] targets,
             bint need_pred):
    cdef long size = n * n
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dist_arr = np.full(size, np.inf)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pred_arr = np.full(
        size, -1, dtype=np.int64) if need_pred else np.empty(0, dtype=np.int64)
    cdef double* dist = <double*> dist_arr.data
    cdef long* pred = <long*> pred_arr.data if need_pred else NULL

    cdef double* mu = <double*> mult.data
    cdef unsigned char* msk = <unsigned char*> mask.data
    cdef signed char* sid = <signed char*> sides.data

    cdef unsigned char* is_target = <unsigned char*> malloc(size)
    cdef unsigned char* settled = <unsigned char*> malloc(size)
    cdef long* heap = <long*> malloc(size * sizeof(long))
    cdef long* pos = <long*> malloc(size * sizeof(long))
    if is_target == NULL or settled == NULL or heap == NULL or pos == NULL:
        free(is_target); free(settled); free(heap); free(pos)
        raise MemoryError()

    cdef long i, u, v, ui, uj, vi, vj, hsize, hit, last
    cdef double d, nd, step, m_u
    cdef signed char s_u
    cdef double sq2 = spacing * sqrt(2.0)
    cdef long n_off = 8 if eight else 4
    cdef long[8] off_i
    cdef long[8] off_j
    cdef double[8] off_step
    off_i[0] = -1; off_j[0] = 0;  off_step[0] = spacing
    off_i[1] = 1;  off_j[1] = 0;  off_step[1] = spacing
    off_i[2] = 0;  off_j[2] = -1; off_step[2] = spacing
    off_i[3] = 0;  off_j[3] = 1;  off_step[3] = spacing
    off_i[4] = -1; off_j[4] = -1; off_step[4] = sq2
    off_i[5] = -1; off_j[5] = 1;  off_step[5] = sq2
    off_i[6] = 1;  off_j[6] = -1; off_step[6] = sq2
    off_i[7] = 1;  off_j[7] = 1;  off_step[7] = sq2

    for i in range(size):
        is_target[i] = 0
        settled[i] = 0
        pos[i] = -1
    for i in range(targets.shape[0]):
        is_target[targets[i]] = 1

    hsize = 0
    hit = -1
    for i in range(sources.shape[0]):
        u = sources[i]
        if dist[u] > 0.0:
            dist[u] = 0.0
            heap[hsize] = u
            pos[u] = hsize
            hsize += 1
            _sift_up(dist, heap, pos, hsize - 1)

    while hsize > 0:
        u = heap[0]
        hsize -= 1
        last = heap[hsize]
        heap[0] = last
        pos[last] = 0
        pos[u] = -1
        if hsize > 0:
            _sift_down(dist, heap, pos, hsize, 0)
        settled[u] = 1
        if is_target[u]:
            hit = u
            break
        d = dist[u]
        ui = u / n
        uj = u - ui * n
        m_u = mu[u]
        s_u = sid[u]
        for i in range(n_off):
            vi = ui + off_i[i]
            vj = uj + off_j[i]
            if vi < 0 or vi >= n or vj < 0 or vj >= n:
                continue
            v = vi * n + vj
            if not msk[v] or settled[v]:
                continue
            if s_u * sid[v] == -1:
                continue
            nd = d + off_step[i] * (m_u * mu[v])
            if nd < dist[v]:
                dist[v] = nd
                if need_pred:
                    pred[v] = u
                if pos[v] == -1:
                    heap[hsize] = v
                    pos[v] = hsize
                    hsize += 1
                    _sift_up(dist, heap, pos, hsize - 1)
                else:
                    _sift_up(dist, heap, pos, pos[v])

    free(is_target)
    free(settled)
    free(heap)
    free(pos)
    return dist_arr, (pred_arr if need_pred else None), hit
