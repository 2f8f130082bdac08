# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for finite median graphs.

Each function mirrors one in ``_pykernels`` and must return identical results.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, uint64_t

cnp.import_array()


def distance_matrix(int n, int32_t[::1] indptr, int32_t[::1] indices):
    """All-pairs BFS distances on an unweighted graph in CSR form (-1 if unreachable)."""
    dist_arr = np.full((n, n), -1, dtype=np.int32)
    cdef int32_t[:, ::1] dist = dist_arr
    queue_arr = np.empty(max(n, 1), dtype=np.int32)
    cdef int32_t[::1] queue = queue_arr
    cdef int s, head, tail, u, v, k
    for s in range(n):
        dist[s, s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            u = queue[head]
            head += 1
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if dist[s, v] < 0:
                    dist[s, v] = dist[s, u] + 1
                    queue[tail] = v
                    tail += 1
    return dist_arr


def median_table(int32_t[:, ::1] dist):
    """Table of metric medians: entry m >= 0, -1 if no median, -2 if several."""
    cdef int n = dist.shape[0]
    table_arr = np.empty((n, n, n), dtype=np.int32)
    cdef int32_t[:, :, ::1] table = table_arr
    cdef int x, y, z, m, found, dxy, dxz, dyz
    for x in range(n):
        for y in range(x, n):
            dxy = dist[x, y]
            for z in range(y, n):
                dxz = dist[x, z]
                dyz = dist[y, z]
                found = -1
                for m in range(n):
                    if (dist[x, m] + dist[m, y] == dxy
                            and dist[x, m] + dist[m, z] == dxz
                            and dist[y, m] + dist[m, z] == dyz):
                        if found == -1:
                            found = m
                        else:
                            found = -2
                            break
                table[x, y, z] = found
                table[x, z, y] = found
                table[y, x, z] = found
                table[y, z, x] = found
                table[z, x, y] = found
                table[z, y, x] = found
    return table_arr


def interval_masks(int32_t[:, ::1] dist):
    """Bitmask of the interval I(x, y) for every pair; requires n <= 64."""
    cdef int n = dist.shape[0]
    if n > 64:
        raise ValueError("interval_masks supports at most 64 vertices")
    masks_arr = np.zeros((n, n), dtype=np.uint64)
    cdef uint64_t[:, ::1] masks = masks_arr
    cdef int x, y, z
    cdef uint64_t acc
    for x in range(n):
        for y in range(x, n):
            acc = 0
            for z in range(n):
                if dist[x, z] + dist[z, y] == dist[x, y]:
                    acc |= (<uint64_t>1) << z
            masks[x, y] = acc
            masks[y, x] = acc
    return masks_arr


def hull_closure(uint64_t[:, ::1] masks, uint64_t seed):
    """Close a vertex bitmask under intervals until it stabilises."""
    cdef int n = masks.shape[0]
    cdef uint64_t current = seed, done = 0, pending, bit
    cdef int a, b
    while True:
        pending = current & ~done
        if pending == 0:
            return current
        for a in range(n):
            bit = (<uint64_t>1) << a
            if not (pending & bit):
                continue
            for b in range(n):
                if current & ((<uint64_t>1) << b):
                    current |= masks[a, b]
            done |= bit
