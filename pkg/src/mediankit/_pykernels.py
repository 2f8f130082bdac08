"""Pure-Python and numpy versions of the hot kernels.

These are used when the compiled extension is unavailable; the results are
identical element for element.
"""
from __future__ import annotations

from collections import deque

import numpy as np


def distance_matrix(n: int, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    dist = np.full((n, n), -1, dtype=np.int32)
    for s in range(n):
        row = dist[s]
        row[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            du = row[u] + 1
            for v in indices[indptr[u]:indptr[u + 1]]:
                if row[v] < 0:
                    row[v] = du
                    queue.append(v)
    return dist


def median_table(dist: np.ndarray) -> np.ndarray:
    n = dist.shape[0]
    d = dist.astype(np.int64)
    # between[x, y, m] is True when m lies on a geodesic from x to y.
    between = (d[:, None, :] + d[None, :, :]) == d[:, :, None]
    table = np.empty((n, n, n), dtype=np.int32)
    for x in range(n):
        common = between[x][:, None, :] & between[x][None, :, :] & between
        counts = common.sum(axis=2)
        first = common.argmax(axis=2).astype(np.int32)
        table[x] = np.where(counts == 1, first, np.where(counts == 0, -1, -2))
    return table


def interval_masks(dist: np.ndarray) -> np.ndarray:
    n = dist.shape[0]
    if n > 64:
        raise ValueError("interval_masks supports at most 64 vertices")
    d = dist.astype(np.int64)
    between = (d[:, None, :] + d[None, :, :]) == d[:, :, None]
    weights = np.left_shift(np.uint64(1), np.arange(n, dtype=np.uint64))
    return np.bitwise_or.reduce(np.where(between, weights, np.uint64(0)), axis=2).astype(np.uint64)


def hull_closure(masks: np.ndarray, seed: int) -> int:
    rows = masks.tolist() if hasattr(masks, "tolist") else masks
    current = int(seed)
    done = 0
    while True:
        pending = current & ~done
        if not pending:
            return current
        members = [b for b in range(len(rows)) if current >> b & 1]
        a = 0
        while pending:
            if pending & 1:
                row = rows[a]
                for b in members:
                    current |= row[b]
                done |= 1 << a
            pending >>= 1
            a += 1
