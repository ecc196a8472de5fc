"""Spanning-tree counts via the matrix-tree theorem."""

from __future__ import annotations

import math
from typing import List

import numpy as np

from .pairing import Multigraph

#: Relative pivot threshold below which the float minor is treated as singular.
PIVOT_THRESHOLD = 1e-12


def laplacian(g: Multigraph) -> np.ndarray:
    """Integer Laplacian with loops dropped."""
    m = g.mult.copy()
    np.fill_diagonal(m, 0)
    return np.diag(m.sum(axis=1)) - m


def bareiss_det(rows: List[List[int]]) -> int:
    """Exact determinant by fraction-free elimination with row pivoting."""
    a = [list(r) for r in rows]
    size = len(a)
    if size == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(size - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, size) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        akk = a[k][k]
        rk = a[k]
        for i in range(k + 1, size):
            ri = a[i]
            aik = ri[k]
            for j in range(k + 1, size):
                ri[j] = (akk * ri[j] - aik * rk[j]) // prev
            ri[k] = 0
        prev = akk
    return sign * a[-1][-1]


def is_connected(g: Multigraph) -> bool:
    parent = list(range(g.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    us, vs = np.nonzero(np.triu(g.mult, 1))
    for u, v in zip(us.tolist(), vs.tolist()):
        parent[find(u)] = find(v)
    return len({find(v) for v in range(g.n)}) == 1


def spanning_tree_count(g: Multigraph) -> int:
    """Exact number of spanning trees (parallel edges counted separately)."""
    if g.n < 1:
        raise ValueError("graph needs at least one vertex")
    lap = laplacian(g)[:-1, :-1]
    return bareiss_det(lap.tolist())


def spanning_tree_log_count(g: Multigraph) -> float:
    """``log tau(g)`` from a Cholesky factor of the reduced Laplacian; ``-inf`` if disconnected."""
    if g.n < 2:
        raise ValueError("log count needs n >= 2")
    if not is_connected(g):
        return -math.inf
    minor = laplacian(g)[:-1, :-1].astype(float)
    chol = np.linalg.cholesky(minor)
    diag = np.diag(chol)
    if diag.min() <= PIVOT_THRESHOLD * np.abs(minor).max(axis=1).max():
        raise ArithmeticError("reduced Laplacian numerically singular for a connected graph")
    return float(2 * np.log(diag).sum())


def batch_log_counts(mult: np.ndarray, connected: np.ndarray) -> np.ndarray:
    """Vectorised ``log tau`` for a stack of multiplicity matrices ``(B, n, n)``.

    ``connected`` must come from a combinatorial check; disconnected entries get ``-inf``.
    """
    out = np.full(mult.shape[0], -np.inf)
    if not connected.any():
        return out
    m = mult[connected].astype(float)
    idx = np.arange(m.shape[1])
    m[:, idx, idx] = 0
    lap = -m
    lap[:, idx, idx] = m.sum(axis=2)
    chol = np.linalg.cholesky(lap[:, :-1, :-1])
    out[connected] = 2 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    return out


def batch_exact_counts(mult: np.ndarray, connected: np.ndarray) -> List[int]:
    """Exact ``tau`` for a stack of graphs.

    Connected graphs have a positive definite reduced Laplacian, so Bareiss
    needs no pivoting; it runs vectorised in int64 while the Hadamard bound
    keeps every intermediate product representable, and per graph otherwise.
    """
    B, n, _ = mult.shape
    result = [0] * B
    if n == 1:
        return [1] * B
    m = mult.astype(np.int64).copy()
    idx = np.arange(n)
    m[:, idx, idx] = 0
    lap = -m
    lap[:, idx, idx] = m.sum(axis=2)
    lap = lap[:, :-1, :-1]
    sel = np.nonzero(connected)[0]
    if sel.size == 0:
        return result
    a = lap[sel]
    row_norms = np.sqrt((a.astype(float) ** 2).sum(axis=2))
    log2_bound = np.log2(row_norms).sum(axis=1).max()
    if 2 * log2_bound + 2 < 62:
        size = n - 1
        prev = np.ones(len(sel), dtype=np.int64)
        for k in range(size - 1):
            akk = a[:, k, k].copy()
            sub = a[:, k + 1 :, k + 1 :]
            col = a[:, k + 1 :, k]
            row = a[:, k, k + 1 :]
            sub[:] = (akk[:, None, None] * sub - col[:, :, None] * row[:, None, :]) // prev[:, None, None]
            prev = akk
        dets = a[:, -1, -1].tolist()
    else:
        dets = [bareiss_det(x.tolist()) for x in a]
    for i, v in zip(sel.tolist(), dets):
        result[i] = int(v)
    return result


def batch_connected(mult: np.ndarray) -> np.ndarray:
    """Connectivity of every graph in a ``(B, n, n)`` stack by repeated reachability."""
    B, n, _ = mult.shape
    adj = (mult > 0).astype(np.float32)
    reach = np.zeros((B, n), dtype=bool)
    reach[:, 0] = True
    for _ in range(n):
        new = reach | (np.matmul(reach[:, None, :].astype(np.float32), adj)[:, 0, :] > 0)
        if (new == reach).all():
            break
        reach = new
    return reach.all(axis=1)
