"""Configuration (pairing) model: sampling, enumeration, projection, cycles."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .exactnum import pairing_count

#: Largest number of prevertices accepted by exhaustive enumeration.
MAX_ENUMERATION_POINTS = 18

GENERATOR_ID = "numpy.Philox"


@dataclass(frozen=True)
class Pairing:
    d: int
    n: int
    mate: Tuple[int, ...]

    def __post_init__(self):
        if len(self.mate) != self.d * self.n:
            raise ValueError("mate must have length d*n")
        for i, j in enumerate(self.mate):
            if i == j or self.mate[j] != i:
                raise ValueError("mate must be a fixed-point-free involution")

    def bucket(self, i: int) -> int:
        return i // self.d

    def pairs(self) -> List[Tuple[int, int]]:
        return [(i, j) for i, j in enumerate(self.mate) if i < j]


class Multigraph:
    """Loopy multigraph on ``range(n)`` stored as a symmetric multiplicity matrix.

    ``mult[v, v]`` is the number of loops at ``v`` (each loop stored once).
    """

    __slots__ = ("n", "mult")

    def __init__(self, n: int, mult=None):
        self.n = n
        if mult is None:
            mult = np.zeros((n, n), dtype=np.int64)
        mult = np.array(mult, dtype=np.int64)
        if mult.shape != (n, n) or (mult != mult.T).any() or (mult < 0).any():
            raise ValueError("multiplicity matrix must be symmetric, nonnegative, n x n")
        self.mult = mult

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[Tuple[int, int]]) -> "Multigraph":
        m = np.zeros((n, n), dtype=np.int64)
        for u, v in edges:
            m[u, v] += 1
            if u != v:
                m[v, u] += 1
        return cls(n, m)

    def edges(self) -> List[Tuple[int, int]]:
        """Edge list with repetition, loops as ``(v, v)``."""
        out = []
        for u in range(self.n):
            for v in range(u, self.n):
                out.extend([(u, v)] * int(self.mult[u, v]))
        return out

    def degree(self, v: int) -> int:
        return int(self.mult[v].sum() + self.mult[v, v])

    def key(self) -> tuple:
        iu = np.triu_indices(self.n)
        return tuple(self.mult[iu].tolist())

    def __eq__(self, other):
        return isinstance(other, Multigraph) and self.n == other.n and (self.mult == other.mult).all()

    def __hash__(self):
        return hash((self.n, self.key()))

    def __repr__(self):
        return f"Multigraph(n={self.n}, edges={self.edges()})"


def _check_dn(d: int, n: int) -> None:
    if d < 1 or n < 1:
        raise ValueError("d and n must be positive")
    if (d * n) % 2:
        raise ValueError(f"d*n must be even (d={d}, n={n})")


def make_rng(seed, stream: int = 0) -> np.random.Generator:
    """Philox stream ``stream`` of the master ``seed``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(ss))


def sample_pairing(d: int, n: int, rng: np.random.Generator) -> Pairing:
    """Uniform random pairing: shuffle the prevertices and pair consecutively."""
    _check_dn(d, n)
    perm = rng.permutation(d * n)
    mate = [0] * (d * n)
    for a, b in zip(perm[0::2].tolist(), perm[1::2].tolist()):
        mate[a] = b
        mate[b] = a
    return Pairing(d, n, tuple(mate))


def iter_pairings(d: int, n: int) -> Iterator[Pairing]:
    """Every pairing of ``P_{n,d}`` once: the lowest free prevertex picks a partner."""
    _check_dn(d, n)
    m = d * n
    if m > MAX_ENUMERATION_POINTS:
        raise ValueError(
            f"exhaustive enumeration limited to d*n <= {MAX_ENUMERATION_POINTS} "
            f"({pairing_count(MAX_ENUMERATION_POINTS)} pairings); got d*n={m}"
        )
    mate = [-1] * m

    def rec(first: int):
        while first < m and mate[first] >= 0:
            first += 1
        if first == m:
            yield Pairing(d, n, tuple(mate))
            return
        for j in range(first + 1, m):
            if mate[j] < 0:
                mate[first], mate[j] = j, first
                yield from rec(first + 1)
                mate[first] = mate[j] = -1

    yield from rec(0)


def enumerate_pairings(d: int, n: int, visitor: Callable[[Pairing], None]) -> int:
    """Call ``visitor`` on every pairing; returns how many were visited."""
    count = 0
    for p in iter_pairings(d, n):
        visitor(p)
        count += 1
    return count


def projection_counts(d: int, n: int) -> Dict[tuple, int]:
    """Map ``Multigraph.key()`` -> number of pairings projecting to it.

    Same tree as :func:`iter_pairings`, but partners inside one bucket are
    interchangeable, so states are merged by (free prevertices per bucket,
    multigraph so far).  Cheap enough for ``d*n`` well beyond the full walk.
    """
    _check_dn(d, n)
    iu = {(u, v): k for k, (u, v) in enumerate(zip(*np.triu_indices(n)))}
    states: Dict[tuple, int] = {((d,) * n, (0,) * len(iu)): 1}
    for _ in range(d * n // 2):
        nxt: Dict[tuple, int] = Counter()
        for (free, edges), weight in states.items():
            u = next(b for b, c in enumerate(free) if c)
            for v in range(u, n):
                choices = free[v] - (1 if v == u else 0)
                if choices <= 0:
                    continue
                f = list(free)
                f[u] -= 1
                f[v] -= 1
                e = list(edges)
                e[iu[u, v]] += 1
                nxt[tuple(f), tuple(e)] += weight * choices
        states = nxt
    return {edges: w for (_, edges), w in states.items()}


def multigraph_from_key(n: int, key: tuple) -> Multigraph:
    m = np.zeros((n, n), dtype=np.int64)
    iu = np.triu_indices(n)
    m[iu] = key
    m = m + m.T - np.diag(np.diag(m))
    return Multigraph(n, m)


def project(p: Pairing) -> Multigraph:
    g = np.zeros((p.n, p.n), dtype=np.int64)
    for i, j in p.pairs():
        u, v = p.bucket(i), p.bucket(j)
        g[u, v] += 1
        if u != v:
            g[v, u] += 1
    return Multigraph(p.n, g)


def is_simple(g: Multigraph) -> bool:
    return not np.diag(g.mult).any() and int(g.mult.max(initial=0)) <= 1


def cycle_counts(g: Multigraph, m: int) -> List[int]:
    """``(X_1, ..., X_m)``: loops, parallel pairs, then multiplicity-weighted cycles.

    For ``j >= 3`` each vertex cycle is found once from its smallest vertex,
    with direction fixed by requiring the second vertex below the last one.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    mult = g.mult
    n = g.n
    counts = [0] * m
    counts[0] = int(np.trace(mult))
    if m >= 2:
        off = np.triu(mult, 1)
        counts[1] = int((off * (off - 1) // 2).sum())
    if m < 3:
        return counts
    nbrs = [[(int(v), int(mult[u, v])) for v in np.nonzero(mult[u])[0] if v != u] for u in range(n)]
    for s in range(n):
        # cycles whose smallest vertex is s
        path = [s]
        on_path = {s}

        def dfs(u: int, weight: int):
            length = len(path)
            for v, w in nbrs[u]:
                if v <= s:
                    if v == s and length >= 3 and path[1] < u:
                        counts[length - 1] += weight * w
                    continue
                if v in on_path or length >= m:
                    continue
                path.append(v)
                on_path.add(v)
                dfs(v, weight * w)
                path.pop()
                on_path.discard(v)

        dfs(s, 1)
    return counts


def falling_product(x: Sequence[int], rho: Sequence[int]) -> int:
    """``prod_j (x_j)_{rho_j}``, the number of ordered selections of cycles."""
    out = 1
    for xj, r in zip(x, rho):
        for i in range(r):
            out *= xj - i
    return out
