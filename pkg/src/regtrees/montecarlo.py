"""Sampling-based checks of the moment formulas and of the limit law.

Pairings are drawn in fixed-size chunks; chunk ``k`` always uses Philox
stream ``k`` of the master seed, so results do not depend on how many
worker processes share the chunks.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import mpmath
import numpy as np
from scipy import stats

from . import __version__
from .exactnum import to_mpf
from .moments import LambdaZetaSum, expected_trees_asymptotic, janson_constants
from .pairing import GENERATOR_ID, make_rng, cycle_counts, multigraph_from_key, Multigraph
from .treecount import batch_connected, batch_exact_counts, batch_log_counts

#: Largest n for which exact spanning-tree counts are kept per sample.
EXACT_TAU_MAX_N = 30

#: Default truncation of the cycle-length product for cubic graphs.
DEFAULT_J_MAX_CUBIC = 60

#: Largest Poisson mean handed to numpy; beyond it a normal draw is used.
POISSON_EXACT_LIMIT = 1e17


def chunk_size(n: int) -> int:
    """Pairings per chunk; depends only on n so streams are reproducible."""
    return int(max(16, min(2048, 4_000_000 // (n * n))))


@dataclass
class SampleBatch:
    d: int
    n: int
    seed: int
    log_tau: np.ndarray
    simple: np.ndarray
    cycles: np.ndarray  # shape (samples, m)
    tau: Optional[List[int]] = None
    workers: int = 1
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.log_tau)

    def meta(self) -> dict:
        out = {
            "version": __version__,
            "d": self.d,
            "n": self.n,
            "seed": self.seed,
            "samples": len(self),
            "generator": GENERATOR_ID,
            "chunk_size": chunk_size(self.n),
            "workers": self.workers,
            "cycle_lengths": int(self.cycles.shape[1]),
            "exact_tau": self.tau is not None,
        }
        out.update(self.metadata)
        return out

    def write_csv_stream(self, fh) -> None:
        m = self.cycles.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "log_tau", "tau", "simple"] + [f"X{j}" for j in range(1, m + 1)])
        for i in range(len(self)):
            tau = "" if self.tau is None else str(self.tau[i])
            row = [str(i), repr(float(self.log_tau[i])), tau, str(int(self.simple[i]))]
            w.writerow(row + [str(int(x)) for x in self.cycles[i]])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            self.write_csv_stream(fh)

    def write_json_meta(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.meta(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _check(d: int, n: int) -> None:
    if d < 1 or n < 2:
        raise ValueError("need d >= 1 and n >= 2")
    if (d * n) % 2:
        raise ValueError(f"d*n must be even (d={d}, n={n})")


def _sample_chunk(args):
    d, n, seed, chunk, size, m, want_tau, simple_only = args
    rng = make_rng(seed, chunk)
    dn = d * n
    perm = rng.permuted(np.tile(np.arange(dn, dtype=np.int64), (size, 1)), axis=1)
    u = perm[:, 0::2] // d
    v = perm[:, 1::2] // d
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    loops = (lo == hi).sum(axis=1)
    code = np.sort(lo * n + hi, axis=1)
    x2 = parallel_pairs(code, n)
    simple = (loops == 0) & (x2 == 0)
    keep = np.nonzero(simple)[0] if simple_only else np.arange(size)
    k = len(keep)
    log_tau = np.full(k, np.nan)
    tau = None
    cycles = np.zeros((k, m), dtype=np.int64)
    if m >= 1:
        cycles[:, 0] = loops[keep]
    if m >= 2:
        cycles[:, 1] = x2[keep]
    if want_tau or m >= 3:
        mult = np.zeros((k, n, n), dtype=np.int16)
        if k:
            rows = np.repeat(np.arange(k), u.shape[1])
            uu, vv = u[keep].ravel(), v[keep].ravel()
            np.add.at(mult, (rows, uu, vv), 1)
            off = uu != vv
            np.add.at(mult, (rows[off], vv[off], uu[off]), 1)
        if want_tau:
            connected = batch_connected(mult)
            log_tau = batch_log_counts(mult, connected)
            if n <= EXACT_TAU_MAX_N:
                tau = batch_exact_counts(mult, connected)
        if m >= 3:
            for i in range(k):
                cycles[i] = cycle_counts(Multigraph(n, mult[i].astype(np.int64)), m)
    return log_tau, simple[keep], cycles, tau, size


def parallel_pairs(code: np.ndarray, n: int) -> np.ndarray:
    """Per row of sorted edge codes ``u*n+v`` (u <= v), the number of parallel pairs.

    A bundle of k equal non-loop codes contributes C(k, 2) = 0 + 1 + ... + (k-1).
    """
    if code.shape[1] < 2:
        return np.zeros(code.shape[0], dtype=np.int64)
    offdiag = (code // n) != (code % n)
    same = (code[:, 1:] == code[:, :-1]) & offdiag[:, 1:]
    c = np.cumsum(same, axis=1)
    last_reset = np.maximum.accumulate(np.where(same, 0, c), axis=1)
    return (c - last_reset).sum(axis=1)


def _run_chunks(tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [_sample_chunk(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sample_chunk, tasks))


def sample_batch(
    d: int,
    n: int,
    samples: int,
    seed: int,
    m: int = 2,
    *,
    want_tau: bool = True,
    workers: int = 1,
) -> SampleBatch:
    """``samples`` uniform pairings with log tau, simplicity flag and ``X_1..X_m``."""
    _check(d, n)
    size = chunk_size(n)
    tasks = []
    for chunk, start in enumerate(range(0, samples, size)):
        tasks.append((d, n, seed, chunk, min(size, samples - start), m, want_tau, False))
    parts = _run_chunks(tasks, workers)
    log_tau = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0)
    simple = np.concatenate([p[1] for p in parts]) if parts else np.zeros(0, bool)
    cycles = np.concatenate([p[2] for p in parts]) if parts else np.zeros((0, m), np.int64)
    tau = None
    if want_tau and n <= EXACT_TAU_MAX_N:
        tau = [t for p in parts for t in p[3]]
    return SampleBatch(d, n, seed, log_tau, simple, cycles, tau, workers)


def sample_simple(d: int, n: int, count: int, seed: int, *, workers: int = 1, max_pairings: Optional[int] = None) -> SampleBatch:
    """Pairings conditioned on a simple projection (rejection), ``count`` of them."""
    _check(d, n)
    size = chunk_size(n)
    if max_pairings is None:
        max_pairings = max(100 * count, 10 * size)
    logs, chunks, drawn = [], 0, 0
    while sum(len(x) for x in logs) < count:
        if drawn >= max_pairings:
            raise RuntimeError(
                f"only {sum(len(x) for x in logs)} simple graphs in {drawn} pairings; "
                f"requested {count}"
            )
        batch = max(1, workers)
        tasks = [(d, n, seed, chunks + i, size, 0, True, True) for i in range(batch)]
        for part in _run_chunks(tasks, workers):
            logs.append(part[0])
            drawn += part[4]
        chunks += batch
    log_tau = np.concatenate(logs)[:count]
    batch = SampleBatch(d, n, seed, log_tau, np.ones(count, bool), np.zeros((count, 0), np.int64), None, workers)
    batch.metadata["pairings_drawn"] = drawn
    batch.metadata["conditioned_on_simple"] = True
    return batch


# -- estimators ---------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float

    def z_score(self, target: float) -> float:
        return (self.mean - target) / self.std_error if self.std_error > 0 else math.inf * (self.mean != target)


@dataclass(frozen=True)
class MomentEstimate:
    first: Estimate
    second: Estimate
    samples: int


def _mean_se(x) -> Estimate:
    x = np.asarray(x, dtype=float)
    return Estimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x))))


def _exact_mean_se(values: Sequence[int]) -> Estimate:
    N = len(values)
    s1 = sum(values)
    s2 = sum(v * v for v in values)
    mean = Fraction(s1, N)
    var = (Fraction(s2, N) - mean * mean) * Fraction(N, N - 1)
    return Estimate(float(mean), math.sqrt(float(var) / N))


def estimate_ey(d: int, n: int, samples: int, seed: int, workers: int = 1) -> MomentEstimate:
    """Sample means (with standard errors) of tau and tau^2 over uniform pairings."""
    batch = sample_batch(d, n, samples, seed, m=0, workers=workers)
    if batch.tau is not None:
        return MomentEstimate(_exact_mean_se(batch.tau), _exact_mean_se([t * t for t in batch.tau]), samples)
    tau = np.exp(batch.log_tau)
    return MomentEstimate(_mean_se(tau), _mean_se(tau**2), samples)


def simplicity_rate(d: int, n: int, samples: int, seed: int, workers: int = 1) -> Estimate:
    batch = sample_batch(d, n, samples, seed, m=0, want_tau=False, workers=workers)
    return _mean_se(batch.simple.astype(float))


def ratio_from_batch(batch: SampleBatch, rho: Sequence[int], scale: float = 1.0) -> Estimate:
    """``sum tau X_rho / sum tau`` with a delta-method standard error.

    ``scale`` multiplies every tau; the estimate does not depend on it.
    """
    rho = tuple(rho)
    if len(rho) > batch.cycles.shape[1]:
        raise ValueError("batch lacks the cycle counts this profile needs")
    finite = np.isfinite(batch.log_tau)
    if not finite.any():
        raise ZeroDivisionError("every sampled tau is zero")
    weights = np.zeros(len(batch))
    shift = batch.log_tau[finite].max()
    weights[finite] = scale * np.exp(batch.log_tau[finite] - shift)
    xr = np.ones(len(batch))
    for j, r in enumerate(rho):
        col = batch.cycles[:, j].astype(float)
        for i in range(r):
            xr *= col - i
    a = weights * xr
    N = len(batch)
    mb = weights.mean()
    if mb == 0:
        raise ZeroDivisionError("sum of tau weights is zero")
    R = a.mean() / mb
    if not any(rho):
        return Estimate(1.0, 0.0)
    cov = np.cov(np.vstack([a, weights]), ddof=1)
    var = (cov[0, 0] - 2 * R * cov[0, 1] + R * R * cov[1, 1]) / (N * mb * mb)
    return Estimate(float(R), float(math.sqrt(max(var, 0.0))))


def estimate_a2prime_ratio(d: int, n: int, rho: Sequence[int], samples: int, seed: int, workers: int = 1) -> Estimate:
    """``E[Y prod_j (X_j)_{rho_j}] / E[Y]`` by a ratio of sample means."""
    rho = tuple(rho)
    if not any(rho):
        return Estimate(1.0, 0.0)
    batch = sample_batch(d, n, samples, seed, m=len(rho), workers=workers)
    return ratio_from_batch(batch, rho)


# -- the limit variable ----------------------------------------------------------

def default_j_max(d: int, tail: float = 1e-10) -> int:
    if d == 3:
        return DEFAULT_J_MAX_CUBIC
    s = LambdaZetaSum(d)
    j = 1
    while float(s.tail_from(j + 1)) >= tail:
        j += 1
    return j


@dataclass(frozen=True)
class WSimConfig:
    d: int
    j_min: int = 1
    j_max: Optional[int] = None
    samples: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.d < 3:
            raise ValueError("d must be >= 3")
        if self.j_min not in (1, 3):
            raise ValueError("j_min must be 1 or 3")
        if self.j_max is None:
            object.__setattr__(self, "j_max", default_j_max(self.d))
        if self.j_max < self.j_min:
            raise ValueError("j_max must be >= j_min")
        if float(LambdaZetaSum(self.d).tail_from(self.j_max + 1)) >= 1e-10:
            raise ValueError(f"j_max={self.j_max} leaves a truncation tail >= 1e-10")


def _w_constants(d: int, js: Sequence[int]):
    """Per-j ``lambda``, ``log(1+zeta)`` and ``lambda (log(1+zeta) - zeta)`` as floats."""
    lam, a, c = [], [], []
    with mpmath.workprec(160):
        for j in js:
            k = janson_constants(d, j)
            z = to_mpf(k.zeta, 160)
            L = to_mpf(k.lam, 160)
            l1 = mpmath.log1p(z)
            lam.append(float(L))
            a.append(float(l1))
            c.append(float(L * (l1 - z)))
    return np.array(lam), np.array(a), np.array(c)


def w_log_value(z_counts: np.ndarray, d: int, j_min: int = 1) -> np.ndarray:
    """``log prod_j (1+zeta_j)^Z_j e^{-lambda_j zeta_j}`` for rows of Poisson counts.

    Column ``k`` of ``z_counts`` holds ``Z_{j_min+k}``.
    """
    z_counts = np.atleast_2d(np.asarray(z_counts))
    js = range(j_min, j_min + z_counts.shape[1])
    lam, a, c = _w_constants(d, js)
    # (Z - lambda) log(1+zeta) + lambda (log(1+zeta) - zeta), stable for huge lambda
    return ((z_counts - lam) * a).sum(axis=1) + c.sum()


def _poisson(rng: np.random.Generator, lam: float, size: int) -> np.ndarray:
    if lam < POISSON_EXACT_LIMIT:
        return rng.poisson(lam, size)
    return np.rint(lam + math.sqrt(lam) * rng.standard_normal(size))


def simulate_w(cfg: WSimConfig) -> np.ndarray:
    """Samples of ``log W`` (``j_min = 1``) or of its j >= 3 version."""
    rng = make_rng(cfg.seed, 0)
    js = list(range(cfg.j_min, cfg.j_max + 1))
    lam, a, c = _w_constants(cfg.d, js)
    out = np.full(cfg.samples, c.sum())
    for k in range(len(js)):
        z = _poisson(rng, lam[k], cfg.samples)
        out += (z - lam[k]) * a[k]
    return out


def w_factor_mean(d: int, j: int, samples: int, seed: int) -> Estimate:
    """Mean of ``(1+zeta_j)^Z e^{-lambda_j zeta_j}`` with ``Z ~ Poisson(lambda_j)``."""
    rng = make_rng(seed, j)
    lam, a, c = _w_constants(d, [j])
    z = _poisson(rng, lam[0], samples)
    return _mean_se(np.exp((z - lam[0]) * a[0] + c[0]))


# -- distribution test --------------------------------------------------------------

@dataclass(frozen=True)
class DistributionTest:
    n: int
    ks_statistic: float
    p_value: float
    graph_deciles: List[float]
    w_deciles: List[float]
    graph_samples: int
    w_samples: int
    pairings_drawn: int

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "ks_statistic": self.ks_statistic,
            "p_value": self.p_value,
            "graph_samples": self.graph_samples,
            "w_samples": self.w_samples,
            "pairings_drawn": self.pairings_drawn,
            "deciles": [
                {"q": round(0.1 * (i + 1), 1), "log_graph": g, "log_w": w}
                for i, (g, w) in enumerate(zip(self.graph_deciles, self.w_deciles))
            ],
        }


def ks_statistic(x: np.ndarray, y: np.ndarray):
    res = stats.ks_2samp(x, y)
    return float(res.statistic), float(res.pvalue)


def empirical_distribution_test(
    d: int, n: int, graph_samples: int, w_samples: int, seed: int, *, workers: int = 1, j_max: Optional[int] = None
) -> DistributionTest:
    """KS distance between ``log(Y_G / E Y_G)`` over simple cubic graphs and ``log W'``."""
    if d != 3:
        raise ValueError("the limit law is established for d = 3 only")
    if n % 2 or n > 500:
        raise ValueError("n must be even and at most 500")
    graphs = sample_simple(d, n, graph_samples, seed, workers=workers)
    norm = float(expected_trees_asymptotic(d, n).log)
    x = graphs.log_tau - norm
    w = simulate_w(WSimConfig(d, 3, j_max, w_samples, seed + 1))
    stat, pv = ks_statistic(x, w)
    qs = np.linspace(0.1, 0.9, 9)
    return DistributionTest(
        n,
        stat,
        pv,
        [float(v) for v in np.quantile(x, qs)],
        [float(v) for v in np.quantile(w, qs)],
        graph_samples,
        w_samples,
        graphs.metadata["pairings_drawn"],
    )
