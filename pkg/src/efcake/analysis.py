"""Bound evaluators, recurrence checkers and EFBT graph dynamics.

The dynamics model: each stage every player but A1 independently declares
EQ or NEQ with probability 1/2 (A1 always EQ).  If no (EQ, NEQ) pair lacks an
advantage edge the run ends (Case 1); otherwise the least such pair gains an
edge, and the run ends once some vertex is adjacent to all others.  The
Monte-Carlo driver and the exact oracle implement this model independently.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from .ledger import OrdinalBudget, leq
from .protocols.efbt import efbt_budget

__all__ = [
    "efbt_worst_bound",
    "lemma2_threshold",
    "tight_threshold",
    "brute_force_check",
    "Lemma2Scan",
    "lemma2_scan",
    "DynamicsStats",
    "efbt_dynamics",
    "declaration_words",
    "exact_expected_stages",
    "closed_form_stages",
    "closed_form_asymptotic",
    "efrw_recurrence",
    "pikhurto_recurrence",
    "efrw_bound_check",
    "pikhurto_bound_check",
    "efrw_average_phases",
]


def efbt_worst_bound(n: int) -> tuple[OrdinalBudget, int]:
    return efbt_budget(n)


# advantage-graph threshold ---------------------------------------------------


def lemma2_threshold(n: int) -> int:
    """``ceil(n(n-2)/2 + 1)`` edges force a vertex of degree ``n - 1``."""
    return (n * (n - 2) + 3) // 2


def tight_threshold(n: int) -> int:
    """Fewest edges that always force a degree-``(n-1)`` vertex.

    Every degree at most ``n - 2`` caps the edge count at ``floor(n(n-2)/2)``,
    which is attained (complement of a near-perfect matching), so this is one more.
    """
    return n * (n - 2) // 2 + 1


@dataclass(frozen=True)
class Lemma2Scan:
    n: int
    graphs: int
    max_edges_without_full: int
    threshold: int

    @property
    def forced(self) -> bool:
        return self.max_edges_without_full < self.threshold

    @property
    def tight(self) -> bool:
        return self.max_edges_without_full == self.threshold - 1


def lemma2_scan(n: int) -> Lemma2Scan:
    """Enumerate every labelled graph on ``n <= 7`` vertices."""
    if n > 7:
        raise ValueError("brute force is limited to n <= 7")
    if n < 2:
        raise ValueError("need n >= 2")
    pairs = list(combinations(range(n), 2))
    masks = np.arange(1 << len(pairs), dtype=np.uint32)
    edges = np.bitwise_count(masks)
    has_full = np.zeros(masks.shape, dtype=bool)
    for v in range(n):
        incident = sum(1 << k for k, p in enumerate(pairs) if v in p)
        has_full |= np.bitwise_count(masks & np.uint32(incident)) == n - 1
    without = edges[~has_full]
    best = int(without.max()) if without.size else -1
    return Lemma2Scan(n, int(masks.size), best, lemma2_threshold(n))


def brute_force_check(n: int) -> bool:
    """(i) every graph at the threshold has a full vertex; (ii) for even ``n``
    some graph one edge short has none.  For odd ``n`` the stated threshold
    is not tight, so (ii) is checked against :func:`tight_threshold`."""
    scan = lemma2_scan(n)
    if not scan.forced:
        return False
    if n % 2 == 0:
        return scan.tight
    return scan.max_edges_without_full == tight_threshold(n) - 1


# dynamics: Monte Carlo -----------------------------------------------------


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def declaration_words(seed: int, trials: np.ndarray, stage: int) -> np.ndarray:
    """One 64-bit word per trial for ``stage``: bit ``k-1`` set means player
    ``k`` (0-based, ``k >= 1``) declares NEQ.  A pure function of
    (seed, trial, stage), so results do not depend on scheduling."""
    with np.errstate(over="ignore"):
        key = _splitmix64(np.full(trials.shape, seed & 0xFFFFFFFFFFFFFFFF, dtype=np.uint64))
        x = _splitmix64(key ^ trials.astype(np.uint64))
        return _splitmix64(x ^ (np.uint64(stage) * np.uint64(0xD1B54A32D192ED03)))


@dataclass
class DynamicsStats:
    n: int
    trials: int
    histogram: Counter = field(default_factory=Counter)
    causes: Counter = field(default_factory=Counter)

    @property
    def mean(self) -> float:
        return float(self.exact_mean)

    @property
    def exact_mean(self) -> Fraction:
        return Fraction(sum(k * c for k, c in self.histogram.items()), self.trials)

    @property
    def variance(self) -> float:
        if self.trials < 2:
            return 0.0
        mu = self.exact_mean
        ss = sum(c * (k - mu) ** 2 for k, c in self.histogram.items())
        return float(ss / (self.trials - 1))

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.trials)

    @property
    def max_stages(self) -> int:
        return max(self.histogram) if self.histogram else 0


def _simulate_block(n: int, seed: int, trials: np.ndarray):
    """Vectorized scripted-model runs; returns stage counts and causes (0 = Case 1, 1 = full vertex)."""
    k = trials.size
    adj = np.zeros((k, n), dtype=np.uint32)
    stages = np.zeros(k, dtype=np.int64)
    cause = np.full(k, -1, dtype=np.int8)
    alive = np.ones(k, dtype=bool)
    others = np.uint64((1 << (n - 1)) - 1)
    stage = 0
    while alive.any():
        stage += 1
        idx = np.flatnonzero(alive)
        words = declaration_words(seed, trials[idx], stage)
        neq = ((words & others) << np.uint64(1)).astype(np.uint32)
        a = adj[idx]
        found = np.zeros(idx.size, dtype=bool)
        pi = np.zeros(idx.size, dtype=np.int64)
        pj = np.zeros(idx.size, dtype=np.int64)
        for i in range(n):
            is_eq = (neq >> np.uint32(i)) & np.uint32(1) == 0
            miss = neq & ~a[:, i]
            hit = is_eq & (miss != 0) & ~found
            low = miss & (~miss + np.uint32(1))
            pi[hit] = i
            pj[hit] = np.log2(low[hit]).astype(np.int64)
            found |= hit
        stages[idx] += 1
        done1 = idx[~found]
        cause[done1] = 0
        alive[done1] = False
        rows = np.flatnonzero(found)
        g = idx[rows]
        adj[g, pi[rows]] |= np.left_shift(np.uint32(1), pj[rows].astype(np.uint32))
        adj[g, pj[rows]] |= np.left_shift(np.uint32(1), pi[rows].astype(np.uint32))
        deg = np.bitwise_count(adj[g])
        full = (deg == n - 1).any(axis=1)
        cause[g[full]] = 1
        alive[g[full]] = False
    return stages, cause


def efbt_dynamics(n: int, trials: int, seed: int = 0, workers: int | None = None, chunk: int = 20000) -> DynamicsStats:
    """Monte-Carlo stage counts of the scripted model.

    Trials are processed in chunks, optionally concurrently (capped by
    ``EFCAKE_THREADS``); the reduction is an order-independent histogram.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 2 <= n <= 32:
        raise ValueError("dynamics supports 2 <= n <= 32")
    if workers is None:
        workers = int(os.environ.get("EFCAKE_THREADS", os.cpu_count() or 1))
    workers = max(1, workers)
    blocks = [np.arange(lo, min(lo + chunk, trials), dtype=np.int64) for lo in range(0, trials, chunk)]
    stats = DynamicsStats(n, trials)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for stages, cause in pool.map(lambda b: _simulate_block(n, seed, b), blocks):
            stats.histogram.update(stages.tolist())
            stats.causes["case1"] += int((cause == 0).sum())
            stats.causes["degree-exit"] += int((cause == 1).sum())
    return stats


# dynamics: exact oracle ----------------------------------------------------


def exact_expected_stages(n: int) -> Fraction:
    """Exact expected stage count of the scripted model.

    The edge count grows every non-terminal stage, so the chain is a DAG
    layered by edge count.  Layers are enumerated forward (every NEQ subset
    of every state, vectorized over states) and each layer keeps its
    transitions as (source, target, multiplicity).  Expectations are then
    solved backward with exact integers scaled by a power of two, which is
    exact because every transition probability is dyadic.
    """
    if not 2 <= n <= 11:
        raise ValueError("exact oracle supports 2 <= n <= 11")
    m = n - 1
    pairs = list(combinations(range(n), 2))
    pair_bit = np.zeros((n, n), dtype=np.uint64)
    for k, (a, b) in enumerate(pairs):
        pair_bit[a, b] = pair_bit[b, a] = np.uint64(1) << np.uint64(k)

    def adjacency(codes: np.ndarray) -> np.ndarray:
        adj = np.zeros((codes.size, n), dtype=np.uint32)
        for k, (a, b) in enumerate(pairs):
            bit = ((codes >> np.uint64(k)) & np.uint64(1)).astype(np.uint32)
            adj[:, a] |= bit << np.uint32(b)
            adj[:, b] |= bit << np.uint32(a)
        return adj

    def moves(adj: np.ndarray, codes: np.ndarray, neq: int):
        """Rows with a non-terminal move under NEQ set ``neq`` and their next codes."""
        pending = np.arange(codes.size)
        src, nxt = [], []
        for i in range(n):
            if neq >> i & 1 or not pending.size:
                continue
            miss = np.uint32(neq) & ~adj[pending, i]
            hit = miss != 0
            if not hit.any():
                continue
            r = pending[hit]
            low = miss[hit] & (~miss[hit] + np.uint32(1))
            j = np.log2(low).astype(np.int64)
            pending = pending[~hit]
            deg_i = np.bitwise_count(adj[r, i] | low)
            deg_j = np.bitwise_count(adj[r, j] | np.uint32(1 << i))
            keep = (deg_i < m) & (deg_j < m)
            src.append(r[keep])
            nxt.append(codes[r[keep]] | pair_bit[i, j[keep]])
        return src, nxt

    codes = np.zeros(1, dtype=np.uint64)
    links = []
    while True:
        adj = adjacency(codes)
        src, nxt = [], []
        for s in range(1, 1 << m):
            r, c = moves(adj, codes, s << 1)
            src += r
            nxt += c
        if not src or not sum(x.size for x in src):
            break
        src_all = np.concatenate(src)
        nxt_all = np.concatenate(nxt)
        next_codes = np.unique(nxt_all)
        keys = src_all.astype(np.int64) * next_codes.size + np.searchsorted(next_codes, nxt_all)
        uniq, counts = np.unique(keys, return_counts=True)
        links.append((codes.size, uniq // next_codes.size, uniq % next_codes.size, counts))
        codes = next_codes

    one = 1 << (m * (len(links) + 1))
    values = np.full(codes.size, one, dtype=object)
    for size, src, dst, counts in reversed(links):
        contrib = counts.astype(object) * values[dst]
        starts = np.flatnonzero(np.r_[True, src[1:] != src[:-1]])
        tot = np.zeros(size, dtype=object)
        tot[src[starts]] = np.add.reduceat(contrib, starts)
        if any(t & ((1 << m) - 1) for t in tot):
            raise ArithmeticError("non-dyadic expectation")
        values = one + (tot >> m)
    return Fraction(int(values[0]), one)


def closed_form_stages(n: int, exponent_shift: int = 2) -> float:
    """``1 + sum_{i=2}^{n} 1/(1 - 0.5^(i + shift))``, the printed closed form
    (shift 2 and shift 1 variants both appear)."""
    return 1 + sum(1 / (1 - 0.5 ** (i + exponent_shift)) for i in range(2, n + 1))


def closed_form_asymptotic(n: int) -> float:
    return (math.log(2 ** (n + 1)) - 1) / math.log(2)


# EFRW / Pikhurto recurrences -------------------------------------------------

_OMEGA = OrdinalBudget(1, 0)
_ZERO = OrdinalBudget(0, 0)


@lru_cache(maxsize=None)
def efrw_recurrence(n: int, m: int = 0) -> OrdinalBudget:
    """``T(1;m) = 0``, ``T(2;m) = w``, else ``2w + max_i T(i; m+n-i) + T(n-i; m+i)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return _ZERO
    if n == 2:
        return _OMEGA
    best = max(efrw_recurrence(i, m + n - i) + efrw_recurrence(n - i, m + i) for i in range(1, n))
    return OrdinalBudget(2, 0) + best


def _partitions(n: int, largest: int | None = None):
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first, *rest)


@lru_cache(maxsize=None)
def pikhurto_recurrence(n: int, m: int = 0) -> OrdinalBudget:
    """As EFRW, with the max taken over partitions of ``n`` into at least two groups."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return _ZERO
    if n == 2:
        return _OMEGA
    best = _ZERO
    for parts in _partitions(n):
        if len(parts) < 2:
            continue
        total = _ZERO
        for size in parts:
            total = total + pikhurto_recurrence(size, m + n - size)
        best = max(best, total)
    return OrdinalBudget(2, 0) + best


def _bound(n: int) -> OrdinalBudget:
    return OrdinalBudget(max(2 * n - 3, 0), 0)


def efrw_bound_check(n_max: int = 50, m_max: int = 3) -> bool:
    if n_max > 50:
        raise ValueError("n_max <= 50")
    return all(
        leq(efrw_recurrence(n, m), _bound(n)) for n in range(1, n_max + 1) for m in range(m_max + 1)
    )


def pikhurto_bound_check(n_max: int = 15, m_max: int = 3) -> bool:
    if n_max > 15:
        raise ValueError("n_max <= 15")
    return all(
        leq(pikhurto_recurrence(n, m), _bound(n)) for n in range(1, n_max + 1) for m in range(m_max + 1)
    )


@lru_cache(maxsize=None)
def efrw_average_phases(n: int) -> Fraction:
    """Expected number of w-phases when every controversy splits the A-players
    into a uniformly random nontrivial bipartition."""
    if n == 1:
        return Fraction(0)
    if n == 2:
        return Fraction(1)
    total = Fraction(0)
    for i in range(1, n):
        total += math.comb(n, i) * (efrw_average_phases(i) + efrw_average_phases(n - i))
    return 2 + total / (2**n - 2)
