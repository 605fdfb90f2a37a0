"""Ground truth on explicit subtrees: brute-force enumeration and seeded Monte Carlo.

Nothing here uses the block factorization.  Hamiltonians are built from
explicit (anchor, target) node pairs and every moment generating function is
a plain sum over all ``2^|Delta|`` spin configurations.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import matrix_tree as mt
from .errors import DepthInsufficient, SizeLimitExceeded
from .ising_blocks import POWER, ModelSpec
from .lognum import LogNonNegative, logsumexp

ENUMERATION_CAP = 25
MC_CAP = 10**6


@dataclass(frozen=True)
class SubtreeArena:
    """Nodes of ``Delta_depth`` in level-major, lexicographic order.

    ``symbol[0] == 0`` and ``parent[0] == -1`` for the root.
    """

    level: np.ndarray
    symbol: np.ndarray
    parent: np.ndarray
    level_start: tuple[int, ...]  # level l occupies [level_start[l], level_start[l+1])

    @property
    def depth(self) -> int:
        return len(self.level_start) - 2

    @property
    def size(self) -> int:
        return len(self.level)

    def level_nodes(self, l: int) -> np.ndarray:
        return np.arange(self.level_start[l], self.level_start[l + 1])

    def ancestors(self, nodes: np.ndarray, l: int) -> np.ndarray:
        out = np.asarray(nodes)
        while out.size and self.level[out[0]] > l:
            out = self.parent[out]
        return out

    def word(self, node: int) -> tuple[int, ...]:
        w = []
        while node > 0:
            w.append(int(self.symbol[node]))
            node = int(self.parent[node])
        return tuple(reversed(w))


def build_arena(M: mt.TransitionMatrix, depth: int, max_nodes: int = MC_CAP) -> SubtreeArena:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    size = mt.delta_count(M, depth, exact_cap=None)
    if size > max_nodes:
        raise SizeLimitExceeded(f"|Delta_{depth}| = {size} nodes exceeds the cap {max_nodes}")
    succ = [[t + 1 for t in range(M.d) if M.entries[s][t]] for s in range(M.d)]
    level, symbol, parent = [0], [0], [-1]
    starts = [0, 1]
    for l in range(1, depth + 1):
        for node in range(starts[l - 1], starts[l]):
            children = range(1, M.d + 1) if l == 1 else succ[symbol[node] - 1]
            for t in children:
                level.append(l)
                symbol.append(t)
                parent.append(node)
        starts.append(len(level))
    return SubtreeArena(np.array(level), np.array(symbol), np.array(parent), tuple(starts))


@dataclass(frozen=True)
class HamiltonianTerms:
    pairs: np.ndarray  # (m, 2) anchor and target node indices
    constant: int  # root self-pairings of the power family


def hamiltonian_terms(model: ModelSpec, arena: SubtreeArena, N: int, truncated: bool = False) -> HamiltonianTerms:
    """All coupled pairs for ``k = 1..N`` (or ``cutoff(N)+1..N`` when truncated)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    top = model.top_level(N)
    if arena.depth < top:
        raise DepthInsufficient(f"sum up to N={N} needs depth {top}, arena has {arena.depth}")
    start = model.cutoff(N) + 1 if truncated else 1
    constant = 0
    chunks = [np.empty((0, 2), dtype=np.int64)]
    for k in range(start, N + 1):
        if model.kind == POWER and k == 1:
            constant += 1
            continue
        targets = arena.level_nodes(model.target_level(k))
        anchors = arena.ancestors(targets, k - 1)
        chunks.append(np.stack([anchors, targets], axis=1).astype(np.int64))
    return HamiltonianTerms(np.concatenate(chunks), constant)


def _energy(terms: HamiltonianTerms, spins: np.ndarray) -> np.ndarray:
    a, t = terms.pairs[:, 0], terms.pairs[:, 1]
    prod = spins[..., a].astype(np.int64) * spins[..., t]
    return terms.constant + prod.sum(axis=-1)


def hamiltonian(model: ModelSpec, arena: SubtreeArena, N: int, sigma, truncated: bool = False):
    """``S(sigma)``; ``sigma`` is one configuration (±1 per node) or a batch of them."""
    sigma = np.asarray(sigma)
    if sigma.shape[-1] != arena.size:
        raise ValueError(f"configuration has {sigma.shape[-1]} spins, arena has {arena.size} nodes")
    out = _energy(hamiltonian_terms(model, arena, N, truncated), sigma)
    return int(out) if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# exact enumeration


@dataclass(frozen=True)
class JointCounts:
    """Number of configurations with ``n_plus`` up-spins and Hamiltonian ``S``."""

    n_plus: np.ndarray
    energy: np.ndarray
    count: np.ndarray  # object array of Python ints
    n_nodes: int


@lru_cache(maxsize=256)
def _joint_counts(kind: str, order: int, entries, N: int, truncated: bool, max_nodes: int) -> JointCounts:
    model = ModelSpec(kind, order)
    M = mt.TransitionMatrix(entries)
    depth = model.top_level(N)
    arena = build_arena(M, depth, max_nodes=max_nodes)
    terms = hamiltonian_terms(model, arena, N, truncated)
    n = arena.size
    shifts = np.arange(n, dtype=np.int64)
    tally: dict[tuple[int, int], int] = {}
    total = 1 << n
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = (idx[:, None] >> shifts) & 1
        spins = (2 * bits - 1).astype(np.int8)
        n_plus = bits.sum(axis=1)
        energy = _energy(terms, spins)
        key = n_plus * (4 * n * n + 8 * n + 8) + (energy + 2 * n * n + 4 * n + 4)
        uniq, cnt = np.unique(key, return_counts=True)
        for u, c in zip(uniq.tolist(), cnt.tolist()):
            tally[u] = tally.get(u, 0) + c
    width = 4 * n * n + 8 * n + 8
    keys = sorted(tally)
    return JointCounts(
        np.array([k // width for k in keys], dtype=np.int64),
        np.array([k % width - (2 * n * n + 4 * n + 4) for k in keys], dtype=np.int64),
        np.array([tally[k] for k in keys], dtype=object),
        n,
    )


def joint_counts(model: ModelSpec, M: mt.TransitionMatrix, N: int, truncated: bool = False,
                 max_nodes: int = ENUMERATION_CAP) -> JointCounts:
    """Histogram of (up-spin count, energy) over all configurations of ``Delta_{a(N)N-1}``."""
    size = mt.delta_count(M, model.top_level(N), exact_cap=None)
    if size > max_nodes:
        raise SizeLimitExceeded(f"exact enumeration over {size} nodes exceeds the cap {max_nodes}")
    return _joint_counts(model.kind, model.order, M.entries, N, truncated, max_nodes)


def exact_mgf(model: ModelSpec, M: mt.TransitionMatrix, N: int, beta: float, truncated: bool = False,
              max_nodes: int = ENUMERATION_CAP) -> LogNonNegative:
    """``E_p[exp(beta S)]`` summed over every configuration, in log domain."""
    jc = joint_counts(model, M, N, truncated, max_nodes)
    p = model.p
    logs = [
        math.log(c) + n_up * math.log(p) + (jc.n_nodes - n_up) * math.log1p(-p) + beta * s
        for n_up, s, c in zip(jc.n_plus.tolist(), jc.energy.tolist(), jc.count.tolist())
    ]
    return LogNonNegative(logsumexp(logs))


def exact_distribution(model: ModelSpec, M: mt.TransitionMatrix, N: int, truncated: bool = False,
                       max_nodes: int = ENUMERATION_CAP) -> tuple[np.ndarray, np.ndarray, int]:
    """Distinct energies ``S``, their probabilities under ``P_p``, and ``|Delta|``."""
    jc = joint_counts(model, M, N, truncated, max_nodes)
    p = model.p
    mass: dict[int, list[float]] = {}
    for n_up, s, c in zip(jc.n_plus.tolist(), jc.energy.tolist(), jc.count.tolist()):
        mass.setdefault(s, []).append(c * p**n_up * (1 - p) ** (jc.n_nodes - n_up))
    energies = np.array(sorted(mass), dtype=np.int64)
    probs = np.array([math.fsum(mass[s]) for s in energies.tolist()])
    return energies, probs, jc.n_nodes


def exact_probability(model: ModelSpec, M: mt.TransitionMatrix, N: int, x: float, eps: float,
                      truncated: bool = False, max_nodes: int = ENUMERATION_CAP) -> float:
    """``P_p(S / |Delta| in [x - eps, x + eps])`` by enumeration.

    Interval ends are compared with a relative slack of 1e-12 so that points
    such as ``2/3`` typed as decimals still land inside a zero-width window.
    """
    energies, probs, n = exact_distribution(model, M, N, truncated, max_nodes)
    avg = energies / n
    slack = 1e-12 * max(1.0, abs(x) + eps)
    inside = (avg >= x - eps - slack) & (avg <= x + eps + slack)
    return math.fsum(probs[inside].tolist())


# ----------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class McHistogram:
    """Empirical distribution of ``S`` over i.i.d. Bernoulli(p) configurations."""

    energies: np.ndarray
    counts: np.ndarray
    samples: int
    n_nodes: int
    seed: int

    @property
    def values(self) -> np.ndarray:
        return self.energies / self.n_nodes

    @property
    def masses(self) -> np.ndarray:
        return self.counts / self.samples

    def mass_at(self, x: float, eps: float = 0.0) -> float:
        slack = 1e-12 * max(1.0, abs(x) + eps)
        v = self.values
        return float(self.counts[(v >= x - eps - slack) & (v <= x + eps + slack)].sum() / self.samples)

    def empirical_rates(self) -> np.ndarray:
        """``-(1/|Delta|) log P_hat`` per observed value."""
        return -np.log(self.masses) / self.n_nodes

    def mean(self) -> float:
        return float((self.values * self.counts).sum() / self.samples)

    def ks_distance(self, energies: np.ndarray, probs: np.ndarray) -> float:
        """Sup distance between the empirical CDF and an exact CDF on the same support."""
        support = np.union1d(energies, self.energies)
        emp = np.zeros(support.size)
        emp[np.searchsorted(support, self.energies)] = self.masses
        ref = np.zeros(support.size)
        ref[np.searchsorted(support, energies)] = probs
        return float(np.max(np.abs(np.cumsum(emp) - np.cumsum(ref))))


def _chunk_energies(terms, n_nodes, p, size, seed_seq):
    # Philox is counter-based; each chunk owns a spawned key, so results do not depend on scheduling
    rng = np.random.Generator(np.random.Philox(seed_seq))
    spins = np.where(rng.random((size, n_nodes)) < p, 1, -1).astype(np.int8)
    return np.unique(_energy(terms, spins), return_counts=True)


def mc_sample(model: ModelSpec, M: mt.TransitionMatrix, N: int, samples: int, seed: int,
              truncated: bool = False, workers: int = 1, chunk_size: Optional[int] = None,
              max_nodes: int = MC_CAP) -> McHistogram:
    """Histogram of ``S`` from ``samples`` independent configurations, reproducible from ``seed``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    arena = build_arena(M, model.top_level(N), max_nodes=max_nodes)
    terms = hamiltonian_terms(model, arena, N, truncated)
    n = arena.size
    if chunk_size is None:
        chunk_size = max(1, min(1 << 16, (1 << 24) // max(n, len(terms.pairs), 1)))
    sizes = [min(chunk_size, samples - s) for s in range(0, samples, chunk_size)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(terms, n, model.p, size, ss) for size, ss in zip(sizes, seeds)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _chunk_energies(*job), jobs))
    else:
        parts = [_chunk_energies(*job) for job in jobs]
    tally: dict[int, int] = {}
    for energies, counts in parts:
        for e, c in zip(energies.tolist(), counts.tolist()):
            tally[e] = tally.get(e, 0) + c
    keys = sorted(tally)
    return McHistogram(np.array(keys, dtype=np.int64), np.array([tally[k] for k in keys], dtype=np.int64),
                       samples, n, seed)
