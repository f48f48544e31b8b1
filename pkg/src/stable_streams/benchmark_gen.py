"""Synthetic link streams with planted communities at several temporal scales.

Every step carries an Erdos-Renyi noise graph. Each planted community of
duration ``d`` additionally links each pair of its members with probability
``10 / d`` at every step it is active, so short communities are dense and
long ones are sparse per step but persistent.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .linkstream import LinkStream, NodeIndex

# communities of duration d emit each member pair with probability PAIR_RATE / d
PAIR_RATE = 10
_CHUNK_CELLS = 20_000_000


@dataclass(frozen=True)
class GeneratorParams:
    T: int = 5000
    N: int = 100
    p: float = 0.1
    SC: int = 10
    rng_seed: int = 0

    def __post_init__(self):
        if self.T < 40:
            raise ValueError("T must be at least 40")
        if self.N < 16:
            raise ValueError("N must be at least 16")
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        if self.SC < 0:
            raise ValueError("SC must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PlantedCommunity:
    nodes: frozenset[str]
    start: int
    duration: int
    edge_prob: float = field(default=None)

    def __post_init__(self):
        if self.edge_prob is None:
            object.__setattr__(self, "edge_prob", min(1.0, PAIR_RATE / self.duration))

    @property
    def end(self) -> int:
        return self.start + self.duration

    @property
    def interval(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class GroundTruth:
    planted: tuple[PlantedCommunity, ...]
    params: GeneratorParams | None = None

    @property
    def universe(self) -> frozenset[str]:
        if self.params is not None:
            return frozenset(str(i) for i in range(self.params.N))
        return frozenset().union(*(c.nodes for c in self.planted)) if self.planted else frozenset()

    def intervals(self) -> list[tuple[frozenset[str], tuple[int, int]]]:
        return [(c.nodes, c.interval) for c in self.planted]


def loguniform_int(lo: int, hi: int, rng: np.random.Generator) -> int:
    """Integer in ``[lo, hi]`` with density proportional to ``1/x``."""
    if lo < 1:
        raise ValueError("lo must be >= 1")
    if lo > hi:
        raise ValueError(f"empty range [{lo}, {hi}]")
    x = math.floor(math.exp(rng.uniform(math.log(lo), math.log(hi + 1))))
    return min(max(x, lo), hi)


def _bernoulli_pairs(rng, n_steps: int, n_pairs: int, prob: float, t_first: int = 0):
    """Steps and pair indices of independent Bernoulli(prob) draws on an ``n_steps x n_pairs`` grid."""
    if prob <= 0 or n_steps == 0 or n_pairs == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    rows = max(1, _CHUNK_CELLS // n_pairs)
    ts, ps = [], []
    for a in range(0, n_steps, rows):
        b = min(n_steps, a + rows)
        hit = rng.random((b - a, n_pairs)) < prob
        t, pair = np.nonzero(hit)
        ts.append(t + a + t_first)
        ps.append(pair)
    return np.concatenate(ts), np.concatenate(ps)


def generate(params: GeneratorParams) -> tuple[LinkStream, GroundTruth]:
    """Noise stream plus ``params.SC`` planted communities; reproducible from ``params.rng_seed``."""
    rng = np.random.default_rng(params.rng_seed)
    T, N = params.T, params.N
    planted = []
    for _ in range(params.SC):
        n = loguniform_int(4, N // 4, rng)
        d = loguniform_int(10, T // 4, rng)
        s = int(rng.integers(0, T - d + 1))
        members = np.sort(rng.choice(N, size=n, replace=False))
        planted.append(PlantedCommunity(frozenset(str(i) for i in members.tolist()), s, d))

    iu, iv = np.triu_indices(N, 1)
    t_parts, u_parts, v_parts = [], [], []
    t, pair = _bernoulli_pairs(rng, T, len(iu), params.p)
    t_parts.append(t)
    u_parts.append(iu[pair])
    v_parts.append(iv[pair])
    for c in planted:
        members = np.array(sorted(int(x) for x in c.nodes))
        cu, cv = np.triu_indices(len(members), 1)
        t, pair = _bernoulli_pairs(rng, c.duration, len(cu), c.edge_prob, c.start)
        t_parts.append(t)
        u_parts.append(members[cu[pair]])
        v_parts.append(members[cv[pair]])

    times = np.concatenate(t_parts).astype(np.int64)
    index = NodeIndex([str(i) for i in range(N)])
    stream = LinkStream.from_codes(times, np.concatenate(u_parts), np.concatenate(v_parts), index)
    return stream, GroundTruth(tuple(planted), params)
