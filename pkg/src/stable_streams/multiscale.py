"""Multi-scale stable community detection.

Scales are visited from the coarsest to the finest. At each scale the
stream is cut into windows; communities found on single windows (seeds) are
filtered by quality, dropped when redundant with an already known community,
and grown window by window in both directions for as long as the node set
remains a good community.
"""
from __future__ import annotations

import logging
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .graphcore import (
    CommunityDetector,
    QualityFunction,
    SimilarityFunction,
    jaccard,
    louvain,
    qc,
    sorted_members,
)
from .linkstream import LinkStream, Snapshot, Timestamp, WindowGrid

logger = logging.getLogger(__name__)

MIN_SEED_SIZE = 3


class LadderError(ValueError):
    """Raised when no scale satisfies the requested bounds."""


@dataclass(frozen=True)
class Config:
    """Detector thresholds.

    ``theta_e`` (quality needed to keep expanding) defaults to ``theta_s``.
    ``t0`` defaults to the first interaction of the stream.
    """

    theta_q: float = 0.7
    theta_s: float = 0.3
    theta_p: int = 3
    theta_gamma: float = 1
    theta_e: float | None = None
    t0: Timestamp | None = None
    rng_seed: int = 0
    binary: bool = False

    def __post_init__(self):
        if not 0 <= self.theta_q <= 1:
            raise ValueError("theta_q must lie in [0, 1]")
        if not 0 <= self.theta_s <= 1:
            raise ValueError("theta_s must lie in [0, 1]")
        if isinstance(self.theta_p, bool) or int(self.theta_p) != self.theta_p or self.theta_p < 1:
            raise ValueError("theta_p must be an integer >= 1")
        if not self.theta_gamma > 0:
            raise ValueError("theta_gamma must be positive")
        object.__setattr__(self, "theta_p", int(self.theta_p))
        if self.theta_e is None:
            object.__setattr__(self, "theta_e", self.theta_s)
        elif not 0 <= self.theta_e <= 1:
            raise ValueError("theta_e must lie in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Seed:
    nodes: frozenset[str]
    window_start: Timestamp
    gamma: Timestamp
    quality: float

    @property
    def window(self) -> tuple[Timestamp, Timestamp]:
        return (self.window_start, self.window_start + self.gamma)


@dataclass(frozen=True)
class StableCommunity:
    """A node set that stays a good community over ``period`` at scale ``gamma``.

    ``quality_trace`` maps each window start of the period to its quality;
    ``origin`` is the start of the window the seed was found on.
    """

    nodes: frozenset[str]
    period: tuple[Timestamp, Timestamp]
    gamma: Timestamp
    quality_trace: dict = field(compare=False)
    origin: Timestamp = None

    @property
    def n_windows(self) -> int:
        return len(self.quality_trace)

    @property
    def length(self) -> Timestamp:
        return self.period[1] - self.period[0]

    def windows(self) -> list[tuple[Timestamp, Timestamp]]:
        return [(w, w + self.gamma) for w in sorted(self.quality_trace)]


class CommunityStore:
    """Accepted communities in discovery order."""

    def __init__(self, communities: Iterable[StableCommunity] = ()):
        self.communities: list[StableCommunity] = list(communities)

    def append(self, c: StableCommunity) -> None:
        self.communities.append(c)

    def __iter__(self) -> Iterator[StableCommunity]:
        return iter(self.communities)

    def __len__(self) -> int:
        return len(self.communities)

    def __getitem__(self, i: int) -> StableCommunity:
        return self.communities[i]

    def __repr__(self) -> str:
        return f"CommunityStore({len(self)} communities)"


def _is_integral(x) -> bool:
    return isinstance(x, (int, np.integer)) or (isinstance(x, float) and x.is_integer())


def scale_ladder(
    duration: Timestamp, theta_p: int, theta_gamma: Timestamp, integral: bool | None = None
) -> list[Timestamp]:
    """Window lengths from ``duration / theta_p`` halving down to ``theta_gamma``.

    With integral time every value is floored, which yields the
    1666, 833, ..., 3, 1 ladder for a 5000-step stream.
    """
    if not duration > 0:
        raise LadderError("stream duration must be positive")
    if not theta_gamma > 0:
        raise LadderError("theta_gamma must be positive")
    if theta_p < 1:
        raise LadderError("theta_p must be >= 1")
    if integral is None:
        integral = _is_integral(duration) and _is_integral(theta_gamma)
    gamma = int(duration // theta_p) if integral else duration / theta_p
    if gamma < theta_gamma:
        raise LadderError(
            f"stream too short for requested finest scale: gamma_max={gamma} < theta_gamma={theta_gamma}"
        )
    ladder = []
    while gamma >= theta_gamma and gamma > 0:
        ladder.append(gamma)
        gamma = gamma // 2 if integral else gamma / 2
    return ladder


def window_seed(rng_seed: int, window_start: Timestamp, gamma: Timestamp) -> int:
    """Per-window detector seed; independent of worker count and scheduling."""
    words = np.frombuffer(np.array([window_start, gamma], dtype=np.float64).tobytes(), dtype=np.uint32)
    ss = np.random.SeedSequence([int(rng_seed) % 2**63, *words.tolist()])
    return int(ss.generate_state(1)[0])


def seed_order_key(s: Seed):
    return (-s.quality, s.window_start, sorted_members(s.nodes))


def _window_seeds(
    snap: Snapshot, config: Config, detector: CommunityDetector, quality: QualityFunction
) -> list[Seed]:
    if snap.n_edges == 0:
        return []
    part = detector(snap, window_seed(config.rng_seed, snap.window_start, snap.window_length))
    found = []
    for members in part.communities.values():
        if len(members) < MIN_SEED_SIZE:
            continue
        q = quality(snap, members)
        if q > config.theta_q:
            found.append(Seed(members, snap.window_start, snap.window_length, q))
    return found


def discover_seeds(
    snapshots: Sequence[Snapshot],
    config: Config,
    detector: CommunityDetector = louvain,
    quality: QualityFunction = qc,
) -> list[Seed]:
    """Communities of size >= 3 whose quality on their own window exceeds ``theta_q``, best first."""
    if len({s.window_length for s in snapshots}) > 1:
        raise ValueError("all snapshots must share one window length")
    seeds = [s for snap in snapshots for s in _window_seeds(snap, config, detector, quality)]
    seeds.sort(key=seed_order_key)
    return seeds


def _overlaps(a: tuple, b: tuple) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def is_redundant(
    seed: Seed, store: Iterable[StableCommunity], config: Config, similarity: SimilarityFunction = jaccard
) -> bool:
    """True if some stored community overlaps the seed's window and is too similar to it."""
    window = seed.window
    for c in store:
        if _overlaps(window, c.period) and similarity(seed.nodes, c.nodes) > config.theta_s:
            return True
    return False


def prune_seeds(
    seeds: Sequence[Seed],
    store: Iterable[StableCommunity],
    config: Config,
    similarity: SimilarityFunction = jaccard,
) -> list[Seed]:
    """Keep seeds unlike every stored community, or temporally disjoint from it."""
    store = list(store)
    return [s for s in seeds if not is_redundant(s, store, config, similarity)]


def expand_seed(
    s: Seed,
    stream: LinkStream,
    config: Config,
    quality: QualityFunction = qc,
    grid: WindowGrid | None = None,
) -> StableCommunity | None:
    """Grow the seed's period forwards then backwards while quality stays above ``theta_e``.

    Returns ``None`` when fewer than ``theta_p`` windows are covered.
    """
    if grid is None:
        grid = WindowGrid(stream, s.gamma, config.t0, config.binary)
    origin = grid.index_of(s.window_start)
    threshold = config.theta_e

    def score(i: int) -> float:
        snap = grid.snapshot(i)
        return quality(snap, s.nodes) if snap.n_edges else 0.0

    trace = {}
    i = origin
    while i < len(grid):
        q = score(i)
        if not q > threshold:
            break
        trace[grid.window_start(i)] = q
        i += 1
    end = i
    if end == origin:
        return None
    i = origin - 1
    while i >= 0:
        q = score(i)
        if not q > threshold:
            break
        trace[grid.window_start(i)] = q
        i -= 1
    start = i + 1
    if end - start < config.theta_p:
        return None
    return StableCommunity(
        nodes=s.nodes,
        period=(grid.window_start(start), grid.window_start(end)),
        gamma=s.gamma,
        quality_trace=dict(sorted(trace.items())),
        origin=s.window_start,
    )


# ----------------------------------------------------------------------
# parallel seed discovery
# ----------------------------------------------------------------------

_worker: dict = {}


def _init_worker(stream, config, detector, quality):
    _worker.update(stream=stream, config=config, detector=detector, quality=quality)


def _discover_chunk(task):
    gamma, indices = task
    stream, config = _worker["stream"], _worker["config"]
    grid = WindowGrid(stream, gamma, config.t0, config.binary)
    out = []
    for i in indices:
        out.extend(_window_seeds(grid.snapshot(i), config, _worker["detector"], _worker["quality"]))
        grid.clear()
    return out


def default_workers() -> int:
    env = os.environ.get("STABLE_STREAMS_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def detect(
    stream: LinkStream,
    config: Config | None = None,
    *,
    workers: int = 1,
    detector: CommunityDetector = louvain,
    quality: QualityFunction = qc,
    similarity: SimilarityFunction = jaccard,
) -> CommunityStore:
    """Find stable communities at every scale of the ladder, coarsest first.

    Seed discovery is spread over ``workers`` processes; pruning and
    expansion run sequentially in seed order so the result does not depend
    on ``workers``.
    """
    config = config or Config()
    ladder = scale_ladder(stream.duration, config.theta_p, config.theta_gamma, integral=stream.integral)
    store = CommunityStore()
    pool = None
    if workers > 1:
        ctx = multiprocessing.get_context("fork")
        pool = ProcessPoolExecutor(
            workers, mp_context=ctx, initializer=_init_worker, initargs=(stream, config, detector, quality)
        )
    try:
        for gamma in ladder:
            grid = WindowGrid(stream, gamma, config.t0, config.binary)
            if pool is None:
                seeds = [s for snap in grid for s in _window_seeds(snap, config, detector, quality)]
            else:
                n_chunks = min(len(grid), workers * 4)
                bounds = np.linspace(0, len(grid), n_chunks + 1).astype(int)
                tasks = [(gamma, range(a, b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
                seeds = [s for chunk in pool.map(_discover_chunk, tasks) for s in chunk]
            seeds.sort(key=seed_order_key)
            accepted = 0
            for s in seeds:
                if is_redundant(s, store, config, similarity):
                    continue
                c = expand_seed(s, stream, config, quality, grid)
                if c is not None:
                    store.append(c)
                    accepted += 1
            logger.info(
                "gamma=%s: %d windows, %d seeds, %d communities accepted", gamma, len(grid), len(seeds), accepted
            )
            grid.clear()
    finally:
        if pool is not None:
            pool.shutdown()
    return store
