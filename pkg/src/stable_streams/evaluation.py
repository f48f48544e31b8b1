"""Scoring detected communities against planted ones, and the detect-&-match baseline."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graphcore import CommunityDetector, QualityFunction, jaccard, louvain, qc, sorted_members
from .linkstream import LinkStream, Snapshot, Timestamp, WindowGrid, sorted_nodes
from .multiscale import CommunityStore, StableCommunity, window_seed

Interval = tuple[Timestamp, Timestamp]


@dataclass(frozen=True)
class Cover:
    """Possibly overlapping node sets over a declared universe."""

    sets: tuple[frozenset, ...]
    universe: frozenset

    def __post_init__(self):
        sets = tuple(frozenset(s) for s in self.sets if s)
        for s in sets:
            if not s <= self.universe:
                raise ValueError(f"cover set has nodes outside the universe: {sorted(s - self.universe)[:5]}")
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "universe", frozenset(self.universe))


def cover_at(
    communities: Iterable[tuple[frozenset, Interval]], t: Timestamp, universe: Iterable[str]
) -> Cover:
    """Sets active at ``t`` (``start <= t < end``), with every uncovered node as a singleton."""
    universe = frozenset(universe)
    if not universe:
        raise ValueError("universe must be non-empty")
    sets = [frozenset(nodes) for nodes, (a, b) in communities if a <= t < b]
    covered = frozenset().union(*sets) if sets else frozenset()
    sets.extend(frozenset([n]) for n in sorted_nodes(universe - covered))
    return Cover(tuple(sets), universe)


def _h(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=np.float64)
    nz = p > 0
    out[nz] = -p[nz] * np.log2(p[nz])
    return out


def _normalized_conditional_entropy(a_mat: np.ndarray, b_mat: np.ndarray, n: int) -> float:
    """Mean over sets of ``a`` of H(a_k | b) / H(a_k), best-matching set of ``b`` per ``a_k``."""
    a = a_mat.sum(axis=1).astype(np.int64)
    b = b_mat.sum(axis=1).astype(np.int64)
    inter = a_mat.astype(np.int64) @ b_mat.astype(np.int64).T
    n11 = inter
    n10 = a[:, None] - inter
    n01 = b[None, :] - inter
    n00 = n - a[:, None] - b[None, :] + inter
    h11, h10, h01, h00 = (_h(x / n) for x in (n11, n10, n01, n00))
    # a candidate only counts when it is positively correlated with a_k
    admissible = h11 + h00 > h01 + h10
    h_b = _h(b / n) + _h((n - b) / n)
    cond = (h11 + h10 + h01 + h00) - h_b[None, :]
    cond = np.where(admissible, cond, np.inf)
    best = cond.min(axis=1) if cond.shape[1] else np.full(len(a), np.inf)
    h_a = _h(a / n) + _h((n - a) / n)
    best = np.where(np.isinf(best), h_a, best)
    degenerate = h_a <= 0
    safe = np.where(degenerate, 1.0, h_a)
    ratio = np.clip(best / safe, 0.0, 1.0)
    # a set with no entropy (empty or the whole universe) is explained only by an identical set
    exact = np.any((n10 == 0) & (n01 == 0), axis=1) if inter.shape[1] else np.zeros(len(a), bool)
    ratio = np.where(degenerate, np.where(exact, 0.0, 1.0), ratio)
    return float(ratio.mean())


def _membership(cover: Cover, order: Mapping[str, int]) -> np.ndarray:
    mat = np.zeros((len(cover.sets), len(order)), dtype=bool)
    for r, s in enumerate(cover.sets):
        mat[r, [order[x] for x in s]] = True
    return mat


def overlapping_nmi(x: Cover, y: Cover) -> float:
    """Normalised mutual information between two covers (Lancichinetti-Fortunato-Kertesz form)."""
    if x.universe != y.universe:
        raise ValueError("covers must share one universe")
    if not x.sets or not y.sets:
        raise ValueError("covers must contain at least one set")
    order = {node: i for i, node in enumerate(sorted_nodes(x.universe))}
    n = len(order)
    xm, ym = _membership(x, order), _membership(y, order)
    hx = _normalized_conditional_entropy(xm, ym, n)
    hy = _normalized_conditional_entropy(ym, xm, n)
    return 1.0 - 0.5 * (hx + hy)


# ----------------------------------------------------------------------
# dynamic communities as interval lists
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class DynamicCommunity:
    """A chain of per-window member sets at one window length."""

    gamma: Timestamp
    segments: tuple[tuple[Timestamp, frozenset], ...]

    @property
    def period(self) -> Interval:
        return (self.segments[0][0], self.segments[-1][0] + self.gamma)

    @property
    def n_windows(self) -> int:
        return len(self.segments)

    def intervals(self) -> list[tuple[frozenset, Interval]]:
        return [(members, (w, w + self.gamma)) for w, members in self.segments]


def as_intervals(communities) -> list[tuple[frozenset, Interval]]:
    """Flatten stores, stable or dynamic communities, ground truth or pairs into ``(nodes, interval)``."""
    if hasattr(communities, "intervals") and not isinstance(communities, DynamicCommunity):
        return communities.intervals()
    out = []
    for c in communities:
        if isinstance(c, StableCommunity):
            out.append((c.nodes, c.period))
        elif isinstance(c, DynamicCommunity):
            out.extend(c.intervals())
        elif hasattr(c, "interval") and hasattr(c, "nodes"):
            out.append((c.nodes, c.interval))
        else:
            nodes, interval = c
            out.append((frozenset(nodes), tuple(interval)))
    return out


def _sample_count(a, b, t_start, stride, t_end) -> int:
    """Number of sample points ``t_start + k*stride`` in ``[a, b)`` and below ``t_end``."""
    b = min(b, t_end)
    if b <= a:
        return 0
    first = max(0, math.ceil((a - t_start) / stride))
    last = math.ceil((b - t_start) / stride)  # exclusive
    return max(0, last - first)


def timeline_nmi(
    detected,
    truth,
    T: Timestamp,
    universe: Iterable[str] | None = None,
    stride: Timestamp = 1,
    t_start: Timestamp = 0,
) -> float:
    """Mean overlapping NMI between the two covers at steps ``t_start, t_start+stride, ... < T``.

    Covers only change at interval boundaries, so each constant segment is
    scored once and weighted by its number of steps.
    """
    det = as_intervals(detected)
    tru = as_intervals(truth)
    if universe is None:
        universe = getattr(truth, "universe", None)
    if universe is None:
        raise ValueError("a node universe is required")
    universe = frozenset(universe)
    for nodes, _ in det + tru:
        if not frozenset(nodes) <= universe:
            raise ValueError("communities reference nodes outside the universe")
    n_samples = _sample_count(t_start, T, t_start, stride, T)
    if n_samples == 0:
        raise ValueError("no sample steps in [t_start, T)")

    events: dict = {}
    for side, items in ((0, det), (1, tru)):
        for k, (_, (a, b)) in enumerate(items):
            if b <= t_start or a >= T or b <= a:
                continue
            events.setdefault(max(a, t_start), []).append((side, k, True))
            events.setdefault(b, []).append((side, k, False))
    points = sorted(set(events) | {t_start})
    active = (set(), set())
    cache: dict = {}
    total = 0.0
    for i, p in enumerate(points):
        for side, k, on in events.get(p, ()):
            (active[side].add if on else active[side].discard)(k)
        nxt = points[i + 1] if i + 1 < len(points) else T
        count = _sample_count(p, nxt, t_start, stride, T)
        if count == 0:
            continue
        key = (frozenset(active[0]), frozenset(active[1]))
        score = cache.get(key)
        if score is None:
            cx = cover_at([(det[k][0], (p, nxt)) for k in sorted(key[0])], p, universe)
            cy = cover_at([(tru[k][0], (p, nxt)) for k in sorted(key[1])], p, universe)
            score = cache[key] = overlapping_nmi(cx, cy)
        total += score * count
    return total / n_samples


# ----------------------------------------------------------------------
# detect & match baseline
# ----------------------------------------------------------------------


def detect_and_match(
    snapshots: Sequence[Snapshot],
    match_threshold: float = 0.7,
    detector: CommunityDetector = louvain,
    rng_seed: int = 0,
) -> list[DynamicCommunity]:
    """Static detection on every window, chaining each community to its best Jaccard match in the next window.

    A match needs similarity >= ``match_threshold``; equal similarities go to
    the candidate with the smallest sorted node list. Each community joins at
    most one chain; contested targets go to the best-matching predecessor.
    """
    if not snapshots:
        return []
    gamma = snapshots[0].window_length
    if any(s.window_length != gamma for s in snapshots):
        raise ValueError("all snapshots must share one window length")
    per_window: list[list[frozenset]] = []
    for snap in snapshots:
        if snap.n_edges == 0:
            per_window.append([])
            continue
        part = detector(snap, window_seed(rng_seed, snap.window_start, gamma))
        per_window.append(sorted(part.sets(), key=sorted_members))

    chains: list[list] = []
    open_chains: dict[int, int] = {}  # community position in current window -> chain id
    for i, comms in enumerate(per_window):
        if i == 0:
            for k, c in enumerate(comms):
                open_chains[k] = len(chains)
                chains.append([(snapshots[0].window_start, c)])
            continue
        prev = per_window[i - 1]
        claims: dict[int, tuple] = {}
        for a, pc in enumerate(prev):
            best_b, best_j = None, -1.0
            for b, cc in enumerate(comms):
                j = jaccard(pc, cc)
                if j > best_j:  # comms are pre-sorted, so first max is the lexicographic tie-break
                    best_b, best_j = b, j
            if best_b is None or best_j < match_threshold:
                continue
            rank = (-best_j, sorted_members(pc))
            if best_b not in claims or rank < claims[best_b][0]:
                claims[best_b] = (rank, a)
        new_open: dict[int, int] = {}
        for b, c in enumerate(comms):
            if b in claims and claims[b][1] in open_chains:
                cid = open_chains[claims[b][1]]
            else:
                cid = len(chains)
                chains.append([])
            chains[cid].append((snapshots[i].window_start, c))
            new_open[b] = cid
        open_chains = new_open
    return [DynamicCommunity(gamma, tuple(ch)) for ch in chains if ch]


# ----------------------------------------------------------------------
# community statistics
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsReport:
    community_count: int
    mean_persistence: float | None = None
    mean_size: float | None = None
    mean_stability: float | None = None
    mean_density: float | None = None
    mean_Q: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _induced_density(snap: Snapshot, members: frozenset) -> float:
    n = len(members)
    if n < 2:
        return 0.0
    mask = snap.index.mask(members)
    inside = int(np.count_nonzero(mask[snap.src] & mask[snap.dst]))
    mean_degree = 2.0 * inside / n
    return mean_degree / (n - 1)


def _tracks(communities) -> list[tuple[Timestamp, list[tuple[Timestamp, frozenset]]]]:
    out = []
    for c in communities:
        if isinstance(c, StableCommunity):
            out.append((c.gamma, [(w, c.nodes) for w in sorted(c.quality_trace)]))
        elif isinstance(c, DynamicCommunity):
            out.append((c.gamma, list(c.segments)))
        else:
            raise TypeError(f"unsupported community type {type(c).__name__}")
    return out


def community_stats(
    communities: CommunityStore | Iterable,
    stream: LinkStream,
    t0: Timestamp | None = None,
    binary: bool = False,
    quality: QualityFunction = qc,
) -> MetricsReport:
    """Per-community persistence, size, stability, density and quality, averaged over communities.

    Statistics are recomputed on the snapshots of each community's own scale.
    """
    tracks = _tracks(communities)
    if not tracks:
        return MetricsReport(0)
    grids: dict = {}
    pers, sizes, stabs, dens, qs = [], [], [], [], []
    for gamma, windows in tracks:
        grid = grids.get(gamma)
        if grid is None:
            grid = grids[gamma] = WindowGrid(stream, gamma, t0, binary)
        pers.append(len(windows))
        sizes.append(np.mean([len(m) for _, m in windows]))
        if len(windows) > 1:
            stabs.append(np.mean([jaccard(a[1], b[1]) for a, b in zip(windows, windows[1:])]))
        d_w, q_w = [], []
        for w, members in windows:
            snap = grid.snapshot(grid.index_of(w))
            d_w.append(_induced_density(snap, members))
            q_w.append(quality(snap, members) if snap.n_edges else 0.0)
        dens.append(np.mean(d_w))
        qs.append(np.mean(q_w))
    return MetricsReport(
        community_count=len(tracks),
        mean_persistence=float(np.mean(pers)),
        mean_size=float(np.mean(sizes)),
        mean_stability=float(np.mean(stabs)) if stabs else None,
        mean_density=float(np.mean(dens)),
        mean_Q=float(np.mean(qs)),
    )


def class_purity(nodes: Iterable[str], classes: Mapping[str, str]) -> float:
    """Fraction of labelled members that share the most common class label."""
    labels = [classes[n] for n in nodes if n in classes]
    if not labels:
        return 0.0
    return Counter(labels).most_common(1)[0][1] / len(labels)


def read_node_classes(path) -> dict[str, str]:
    """Node -> class label from a SocioPatterns file (``t i j Ci Cj`` columns)."""
    classes: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) < 5:
                continue
            classes.setdefault(parts[1], parts[3])
            classes.setdefault(parts[2], parts[4])
    return classes
