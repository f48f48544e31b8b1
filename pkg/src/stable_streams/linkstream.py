"""Link streams: parsing, storage and windowed aggregation into snapshots."""
from __future__ import annotations

import io
import logging
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Iterable, Iterator, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

Timestamp = Union[int, float]


class ParseError(ValueError):
    """Raised when an edge list cannot be read."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def node_sort_key(label: str):
    """Numeric labels sort numerically and before any non-numeric label."""
    if label.isdigit():
        return (0, int(label), label)
    return (1, 0, label)


def sorted_nodes(nodes: Iterable[str]) -> list[str]:
    return sorted(nodes, key=node_sort_key)


class NodeIndex:
    """Bidirectional mapping between node labels and dense integer codes."""

    def __init__(self, labels: Sequence[str]):
        self.labels: tuple[str, ...] = tuple(labels)
        self.codes: dict[str, int] = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.codes) != len(self.labels):
            raise ValueError("duplicate node labels")

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: object) -> bool:
        return label in self.codes

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NodeIndex) and self.labels == other.labels

    def __hash__(self) -> int:
        return hash(self.labels)

    def mask(self, nodes: Iterable[str]) -> np.ndarray:
        """Boolean membership vector; labels unknown to the index are ignored."""
        m = np.zeros(len(self.labels), dtype=bool)
        codes = [self.codes[n] for n in nodes if n in self.codes]
        if codes:
            m[codes] = True
        return m


@dataclass(frozen=True)
class Interaction:
    t: Timestamp
    u: str
    v: str


class LinkStream:
    """Immutable, time-sorted sequence of undirected instantaneous interactions.

    Times are kept as offsets from ``t_min``; ``t_min`` itself is retained so
    reports can use the original timestamps. Endpoints are stored as codes
    into ``index`` with ``src < dst``.
    """

    def __init__(
        self,
        offsets: np.ndarray,
        src: np.ndarray,
        dst: np.ndarray,
        index: NodeIndex,
        t_min: Timestamp,
        skipped_lines: Sequence[tuple[int, str]] = (),
    ):
        if len(offsets) == 0:
            raise ValueError("a link stream needs at least one interaction")
        self.offsets = offsets
        self.src = src
        self.dst = dst
        self.index = index
        self.t_min = t_min
        self.skipped_lines = tuple(skipped_lines)
        for arr in (self.offsets, self.src, self.dst):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(
        cls,
        times: Sequence[Timestamp] | np.ndarray,
        u: Sequence[str],
        v: Sequence[str],
        skipped_lines: Sequence[tuple[int, str]] = (),
    ) -> "LinkStream":
        u = [str(x) for x in u]
        v = [str(x) for x in v]
        labels = sorted_nodes(set(u) | set(v))
        index = NodeIndex(labels)
        cu = np.fromiter((index.codes[x] for x in u), dtype=np.int32, count=len(u))
        cv = np.fromiter((index.codes[x] for x in v), dtype=np.int32, count=len(v))
        return cls.from_codes(times, cu, cv, index, skipped_lines)

    @classmethod
    def from_codes(
        cls,
        times: Sequence[Timestamp] | np.ndarray,
        u: np.ndarray,
        v: np.ndarray,
        index: NodeIndex,
        skipped_lines: Sequence[tuple[int, str]] = (),
        prune_index: bool = True,
    ) -> "LinkStream":
        t = np.asarray(times)
        if t.dtype.kind not in "iuf":
            raise ValueError("timestamps must be numeric")
        if t.dtype.kind == "f" and not np.all(np.isfinite(t)):
            raise ValueError("timestamps must be finite")
        u = np.asarray(u, dtype=np.int32)
        v = np.asarray(v, dtype=np.int32)
        if not (len(t) == len(u) == len(v)):
            raise ValueError("times, u and v must have equal length")
        if len(t) == 0:
            raise ValueError("a link stream needs at least one interaction")
        if np.any(u == v):
            raise ValueError("self-loops are not allowed")
        if t.dtype.kind in "iu":
            t = t.astype(np.int64)
        else:
            t = t.astype(np.float64)
        order = np.argsort(t, kind="stable")
        t, u, v = t[order], u[order], v[order]
        src, dst = np.minimum(u, v), np.maximum(u, v)
        if prune_index:
            used = np.unique(np.concatenate([src, dst]))
            if len(used) != len(index):
                remap = np.full(len(index), -1, dtype=np.int32)
                remap[used] = np.arange(len(used), dtype=np.int32)
                index = NodeIndex([index.labels[i] for i in used])
                src, dst = remap[src], remap[dst]
        t_min = t[0].item()
        return cls(t - t[0], src, dst, index, t_min, skipped_lines)

    @classmethod
    def from_interactions(cls, interactions: Iterable) -> "LinkStream":
        rows = [(i.t, i.u, i.v) if isinstance(i, Interaction) else tuple(i) for i in interactions]
        for t, u, v in rows:
            if str(u) == str(v):
                raise ValueError(f"self-loop on node {u!r} at t={t}")
        if not rows:
            raise ValueError("a link stream needs at least one interaction")
        times = np.array([r[0] for r in rows])
        return cls.from_arrays(times, [r[1] for r in rows], [r[2] for r in rows])

    def __len__(self) -> int:
        return len(self.offsets)

    @property
    def integral(self) -> bool:
        return self.offsets.dtype.kind in "iu"

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(self.index.labels)

    @property
    def t_max(self) -> Timestamp:
        return self.t_min + self.offsets[-1].item()

    @property
    def duration(self) -> Timestamp:
        return self.offsets[-1].item()

    @property
    def interactions(self) -> Iterator[Interaction]:
        labels = self.index.labels
        for off, a, b in zip(self.offsets.tolist(), self.src.tolist(), self.dst.tolist()):
            yield Interaction(self.t_min + off, labels[a], labels[b])

    def offset_of(self, t: Timestamp) -> Timestamp:
        return t - self.t_min

    def window_slice(self, lo: Timestamp, hi: Timestamp) -> slice:
        """Positions of interactions with offset in ``[lo, hi)``."""
        a = int(np.searchsorted(self.offsets, lo, side="left"))
        b = int(np.searchsorted(self.offsets, hi, side="left"))
        return slice(a, b)


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Weighted static graph of the interactions in ``[window_start, window_start + window_length)``.

    ``src``/``dst``/``weight`` hold one row per undirected node pair with
    ``src < dst``; codes refer to ``index``.
    """

    window_start: Timestamp
    window_length: Timestamp
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    index: NodeIndex = field(repr=False)

    @property
    def window_end(self) -> Timestamp:
        return self.window_start + self.window_length

    @property
    def n_edges(self) -> int:
        return len(self.src)

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())

    @cached_property
    def strength(self) -> np.ndarray:
        """Weighted degree of every node of the index (zero when silent)."""
        n = len(self.index)
        w = self.weight.astype(np.float64)
        return np.bincount(self.src, w, minlength=n) + np.bincount(self.dst, w, minlength=n)

    @cached_property
    def active_codes(self) -> np.ndarray:
        return np.unique(np.concatenate([self.src, self.dst]))

    @property
    def nodes(self) -> frozenset[str]:
        labels = self.index.labels
        return frozenset(labels[i] for i in self.active_codes.tolist())

    @property
    def edges(self) -> dict[tuple[str, str], int]:
        labels = self.index.labels
        return {
            (labels[a], labels[b]): w
            for a, b, w in zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist())
        }

    @property
    def node_strengths(self) -> dict[str, float]:
        labels = self.index.labels
        s = self.strength
        return {labels[i]: float(s[i]) for i in self.active_codes.tolist()}


def _aggregate(src: np.ndarray, dst: np.ndarray, n: int, binary: bool):
    key = src.astype(np.int64) * n + dst
    uniq, counts = np.unique(key, return_counts=True)
    if binary:
        counts = np.ones_like(counts)
    return (uniq // n).astype(np.int32), (uniq % n).astype(np.int32), counts.astype(np.int64)


def build_snapshot(
    stream: LinkStream, t0: Timestamp, gamma: Timestamp, binary: bool = False
) -> Snapshot:
    """Aggregate the interactions with ``t0 <= t < t0 + gamma``.

    Edge weights count interactions per pair, or are all 1 with ``binary``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    lo = stream.offset_of(t0)
    sl = stream.window_slice(lo, lo + gamma)
    src, dst, w = _aggregate(stream.src[sl], stream.dst[sl], len(stream.index), binary)
    return Snapshot(t0, gamma, src, dst, w, stream.index)


class WindowGrid:
    """The window grid of one scale, anchored at ``t0``.

    If ``t0`` lies after the first interaction the grid is extended backwards
    by whole windows, so every interaction falls in exactly one window while
    ``t0`` remains a window boundary. Snapshots are built on demand and cached.
    """

    def __init__(
        self, stream: LinkStream, gamma: Timestamp, t0: Timestamp | None = None, binary: bool = False
    ):
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        self.stream = stream
        self.gamma = gamma
        self.binary = binary
        anchor = stream.t_min if t0 is None else t0
        back = math.ceil((anchor - stream.t_min) / gamma) if anchor > stream.t_min else 0
        self.start = anchor - back * gamma
        first = stream.offset_of(self.start)
        self.n_windows = int((stream.duration - first) // gamma) + 1
        self._cache: dict[int, Snapshot] = {}

    def __len__(self) -> int:
        return self.n_windows

    def window_start(self, i: int) -> Timestamp:
        return self.start + i * self.gamma

    def index_of(self, t: Timestamp) -> int:
        return int((t - self.start) // self.gamma)

    def snapshot(self, i: int) -> Snapshot:
        snap = self._cache.get(i)
        if snap is None:
            snap = build_snapshot(self.stream, self.window_start(i), self.gamma, self.binary)
            self._cache[i] = snap
        return snap

    def __iter__(self) -> Iterator[Snapshot]:
        for i in range(self.n_windows):
            yield self.snapshot(i)

    def clear(self) -> None:
        self._cache.clear()


def snapshot_sequence(
    stream: LinkStream, gamma: Timestamp, t0: Timestamp | None = None, binary: bool = False
) -> list[Snapshot]:
    """All consecutive windows of length ``gamma`` covering the stream, the last possibly partial."""
    grid = WindowGrid(stream, gamma, t0, binary)
    return list(grid)


# ----------------------------------------------------------------------
# Edge-list ingestion
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class StreamFormat:
    """Column layout of a line-oriented edge list.

    ``delimiter=None`` splits on any run of whitespace.
    """

    t_col: int = 0
    u_col: int = 1
    v_col: int = 2
    delimiter: str | None = None
    skip_header: int = 0
    time_unit: str = "s"
    comment: str = "#"

    @classmethod
    def preset(cls, name: str, **overrides) -> "StreamFormat":
        presets = {
            "generic": cls(),
            "sociopatterns": cls(delimiter="\t"),
            "snap": cls(t_col=2, u_col=0, v_col=1),
        }
        try:
            base = presets[name]
        except KeyError:
            raise ValueError(f"unknown format preset {name!r}") from None
        if overrides:
            base = cls(**{**base.__dict__, **overrides})
        return base

    @property
    def columns(self) -> tuple[int, int, int]:
        return (self.t_col, self.u_col, self.v_col)


def _parse_time(text: str):
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not math.isfinite(value):
            raise ValueError(f"non-finite timestamp {text!r}")
        return value


def parse_linkstream(
    source: Union[str, os.PathLike, bytes, IO],
    fmt: StreamFormat | None = None,
    strict: bool = True,
) -> LinkStream:
    """Read an edge list into a :class:`LinkStream`.

    ``source`` may be a path, raw bytes, or a binary/text stream. In strict
    mode the first bad line raises :class:`ParseError`; otherwise bad lines
    are skipped and recorded in ``stream.skipped_lines`` as ``(lineno, reason)``.
    Extra columns (e.g. SocioPatterns class labels) are ignored.
    """
    fmt = fmt or StreamFormat()
    if isinstance(source, bytes):
        handle: IO = io.StringIO(source.decode("utf-8"))
        close = False
    elif isinstance(source, (str, os.PathLike)):
        handle = open(source, "r", encoding="utf-8")
        close = True
    else:
        handle = source
        close = False
    try:
        times: list = []
        us: list[str] = []
        vs: list[str] = []
        skipped: list[tuple[int, str]] = []
        need = max(fmt.columns) + 1
        for lineno, raw in enumerate(handle, start=1):
            if isinstance(raw, bytes):
                raw = raw.decode("utf-8")
            if lineno <= fmt.skip_header:
                continue
            line = raw.strip()
            if not line or (fmt.comment and line.startswith(fmt.comment)):
                continue
            parts = line.split(fmt.delimiter) if fmt.delimiter else line.split()
            try:
                if len(parts) < need:
                    raise ValueError(f"expected at least {need} columns, got {len(parts)}")
                t = _parse_time(parts[fmt.t_col].strip())
                if t < 0:
                    raise ValueError(f"negative timestamp {t}")
                u = parts[fmt.u_col].strip()
                v = parts[fmt.v_col].strip()
                if u == v:
                    raise ValueError(f"self-loop on node {u!r}")
            except ValueError as exc:
                if strict:
                    raise ParseError(str(exc), lineno) from None
                skipped.append((lineno, str(exc)))
                continue
            times.append(t)
            us.append(u)
            vs.append(v)
    finally:
        if close:
            handle.close()
    if skipped:
        logger.warning("skipped %d malformed line(s), first at line %d", len(skipped), skipped[0][0])
    if not times:
        raise ParseError("input contains no interactions")
    if any(isinstance(t, float) for t in times):
        arr = np.array(times, dtype=np.float64)
    else:
        arr = np.array(times, dtype=np.int64)
    return LinkStream.from_arrays(arr, us, vs, skipped)


def write_linkstream(stream: LinkStream, path: Union[str, os.PathLike, IO]) -> None:
    """Write ``t u v`` lines, whitespace separated (the ``generic`` preset)."""
    labels = np.asarray(stream.index.labels, dtype=object)
    times = stream.offsets + stream.t_min
    lines = [
        f"{t} {a} {b}\n"
        for t, a, b in zip(times.tolist(), labels[stream.src].tolist(), labels[stream.dst].tolist())
    ]
    if hasattr(path, "write"):
        path.writelines(lines)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(lines)
