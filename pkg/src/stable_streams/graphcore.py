"""Static-graph functions used by the detector.

The framework is parametrised by three functions, all swappable:

* a community detector ``(snapshot, rng_seed) -> Partition`` (default :func:`louvain`),
* a community quality ``(snapshot, nodes) -> float`` (default :func:`qc`),
* a node-set similarity ``(nodes, nodes) -> float`` (default :func:`jaccard`).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from ._louvain import louvain_kernel
from .linkstream import Snapshot, node_sort_key

NodeSet = frozenset


class EmptyGraphError(ValueError):
    """Raised when an algorithm needs at least one edge."""


@dataclass(frozen=True)
class Partition:
    """Disjoint cover of a graph's nodes; ``assignment`` maps node -> label."""

    assignment: Mapping[str, int]
    modularity_trace: tuple[float, ...] = field(default=(), compare=False)

    @property
    def communities(self) -> dict[int, frozenset[str]]:
        groups: dict[int, set[str]] = {}
        for node, lab in self.assignment.items():
            groups.setdefault(lab, set()).add(node)
        return {lab: frozenset(members) for lab, members in groups.items()}

    def sets(self) -> list[frozenset[str]]:
        return list(self.communities.values())

    @classmethod
    def from_sets(cls, sets: Iterable[Iterable[str]]) -> "Partition":
        assignment: dict[str, int] = {}
        for lab, members in enumerate(sets):
            for node in members:
                if node in assignment:
                    raise ValueError(f"node {node!r} in more than one community")
                assignment[node] = lab
        return cls(assignment)


CommunityDetector = Callable[[Snapshot, int], Partition]
QualityFunction = Callable[[Snapshot, frozenset], float]
SimilarityFunction = Callable[[frozenset, frozenset], float]


def louvain(g: Snapshot, rng_seed: int = 0) -> Partition:
    """Greedy modularity optimisation with hierarchical aggregation.

    Nodes are visited in a random order drawn from ``rng_seed``; a node only
    moves on a strictly positive gain. Labels are numbered by first
    appearance in node-code order, so output is reproducible.
    """
    if g.n_edges == 0:
        raise EmptyGraphError("Louvain needs a graph with at least one edge")
    active = g.active_codes
    local_u = np.searchsorted(active, g.src)
    local_v = np.searchsorted(active, g.dst)
    labels, trace = louvain_kernel(
        len(active), local_u, local_v, g.weight.astype(np.float64), np.uint32(rng_seed % 2**32)
    )
    names = g.index.labels
    assignment = {names[c]: int(lab) for c, lab in zip(active.tolist(), labels.tolist())}
    return Partition(assignment, tuple(float(x) for x in trace))


def _codes(g: Snapshot, nodes: Iterable[str]) -> np.ndarray:
    return g.index.mask(nodes)


def modularity(g: Snapshot, p: Partition) -> float:
    """Weighted Newman modularity of ``p`` on ``g``."""
    m = g.total_weight
    if m == 0:
        raise EmptyGraphError("modularity is undefined on an edgeless graph")
    if set(p.assignment) != g.nodes:
        raise ValueError("partition must cover exactly the nodes of the graph")
    lab = np.full(len(g.index), -1, dtype=np.int64)
    codes = g.index.codes
    for node, c in p.assignment.items():
        lab[codes[node]] = c
    _, lab_dense = np.unique(lab, return_inverse=True)
    lu, lv = lab_dense[g.src], lab_dense[g.dst]
    w = g.weight.astype(np.float64)
    n_lab = lab_dense.max() + 1
    inside = np.bincount(lu[lu == lv], w[lu == lv], minlength=n_lab)
    tot = np.bincount(lab_dense, g.strength, minlength=n_lab)
    return float(np.sum(inside / m - (tot / (2 * m)) ** 2))


def conductance_mask(g: Snapshot, mask: np.ndarray) -> float:
    """Conductance of the nodes flagged in ``mask`` (a vector over ``g.index``)."""
    a_in = float(g.strength[mask].sum())
    total = 2.0 * g.total_weight
    a_out = total - a_in
    # both 0/0 cases: the set is silent, or it holds every active edge
    if a_in <= 0 or a_out <= 0:
        return 1.0
    crossing = mask[g.src] != mask[g.dst]
    cut = float(g.weight[crossing].sum())
    return cut / min(a_in, a_out)


def conductance(g: Snapshot, c: Iterable[str]) -> float:
    """Cut weight over the smaller of the two volumes; nodes absent from ``g`` have zero strength."""
    return conductance_mask(g, _codes(g, c))


def qc(g: Snapshot, c: Iterable[str]) -> float:
    """Community quality as ``1 - conductance``."""
    return 1.0 - conductance(g, c)


def jaccard(a: Iterable, b: Iterable) -> float:
    a = a if isinstance(a, (set, frozenset)) else set(a)
    b = b if isinstance(b, (set, frozenset)) else set(b)
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def sorted_members(nodes: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(nodes, key=node_sort_key))
