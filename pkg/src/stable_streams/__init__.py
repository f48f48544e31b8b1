"""Stable community detection in link streams at multiple temporal scales."""

__version__ = "0.1.0"

from .graphcore import Partition, conductance, jaccard, louvain, modularity, qc
from .linkstream import (
    Interaction,
    LinkStream,
    Snapshot,
    StreamFormat,
    build_snapshot,
    parse_linkstream,
    snapshot_sequence,
)
from .multiscale import (
    CommunityStore,
    Config,
    Seed,
    StableCommunity,
    detect,
    discover_seeds,
    expand_seed,
    prune_seeds,
    scale_ladder,
)

__all__ = [
    "CommunityStore",
    "Config",
    "Interaction",
    "LinkStream",
    "Partition",
    "Seed",
    "Snapshot",
    "StableCommunity",
    "StreamFormat",
    "build_snapshot",
    "conductance",
    "detect",
    "discover_seeds",
    "expand_seed",
    "jaccard",
    "louvain",
    "modularity",
    "parse_linkstream",
    "prune_seeds",
    "qc",
    "scale_ladder",
    "snapshot_sequence",
]
