"""JSON documents exchanged between commands.

Every document carries a ``schema`` name, a ``version`` and a ``time_unit``.
Node ids are always strings. Output is written with sorted keys and a
trailing newline so identical inputs give byte-identical files.
"""
from __future__ import annotations

import json
import os
from typing import Any

from .benchmark_gen import GeneratorParams, GroundTruth, PlantedCommunity
from .graphcore import sorted_members
from .multiscale import CommunityStore, Config, StableCommunity

SCHEMA_VERSION = 1
COMMUNITIES_SCHEMA = "stable-streams/communities"
TRUTH_SCHEMA = "stable-streams/ground-truth"
REPORT_SCHEMA = "stable-streams/metrics-report"


class DocumentError(ValueError):
    pass


def dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_json(doc: Any, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))


def read_json(path: str | os.PathLike, schema: str | None = None) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DocumentError(f"{path}: not valid JSON ({exc})") from None
    if schema is not None and doc.get("schema") != schema:
        raise DocumentError(f"{path}: expected schema {schema!r}, found {doc.get('schema')!r}")
    if doc.get("version", SCHEMA_VERSION) > SCHEMA_VERSION:
        raise DocumentError(f"{path}: unsupported document version {doc.get('version')}")
    return doc


def sort_for_output(store) -> list[StableCommunity]:
    return sorted(store, key=lambda c: (-c.gamma, c.period[0], c.period[1], sorted_members(c.nodes)))


def communities_doc(store: CommunityStore, config: Config | None = None, time_unit: str = "s") -> dict:
    rows = []
    for i, c in enumerate(sort_for_output(store)):
        rows.append(
            {
                "id": i,
                "nodes": list(sorted_members(c.nodes)),
                "period": [c.period[0], c.period[1]],
                "gamma": c.gamma,
                "origin": c.origin,
                "quality_trace": [[w, q] for w, q in sorted(c.quality_trace.items())],
            }
        )
    doc = {
        "schema": COMMUNITIES_SCHEMA,
        "version": SCHEMA_VERSION,
        "time_unit": time_unit,
        "communities": rows,
    }
    if config is not None:
        doc["config"] = config.to_dict()
    return doc


def store_from_doc(doc: dict) -> CommunityStore:
    try:
        return CommunityStore(
            StableCommunity(
                nodes=frozenset(str(n) for n in row["nodes"]),
                period=(row["period"][0], row["period"][1]),
                gamma=row["gamma"],
                quality_trace={w: q for w, q in row.get("quality_trace", [])},
                origin=row.get("origin"),
            )
            for row in doc["communities"]
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise DocumentError(f"malformed communities document: {exc!r}") from None


def truth_doc(truth: GroundTruth, time_unit: str = "step") -> dict:
    return {
        "schema": TRUTH_SCHEMA,
        "version": SCHEMA_VERSION,
        "time_unit": time_unit,
        "params": truth.params.to_dict() if truth.params else None,
        "planted": [
            {
                "nodes": list(sorted_members(c.nodes)),
                "start": c.start,
                "duration": c.duration,
                "edge_prob": c.edge_prob,
            }
            for c in truth.planted
        ],
    }


def truth_from_doc(doc: dict) -> GroundTruth:
    try:
        params = GeneratorParams(**doc["params"]) if doc.get("params") else None
        planted = tuple(
            PlantedCommunity(
                frozenset(str(n) for n in row["nodes"]), row["start"], row["duration"], row.get("edge_prob")
            )
            for row in doc["planted"]
        )
    except (KeyError, TypeError) as exc:
        raise DocumentError(f"malformed ground-truth document: {exc!r}") from None
    return GroundTruth(planted, params)
