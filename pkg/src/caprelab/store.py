"""Object records, store configuration and data placement across storage nodes."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .ir import ApplicationModel


class PlacementError(ValueError):
    pass


class DatasetError(ValueError):
    pass


@dataclass
class ObjectRecord:
    oid: str
    type_name: str
    singles: dict[str, str | None] = field(default_factory=dict)
    collections: dict[str, list[str]] = field(default_factory=dict)
    values: dict[str, object] = field(default_factory=dict)
    node: int = 0

    def to_dict(self) -> dict:
        d = {"oid": self.oid, "type": self.type_name, "singles": self.singles,
             "collections": self.collections}
        if self.values:
            d["values"] = self.values
        return d


def dataset_to_json(records: list[ObjectRecord]) -> str:
    return json.dumps([r.to_dict() for r in records])


def dataset_from_json(text: str) -> list[ObjectRecord]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"malformed dataset: {exc}") from exc
    out = []
    for d in data:
        out.append(
            ObjectRecord(
                d["oid"],
                d["type"],
                dict(d.get("singles") or {}),
                {k: list(v) for k, v in (d.get("collections") or {}).items()},
                dict(d.get("values") or {}),
            )
        )
    return out


def load_dataset(path: str | Path) -> list[ObjectRecord]:
    return dataset_from_json(Path(path).read_text(encoding="utf-8"))


def check_dataset(records: list[ObjectRecord], model: ApplicationModel) -> list[str]:
    """Type-consistency problems of a dataset against a model (empty when consistent)."""
    problems = []
    by_oid = {r.oid: r for r in records}
    if len(by_oid) != len(records):
        problems.append("duplicate oids")
    for r in records:
        t = model.type(r.type_name)
        if t is None:
            problems.append(f"{r.oid}: unknown type {r.type_name}")
            continue
        for name, ref in r.singles.items():
            fd = t.field(name)
            if fd is None or fd.cardinality != "single":
                problems.append(f"{r.oid}: no single field {name}")
            elif ref is not None and (ref not in by_oid or by_oid[ref].type_name != fd.type):
                problems.append(f"{r.oid}.{name}: bad reference {ref}")
        for name, refs in r.collections.items():
            fd = t.field(name)
            if fd is None or fd.cardinality != "collection":
                problems.append(f"{r.oid}: no collection field {name}")
                continue
            for ref in refs:
                if ref not in by_oid or by_oid[ref].type_name != fd.type:
                    problems.append(f"{r.oid}.{name}: bad element {ref}")
    return problems


@dataclass(frozen=True)
class Policy:
    kind: str  # none | rop | capre
    depth: int = 0

    @classmethod
    def parse(cls, text: str | Policy) -> Policy:
        if isinstance(text, Policy):
            return text
        text = text.strip().lower()
        if text in ("none", "capre"):
            return cls(text)
        if text.startswith("rop"):
            _, _, d = text.partition(":")
            depth = int(d or 1)
            if depth < 1:
                raise ValueError("rop depth must be >= 1")
            return cls("rop", depth)
        raise ValueError(f"unknown policy {text!r}")

    def __str__(self) -> str:
        return f"rop:{self.depth}" if self.kind == "rop" else self.kind


@dataclass(frozen=True)
class StoreConfig:
    num_nodes: int = 4
    remote_latency: float = 100
    local_latency: float = 0
    channels: int = 4
    policy: Policy = Policy("none")
    seed: int = 0
    cache_capacity: int | None = None
    compute_latency: float = 1  # virtual time per executed IR instruction
    scheduler_overhead: float = 0  # per prefetch task

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy.parse(self.policy))
        if min(self.remote_latency, self.local_latency, self.compute_latency,
               self.scheduler_overhead) < 0:
            raise ValueError("latencies must be >= 0")
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if self.cache_capacity is not None and self.cache_capacity < 1:
            raise ValueError("cache capacity must be positive")

    def with_(self, **kw) -> StoreConfig:
        from dataclasses import replace

        return replace(self, **kw)


@dataclass
class StoreState:
    objects: dict[str, ObjectRecord]
    config: StoreConfig

    def node_counts(self) -> list[int]:
        counts = [0] * self.config.num_nodes
        for r in self.objects.values():
            counts[r.node] += 1
        return counts


def build_store(dataset: list[ObjectRecord], cfg: StoreConfig) -> StoreState:
    """Place objects on storage nodes.

    Elements of each collection are spread round-robin starting at a seeded
    offset, so one collection spans all nodes. Objects outside any collection
    are dealt round-robin in dataset order. The first placement of an object wins.
    """
    if cfg.num_nodes < 1:
        raise PlacementError("need at least one storage node")
    n = cfg.num_nodes
    rng = random.Random(cfg.seed)
    placed: dict[str, int] = {}
    for rec in dataset:
        for fname in sorted(rec.collections):
            base = rng.randrange(n)
            for i, oid in enumerate(rec.collections[fname]):
                if oid not in placed:
                    placed[oid] = (base + i) % n
    k = rng.randrange(n)
    objects = {}
    for rec in dataset:
        node = placed.get(rec.oid)
        if node is None:
            node = k % n
            k += 1
        objects[rec.oid] = ObjectRecord(
            rec.oid, rec.type_name, rec.singles, rec.collections, rec.values, node
        )
    return StoreState(objects, cfg)
