"""Prefetching hints derived from augmented method graphs, plus the ROP baseline."""

from __future__ import annotations

import json
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .graphs import AppTypeGraph, AugmentedTypeGraph, GraphBuilder, build_app_type_graph
from .ir import ApplicationModel

Path_ = tuple[tuple[str, str], ...]

COLLECTION_MARK = "@collection"


class HintError(ValueError):
    pass


class UnknownType(KeyError):
    pass


@dataclass(frozen=True, order=True)
class Hint:
    source_type: str
    path: Path_

    def __str__(self) -> str:
        return format_path(self.path)


def format_path(path: Path_) -> str:
    return ".".join(f + (COLLECTION_MARK if c == "collection" else "") for f, c in path)


def parse_path(text: str) -> Path_:
    steps = []
    for part in text.split("."):
        if not part:
            raise HintError(f"empty step in hint {text!r}")
        if part.endswith(COLLECTION_MARK):
            steps.append((part[: -len(COLLECTION_MARK)], "collection"))
        else:
            steps.append((part, "single"))
    return tuple(steps)


def maximal(paths: Iterable[Path_]) -> set[Path_]:
    """Drop every path that is a strict prefix of another one."""
    ps = set(p for p in paths if p)
    prefixes = {p[:k] for p in ps for k in range(1, len(p))}
    return ps - prefixes


def prefix_closure(paths: Iterable[Path_]) -> set[Path_]:
    return {p[:k] for p in paths for k in range(1, len(p) + 1)}


@dataclass(frozen=True)
class HintSet:
    method_ref: str
    source_type: str
    hints: frozenset[Hint] = frozenset()

    @classmethod
    def from_paths(cls, method_ref: str, source_type: str, paths: Iterable[Path_]) -> HintSet:
        return cls(method_ref, source_type, frozenset(Hint(source_type, p) for p in maximal(paths)))

    def paths(self) -> list[Path_]:
        return sorted(h.path for h in self.hints)

    def strings(self) -> list[str]:
        return sorted(str(h) for h in self.hints)

    def closure(self) -> set[Path_]:
        return prefix_closure(h.path for h in self.hints)

    def covers(self, path: Path_) -> bool:
        return any(h.path[: len(path)] == path for h in self.hints)

    def __len__(self) -> int:
        return len(self.hints)


def generate_hints(ag: AugmentedTypeGraph) -> HintSet:
    """One hint per maximal root-to-leaf navigation path of the graph.

    Branch-dependent navigations are kept. Parameter-rooted subtrees are not
    reachable from the receiver and therefore yield no hints of their own;
    they surface in callers once bound to an argument.
    """
    paths = []
    stack = [(ag.root, ())]
    while stack:
        nid, path = stack.pop()
        kids = ag.children(nid)
        if not kids and path:
            paths.append(path)
        for c in kids:
            n = ag.nodes[c]
            stack.append((c, path + ((n.via_field, n.cardinality),)))
    return HintSet.from_paths(ag.method_ref, ag.nodes[ag.root].type_name, paths)


def validate_hint(g: AppTypeGraph, source_type: str, path: Path_) -> None:
    t = source_type
    for f, card in path:
        tgt = g.target(t, f)
        if tgt is None or tgt[1] != card:
            raise HintError(f"invalid step {t}.{f}{COLLECTION_MARK if card == 'collection' else ''}")
        t = tgt[0]


# ---------------------------------------------------------------------------
# caller-based dedup


@dataclass
class CallGraph:
    callers: dict[str, set[str]]
    # callee -> [(caller, receiver paths at the call site or None if not receiver-rooted)]
    sites: dict[str, list[tuple[str, tuple[Path_, ...] | None]]] = field(default_factory=dict)
    entry_points: frozenset[str] = frozenset()


def build_call_graph(model: ApplicationModel, graphs: dict[str, AugmentedTypeGraph]) -> CallGraph:
    callers: dict[str, set[str]] = {ref: set() for ref in model.method_refs()}
    sites: dict[str, list] = defaultdict(list)
    for ref, _, m in model.methods():
        ag = graphs.get(ref)
        by_ii = {cs.ii: cs for cs in ag.call_sites} if ag else {}
        for ins in m.instructions:
            if ins.kind != "invokemethod":
                continue
            callee = f"{ins.params.get('ownerType')}.{ins.params.get('methodName')}"
            if model.method(callee) is None:
                continue
            callers[callee].add(ref)
            cs = by_ii.get(ins.ii)
            paths = None
            if cs is not None and cs.receiver_nodes:
                ps = [ag.path(n) for n in cs.receiver_nodes]
                if all(p is not None for p in ps):
                    paths = tuple(ps)
            sites[callee].append((ref, paths))
    return CallGraph(callers, dict(sites), frozenset(model.entry_points))


def dedup_hints(
    all_hints: dict[str, HintSet], cg: CallGraph, fixpoint: bool = False
) -> dict[str, HintSet]:
    """Remove from each callee the hints that every one of its call sites already covers.

    A callee hint h is covered at a call site when the receiver path of that
    site followed by h is a prefix of some hint of the caller. Entry points
    and methods without callers are left untouched. One pass by default;
    ``fixpoint=True`` repeats until nothing changes.
    """
    current = dict(all_hints)
    while True:
        nxt = {}
        for ref, hs in current.items():
            sites = cg.sites.get(ref, [])
            if ref in cg.entry_points or not cg.callers.get(ref) or not sites:
                nxt[ref] = hs
                continue
            keep = []
            for h in hs.hints:
                if not all(_covered(current.get(c), recv, h.path) for c, recv in sites):
                    keep.append(h)
            nxt[ref] = HintSet(ref, hs.source_type, frozenset(keep))
        if not fixpoint or nxt == current:
            return nxt
        current = nxt


def _covered(caller: HintSet | None, receiver_paths, path: Path_) -> bool:
    if caller is None or receiver_paths is None:
        return False
    return all(caller.covers(rp + path) for rp in receiver_paths)


# ---------------------------------------------------------------------------
# Referenced-Objects Predictor


def rop_hints(root: str, depth: int, g: AppTypeGraph) -> HintSet:
    """All single-association paths from root up to depth; collections never followed.

    A path stops before revisiting a type already on it, so the result stops
    growing once depth exceeds the longest such path.
    """
    if root not in g.nodes:
        raise UnknownType(root)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    paths = []

    def walk(t: str, path: Path_, seen: frozenset[str]):
        extended = False
        if len(path) < depth:
            for f, tgt, card in g.out(t):
                if card != "single" or tgt in seen:
                    continue
                extended = True
                walk(tgt, path + ((f, "single"),), seen | {tgt})
        if not extended and path:
            paths.append(path)

    walk(root, (), frozenset({root}))
    return HintSet.from_paths(f"rop:{root}", root, paths)


# ---------------------------------------------------------------------------
# whole-program analysis


@dataclass
class Analysis:
    model: ApplicationModel
    g: AppTypeGraph
    graphs: dict[str, AugmentedTypeGraph]
    raw: dict[str, HintSet]
    hints: dict[str, HintSet]
    call_graph: CallGraph
    builder: GraphBuilder
    seconds: float


def analyze(model: ApplicationModel, dedup: bool = True, fixpoint: bool = False) -> Analysis:
    t0 = time.perf_counter()
    g = build_app_type_graph(model)
    builder = GraphBuilder(model, g)
    graphs = builder.build_all()
    raw = {ref: generate_hints(ag) for ref, ag in graphs.items()}
    cg = build_call_graph(model, graphs)
    hints = dedup_hints(raw, cg, fixpoint) if dedup else dict(raw)
    return Analysis(model, g, graphs, raw, hints, cg, builder, time.perf_counter() - t0)


def hints_to_json(hints: dict[str, HintSet]) -> str:
    return json.dumps({ref: hints[ref].strings() for ref in sorted(hints)}, indent=1)


def hints_from_json(text: str, model: ApplicationModel) -> dict[str, HintSet]:
    """Parse a hint file and check every path against the model's type graph."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HintError(f"malformed hint file: {exc}") from exc
    if not isinstance(data, dict):
        raise HintError("hint file must map method references to lists")
    g = build_app_type_graph(model)
    out = {}
    for ref, items in data.items():
        if model.method(ref) is None:
            raise HintError(f"unknown method {ref}")
        source = ref.rpartition(".")[0]
        paths = []
        for text_ in items:
            p = parse_path(text_)
            validate_hint(g, source, p)
            paths.append(p)
        out[ref] = HintSet.from_paths(ref, source, paths)
    return out


def load_hints(path: str | Path, model: ApplicationModel) -> dict[str, HintSet]:
    return hints_from_json(Path(path).read_text(encoding="utf-8"), model)
