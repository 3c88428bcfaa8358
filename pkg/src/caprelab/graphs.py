"""Type graphs: the application schema graph and per-method (augmented) navigation graphs."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace

from .ir import SELF, ApplicationModel, Instruction, is_branch_dependent, is_library_type


class AnalysisError(Exception):
    pass


@dataclass
class AppTypeGraph:
    nodes: tuple[str, ...]
    assoc: dict[tuple[str, str], tuple[str, str]]

    def target(self, type_name: str, field_name: str) -> tuple[str, str] | None:
        return self.assoc.get((type_name, field_name))

    def out(self, type_name: str) -> list[tuple[str, str, str]]:
        """(field, target, cardinality) for every association leaving type_name, by field."""
        return sorted(
            (f, tgt, card) for (t, f), (tgt, card) in self.assoc.items() if t == type_name
        )

    def to_json(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "assoc": [
                {"source": s, "field": f, "target": t, "cardinality": c}
                for (s, f), (t, c) in sorted(self.assoc.items())
            ],
        }

    def to_dot(self) -> str:
        lines = ["digraph GT {"]
        lines += [f'  "{n}";' for n in self.nodes]
        for (s, f), (t, c) in sorted(self.assoc.items()):
            style = ' style="dashed"' if c == "collection" else ""
            lines.append(f'  "{s}" -> "{t}" [label="{f}"{style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_app_type_graph(model: ApplicationModel) -> AppTypeGraph:
    assoc = {}
    for t in sorted(model.types, key=lambda t: t.name):
        for f in sorted(t.fields, key=lambda f: f.name):
            if model.is_persistent(f.type):
                assoc[(t.name, f.name)] = (f.type, f.cardinality)
    return AppTypeGraph(tuple(sorted(t.name for t in model.types)), assoc)


@dataclass(frozen=True)
class NavNode:
    id: str
    var_id: str | None
    via_field: str | None
    type_name: str
    cardinality: str = "single"
    branch_dependent: bool = False
    is_return: bool = False
    param_index: int | None = None


@dataclass(frozen=True)
class CallSite:
    ii: int
    callee: str
    receiver_nodes: tuple[str, ...]
    status: str  # inlined | truncated | overridden | intra


@dataclass
class AugmentedTypeGraph:
    method_ref: str
    root: str = "root"
    nodes: dict[str, NavNode] = field(default_factory=dict)
    edges: list[tuple[str, str]] = field(default_factory=list)
    call_sites: list[CallSite] = field(default_factory=list)
    truncated: bool = False
    _children: dict[str, list[str]] = field(default_factory=dict, repr=False)
    _parent: dict[str, str] = field(default_factory=dict, repr=False)

    def add_node(self, node: NavNode, parent: str | None = None) -> None:
        self.nodes[node.id] = node
        self._children.setdefault(node.id, [])
        if parent is not None:
            self.edges.append((parent, node.id))
            self._children[parent].append(node.id)
            self._parent[node.id] = parent

    def children(self, node_id: str) -> list[str]:
        return self._children.get(node_id, [])

    def parent(self, node_id: str) -> str | None:
        return self._parent.get(node_id)

    def params(self) -> list[NavNode]:
        return [n for n in self.nodes.values() if n.param_index is not None]

    def returns(self) -> list[str]:
        return [n.id for n in self.nodes.values() if n.is_return]

    def navigation_nodes(self) -> list[NavNode]:
        return [n for n in self.nodes.values() if n.via_field is not None]

    def has_branch_dependent(self) -> bool:
        return any(n.branch_dependent for n in self.nodes.values())

    def path(self, node_id: str) -> tuple[tuple[str, str], ...] | None:
        """Field path from the receiver root, or None for parameter-rooted nodes."""
        steps = []
        cur = node_id
        while cur != self.root:
            n = self.nodes[cur]
            if n.via_field is None:
                return None
            steps.append((n.via_field, n.cardinality))
            cur = self._parent[cur]
        return tuple(reversed(steps))

    def edge_set(self) -> set[tuple[str, str]]:
        return set(self.edges)

    def to_json(self) -> dict:
        return {
            "method": self.method_ref,
            "root": self.root,
            "truncated": self.truncated,
            "nodes": [
                {
                    "id": n.id,
                    "var": n.var_id,
                    "field": n.via_field,
                    "type": n.type_name,
                    "cardinality": n.cardinality,
                    "branchDependent": n.branch_dependent,
                    "isReturn": n.is_return,
                    "param": n.param_index,
                }
                for n in self.nodes.values()
            ],
            "edges": [list(e) for e in self.edges],
        }

    def to_dot(self) -> str:
        name = self.method_ref.replace('"', "")
        lines = [f'digraph "{name}" {{']
        for n in self.nodes.values():
            label = n.type_name if n.param_index is None else f"{n.type_name} (p{n.param_index})"
            color = ' color="orange"' if n.branch_dependent else ""
            lines.append(f'  "{n.id}" [label="{label}"{color}];')
        for a, b in self.edges:
            n = self.nodes[b]
            style = ' style="dashed"' if n.cardinality == "collection" else ""
            lines.append(f'  "{a}" -> "{b}" [label="{n.via_field}"{style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def check_compatible(ag: AugmentedTypeGraph, g: AppTypeGraph) -> list[str]:
    """Edges of ag that do not correspond to an association of g (empty when compatible)."""
    bad = []
    for a, b in ag.edges:
        src, dst = ag.nodes[a], ag.nodes[b]
        if g.target(src.type_name, dst.via_field) != (dst.type_name, dst.cardinality):
            bad.append(f"{src.type_name}.{dst.via_field} -> {dst.type_name}/{dst.cardinality}")
    return bad


# static types tracked per variable: a type name, or a ("coll"|"iter", element type) pair
_LIB = "lib"


class GraphBuilder:
    """Builds G_m and AG_m for the methods of one model, each at most once.

    Recursive call chains are cut: when a method currently being augmented is
    invoked again, its intra-procedural graph is inlined instead and the
    result is flagged as truncated.
    """

    def __init__(self, model: ApplicationModel, g: AppTypeGraph | None = None):
        self.model = model
        self.g = g or build_app_type_graph(model)
        self._intra: dict[str, AugmentedTypeGraph] = {}
        self._aug: dict[str, AugmentedTypeGraph] = {}
        self._in_progress: set[str] = set()
        self.intra_builds: Counter[str] = Counter()
        self.aug_builds: Counter[str] = Counter()

    def method_graph(self, ref: str) -> AugmentedTypeGraph:
        if ref not in self._intra:
            self.intra_builds[ref] += 1
            self._intra[ref] = self._walk(ref, inline=False)
        return self._intra[ref]

    def augmented(self, ref: str) -> AugmentedTypeGraph:
        if ref not in self._aug:
            self.aug_builds[ref] += 1
            self._in_progress.add(ref)
            try:
                self._aug[ref] = self._walk(ref, inline=True)
            finally:
                self._in_progress.discard(ref)
        return self._aug[ref]

    def build_all(self) -> dict[str, AugmentedTypeGraph]:
        return {ref: self.augmented(ref) for ref in self.model.method_refs()}

    # -----------------------------------------------------------------------

    def _walk(self, ref: str, inline: bool) -> AugmentedTypeGraph:
        model = self.model
        owner_name, _, _ = ref.rpartition(".")
        method = model.method(ref)
        if method is None:
            raise AnalysisError(f"unknown method {ref}")
        ag = AugmentedTypeGraph(ref)
        ag.add_node(NavNode("root", SELF, None, owner_name))
        vtype: dict[str, object] = {SELF: owner_name}
        vnodes: dict[str, list[str]] = {SELF: ["root"]}
        coll_src: dict[str, list[tuple[str, str]]] = {}
        for k, (_, ptype) in enumerate(method.params):
            var = f"p{k}"
            vtype[var] = ptype
            if model.is_persistent(ptype):
                pid = f"p{k}"
                ag.add_node(NavNode(pid, var, None, ptype, param_index=k))
                vnodes[var] = [pid]

        exit_loops = set()
        for ins in method.instructions:
            if ins.kind in ("break", "continue", "return") and ins.in_loop():
                exit_loops.update(ins.loop_ids())

        for ins in method.instructions:
            for u in ins.uses:
                if u not in vtype:
                    raise AnalysisError(f"{ref}[{ins.ii}]: variable {u} has unknown static type")
            bd = is_branch_dependent(ins) or any(l in exit_loops for l in ins.loop_ids())
            kind = ins.kind
            if kind == "getfield":
                self._getfield(ag, ref, ins, bd, vtype, vnodes, coll_src)
            elif kind == "arrayload":
                src = ins.uses[0]
                st = vtype[src]
                if not isinstance(st, tuple):
                    raise AnalysisError(f"{ref}[{ins.ii}]: arrayload on non-collection {src}")
                elem = st[1]
                vtype[ins.def_var] = elem
                if ins.in_loop() and model.is_persistent(elem):
                    made = []
                    for j, (parent, fname) in enumerate(coll_src.get(src, ())):
                        nid = _nid(ins.ii, j)
                        ag.add_node(
                            NavNode(nid, ins.def_var, fname, elem, "collection", bd), parent
                        )
                        made.append(nid)
                    vnodes[ins.def_var] = made
            elif kind == "invokemethod":
                self._invoke(ag, ref, ins, bd, inline, vtype, vnodes, coll_src)
            elif kind == "return" and ins.uses:
                for nid in vnodes.get(ins.uses[0], ()):
                    ag.nodes[nid] = replace(ag.nodes[nid], is_return=True)
            elif ins.def_var is not None:
                vtype[ins.def_var] = _LIB
        return ag

    def _getfield(self, ag, ref, ins: Instruction, bd, vtype, vnodes, coll_src):
        owner = ins.params.get("ownerType")
        fname = ins.params.get("fieldName")
        src = ins.uses[0]
        if vtype[src] != owner:
            raise AnalysisError(
                f"{ref}[{ins.ii}]: getfield {owner}.{fname} on {src} of type {vtype[src]}"
            )
        fd = self.model.type(owner).field(fname)
        if fd.cardinality == "collection":
            vtype[ins.def_var] = ("coll", fd.type)
            coll_src[ins.def_var] = [(n, fname) for n in vnodes.get(src, ())]
            return
        vtype[ins.def_var] = fd.type
        if self.g.target(owner, fname) is None:
            return  # primitive or non-persistent field: no navigation
        made = []
        for j, parent in enumerate(vnodes.get(src, ())):
            nid = _nid(ins.ii, j)
            ag.add_node(NavNode(nid, ins.def_var, fname, fd.type, "single", bd), parent)
            made.append(nid)
        vnodes[ins.def_var] = made

    def _invoke(self, ag, ref, ins: Instruction, bd, inline, vtype, vnodes, coll_src):
        owner = ins.params.get("ownerType")
        name = ins.params.get("methodName")
        recv = ins.uses[0] if ins.uses else None
        if is_library_type(owner) or not self.model.is_declared(owner):
            if name == "iterator" and recv is not None and isinstance(vtype[recv], tuple):
                vtype[ins.def_var] = ("iter", vtype[recv][1])
                coll_src[ins.def_var] = coll_src.get(recv, [])
            elif ins.def_var is not None:
                vtype[ins.def_var] = _LIB
            return
        callee_ref = f"{owner}.{name}"
        callee = self.model.method(callee_ref)
        # A receiver produced by a library call (e.g. popped from a queue) is
        # opaque: the callee is still analyzed but anchors nowhere.
        if vtype[recv] not in (owner, _LIB):
            raise AnalysisError(f"{ref}[{ins.ii}]: {callee_ref} invoked on {vtype[recv]}")
        if ins.def_var is not None:
            vtype[ins.def_var] = callee.returns or _LIB
        receivers = tuple(vnodes.get(recv, ()))
        if not inline:
            ag.call_sites.append(CallSite(ins.ii, callee_ref, receivers, "intra"))
            return
        if callee.overrides:
            ag.call_sites.append(CallSite(ins.ii, callee_ref, receivers, "overridden"))
            return
        if callee_ref in self._in_progress:
            cag, status = self.method_graph(callee_ref), "truncated"
            ag.truncated = True
        else:
            cag, status = self.augmented(callee_ref), "inlined"
            ag.truncated = ag.truncated or cag.truncated
        ag.call_sites.append(CallSite(ins.ii, callee_ref, receivers, status))

        anchors: dict[str, list[str]] = {cag.root: list(receivers)}
        for pnode in cag.params():
            k = pnode.param_index
            if k + 1 < len(ins.uses):
                arg = ins.uses[k + 1]
                if vtype.get(arg) == pnode.type_name:
                    anchors[pnode.id] = list(vnodes.get(arg, ()))
        mapped: dict[str, list[str]] = {}
        for anchor, targets in anchors.items():
            for j, target in enumerate(targets):
                mapped.setdefault(anchor, []).append(target)
                prefix = f"{ins.ii}/" if j == 0 else f"{ins.ii}~{j}/"
                self._copy_subtree(ag, cag, anchor, target, prefix, bd, mapped)
        if ins.def_var is not None:
            out = []
            for rid in cag.returns():
                out.extend(mapped.get(rid, ()))
            if out:
                vnodes[ins.def_var] = out

    @staticmethod
    def _copy_subtree(ag, cag, src_id, dst_id, prefix, bd, mapped):
        stack = [(src_id, dst_id)]
        while stack:
            s, d = stack.pop()
            for child in cag.children(s):
                cn = cag.nodes[child]
                nid = prefix + child
                ag.add_node(
                    replace(
                        cn,
                        id=nid,
                        branch_dependent=cn.branch_dependent or bd,
                        is_return=False,
                        param_index=None,
                    ),
                    d,
                )
                mapped.setdefault(child, []).append(nid)
                stack.append((child, nid))


def _nid(ii: int, j: int) -> str:
    return str(ii) if j == 0 else f"{ii}.{j}"


def build_method_graph(model: ApplicationModel, ref: str, g: AppTypeGraph | None = None):
    """Intra-procedural G_m of one method."""
    return GraphBuilder(model, g).method_graph(ref)


def build_augmented_graph(
    ref: str, model: ApplicationModel, g: AppTypeGraph | None = None, cache: GraphBuilder | None = None
) -> AugmentedTypeGraph:
    builder = cache or GraphBuilder(model, g)
    return builder.augmented(ref)


def graphs_to_json(g: AppTypeGraph, graphs: dict[str, AugmentedTypeGraph]) -> str:
    return json.dumps(
        {"typeGraph": g.to_json(), "methods": [graphs[r].to_json() for r in sorted(graphs)]},
        indent=1,
    )
