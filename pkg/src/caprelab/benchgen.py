"""Deterministic generators for the benchmark families.

Each family provides a model (method bodies written with MethodBuilder), a
dataset sized by its size parameters, and named traversals. Everything is a
pure function of (family, size parameters, seed).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import ir
from .builder import MethodBuilder, type_decl
from .ir import ApplicationModel
from .store import ObjectRecord
from .trace import WorkloadTrace

FAMILIES = ("bank", "oo7", "wordcount", "kmeans", "graph")
TRAVERSALS = {
    "bank": ("setAllTransCustomers",),
    "oo7": ("t1", "t2a", "t2b", "t2c"),
    "wordcount": ("count",),
    "kmeans": ("kmeans",),
    "graph": ("dfs", "bellmanford"),
}
LIB_SET, LIB_QUEUE, LIB_DIST, LIB_INT = "lib.Set", "lib.Queue", "lib.DistMap", "lib.Int"


class SpecError(ValueError):
    pass


@dataclass
class BenchmarkSpec:
    family: str
    size: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}")
        for k, v in self.size.items():
            if isinstance(v, (int, float)) and not isinstance(v, bool) and v <= 0:
                raise SpecError(f"size parameter {k} must be positive")


@dataclass
class Benchmark:
    model: ApplicationModel
    dataset: list[ObjectRecord]
    traces: dict[str, WorkloadTrace]
    root: str  # oid of the family's root object
    info: dict = field(default_factory=dict)


class _Data:
    """Accumulates object records with sequential oids per type."""

    def __init__(self):
        self.records: list[ObjectRecord] = []
        self._counts: dict[str, int] = {}

    def new(self, type_name: str, **values) -> ObjectRecord:
        k = self._counts.get(type_name, 0)
        self._counts[type_name] = k + 1
        rec = ObjectRecord(f"{type_name}#{k}", type_name, {}, {}, dict(values))
        self.records.append(rec)
        return rec


# ---------------------------------------------------------------------------
# bank


def bank_model() -> ApplicationModel:
    # getAccount: this.emp is read once ahead of the if/else, matching the single
    # Employee node of the method's type graph.
    b = MethodBuilder("Transaction", "getAccount", returns="Account")
    t = b.getfield(b.this, "Transaction", "type")
    tid = b.getfield(t, "TransactionType", "typeID")
    emp = b.getfield(b.this, "Transaction", "emp")
    with b.if_else(tid) as otherwise:
        b.noop(emp)  # emp.doSmth()
        otherwise()
        dept = b.getfield(emp, "Employee", "dept")
        b.noop(dept)  # dept.doSmthElse()
    acct = b.getfield(b.this, "Transaction", "account")
    b.ret(acct)
    get_account = b.build()

    b = MethodBuilder("Account", "setCustomer", params=[("newCust", "Customer")])
    cust = b.getfield(b.this, "Account", "cust")
    c1 = b.getfield(cust, "Customer", "company")
    c2 = b.getfield(b.param(0), "Customer", "company")
    with b.if_(c1, c2):
        b.noop(b.this, b.param(0))  # this.cust = newCust
    set_customer = b.build()

    b = MethodBuilder("BankManagement", "setAllTransCustomers")
    trans = b.getfield(b.this, "BankManagement", "transactions")
    with b.foreach(trans) as tr:
        acct = b.invoke(tr, "Transaction", "getAccount")
        mgr = b.getfield(b.this, "BankManagement", "manager")
        b.invoke(acct, "Account", "setCustomer", [mgr], result=False)
    set_all = b.build()

    types = (
        type_decl(
            "BankManagement",
            [("transactions", "Transaction", "collection"), ("manager", "Customer")],
            [set_all],
        ),
        type_decl(
            "Transaction",
            [("account", "Account"), ("emp", "Employee"), ("type", "TransactionType")],
            [get_account],
        ),
        type_decl("TransactionType", [("typeID", "int")]),
        type_decl("Account", [("cust", "Customer"), ("number", "int")], [set_customer]),
        type_decl("Customer", [("company", "Company"), ("name", "string")]),
        type_decl("Company", [("name", "string")]),
        type_decl("Employee", [("dept", "Department"), ("name", "string")]),
        type_decl("Department", [("name", "string")]),
    )
    return ApplicationModel(types, ("BankManagement.setAllTransCustomers",))


def bank(transactions: int = 10, seed: int = 0) -> Benchmark:
    rng = random.Random(seed)
    d = _Data()
    companies = [d.new("Company", name=f"co{i}") for i in range(3)]
    depts = [d.new("Department", name=f"dept{i}") for i in range(2)]
    emps = []
    for i in range(4):
        e = d.new("Employee", name=f"emp{i}")
        e.singles["dept"] = rng.choice(depts).oid
        emps.append(e)
    ttypes = [d.new("TransactionType", typeID=i) for i in range(1, 3)]

    def customer(i):
        c = d.new("Customer", name=f"cust{i}")
        c.singles["company"] = rng.choice(companies).oid
        return c

    manager = customer(0)
    bm = d.new("BankManagement")
    bm.singles["manager"] = manager.oid
    trans = []
    for i in range(transactions):
        acct = d.new("Account", number=i)
        acct.singles["cust"] = customer(i + 1).oid
        tr = d.new("Transaction")
        tr.singles.update(
            account=acct.oid, emp=rng.choice(emps).oid, type=rng.choice(ttypes).oid
        )
        trans.append(tr.oid)
    bm.collections["transactions"] = trans
    trace = WorkloadTrace([("BankManagement.setAllTransCustomers", bm.oid)])
    return Benchmark(bank_model(), d.records, {"setAllTransCustomers": trace}, bm.oid)


def write_bank_fixture(path: str | Path) -> None:
    Path(path).write_text(ir.dumps(bank_model()) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# OO7

OO7_SIZES = {
    # levels of the assembly tree, assembly fan-out, composite parts,
    # atomic parts per composite part, connections per atomic part,
    # composite parts per base assembly
    "small": dict(levels=4, fanout=3, composites=50, atomics=6, conns=2, per_base=3),
    "medium": dict(levels=5, fanout=3, composites=250, atomics=40, conns=2, per_base=3),
    "large-scaled": dict(levels=5, fanout=3, composites=400, atomics=40, conns=2, per_base=3),
}


def oo7_model() -> ApplicationModel:
    b = MethodBuilder("Module", "t1")
    root = b.getfield(b.this, "Module", "designRoot")
    b.invoke(root, "ComplexAssembly", "traverse", result=False)
    t1 = b.build()

    b = MethodBuilder("ComplexAssembly", "traverse")
    subs = b.getfield(b.this, "ComplexAssembly", "subAssemblies")
    with b.foreach(subs) as sub:
        b.invoke(sub, "ComplexAssembly", "traverse", result=False)
    bases = b.getfield(b.this, "ComplexAssembly", "baseAssemblies")
    with b.foreach(bases) as base:
        b.invoke(base, "BaseAssembly", "traverse", result=False)
    ca_traverse = b.build()

    b = MethodBuilder("BaseAssembly", "traverse")
    comps = b.getfield(b.this, "BaseAssembly", "componentsPriv")
    with b.foreach(comps) as cp:
        b.invoke(cp, "CompositePart", "traverse", result=False)
    ba_traverse = b.build()

    b = MethodBuilder("CompositePart", "traverse")
    visited = b.lib(LIB_SET, "new")
    rp = b.getfield(b.this, "CompositePart", "rootPart")
    b.invoke(rp, "AtomicPart", "dfs", [visited], result=False)
    cp_traverse = b.build()

    b = MethodBuilder("AtomicPart", "dfs", params=[("visited", LIB_SET)])
    b.lib(LIB_SET, "add", b.param(0), b.this)
    b.getfield(b.this, "AtomicPart", "x")
    conns = b.getfield(b.this, "AtomicPart", "to")
    with b.foreach(conns) as c:
        nxt = b.getfield(c, "Connection", "to")
        seen = b.lib(LIB_SET, "contains", b.param(0), nxt)
        with b.if_(seen, op="false"):
            b.invoke(nxt, "AtomicPart", "dfs", [b.param(0)], result=False)
    ap_dfs = b.build()

    b = MethodBuilder("AtomicPart", "update")
    x = b.getfield(b.this, "AtomicPart", "x")
    y = b.getfield(b.this, "AtomicPart", "y")
    b.noop(b.this, x, y)  # swap x and y
    ap_update = b.build()

    types = (
        type_decl(
            "Module", [("designRoot", "ComplexAssembly"), ("man", "Manual"), ("id", "int")], [t1]
        ),
        type_decl("Manual", [("title", "string"), ("textLen", "int")]),
        type_decl(
            "ComplexAssembly",
            [
                ("subAssemblies", "ComplexAssembly", "collection"),
                ("baseAssemblies", "BaseAssembly", "collection"),
                ("superAssembly", "ComplexAssembly"),
                ("module", "Module"),
                ("id", "int"),
            ],
            [ca_traverse],
        ),
        type_decl(
            "BaseAssembly",
            [
                ("componentsPriv", "CompositePart", "collection"),
                ("superAssembly", "ComplexAssembly"),
                ("module", "Module"),
                ("id", "int"),
            ],
            [ba_traverse],
        ),
        type_decl(
            "CompositePart",
            [
                ("documentation", "Document"),
                ("rootPart", "AtomicPart"),
                ("parts", "AtomicPart", "collection"),
                ("id", "int"),
            ],
            [cp_traverse],
        ),
        type_decl(
            "AtomicPart",
            [
                ("partOf", "CompositePart"),
                ("to", "Connection", "collection"),
                ("x", "int"),
                ("y", "int"),
                ("id", "int"),
            ],
            [ap_dfs, ap_update],
        ),
        type_decl(
            "Connection",
            [("to", "AtomicPart"), ("from", "AtomicPart"), ("length", "int")],
        ),
        type_decl("Document", [("title", "string"), ("text", "string")]),
    )
    return ApplicationModel(types, ("Module.t1",))


def oo7(size: str = "small", seed: int = 0, **knobs) -> Benchmark:
    if size not in OO7_SIZES:
        raise SpecError(f"unknown oo7 size {size!r}")
    p = OO7_SIZES[size] | knobs
    for k, v in p.items():
        if v < 1:
            raise SpecError(f"oo7 parameter {k} must be positive")
    rng = random.Random(seed)
    d = _Data()
    module = d.new("Module", id=0)
    man = d.new("Manual", title="manual", textLen=rng.randrange(1000, 10000))
    module.singles["man"] = man.oid

    composites = []
    for i in range(p["composites"]):
        cp = d.new("CompositePart", id=i)
        doc = d.new("Document", title=f"doc{i}", text="")
        cp.singles["documentation"] = doc.oid
        parts = [d.new("AtomicPart", id=j, x=rng.randrange(100), y=rng.randrange(100))
                 for j in range(p["atomics"])]
        for ap in parts:
            ap.singles["partOf"] = cp.oid
        # a ring keeps every part reachable from the root part; the rest is random
        for j, ap in enumerate(parts):
            ap.collections["to"] = []
            for c in range(p["conns"]):
                dst = parts[(j + 1) % len(parts)] if c == 0 else rng.choice(parts)
                conn = d.new("Connection", length=rng.randrange(1, 100))
                conn.singles.update({"from": ap.oid, "to": dst.oid})
                ap.collections["to"].append(conn.oid)
        cp.singles["rootPart"] = parts[0].oid
        cp.collections["parts"] = [ap.oid for ap in parts]
        composites.append(cp)

    def assembly(level: int, parent) -> ObjectRecord:
        if level == p["levels"]:
            ba = d.new("BaseAssembly", id=level)
            ba.singles.update(superAssembly=parent.oid, module=module.oid)
            ba.collections["componentsPriv"] = [
                rng.choice(composites).oid for _ in range(p["per_base"])
            ]
            return ba
        ca = d.new("ComplexAssembly", id=level)
        ca.singles["module"] = module.oid
        if parent is not None:
            ca.singles["superAssembly"] = parent.oid
        kids = [assembly(level + 1, ca) for _ in range(p["fanout"])]
        key = "baseAssemblies" if level + 1 == p["levels"] else "subAssemblies"
        ca.collections[key] = [k.oid for k in kids]
        ca.collections.setdefault("subAssemblies", [])
        ca.collections.setdefault("baseAssemblies", [])
        return ca

    root = assembly(1, None)
    module.singles["designRoot"] = root.oid
    bench = Benchmark(oo7_model(), d.records, {}, module.oid, {"size": size, **p})
    for name in TRAVERSALS["oo7"]:
        bench.traces[name] = trace_for("oo7", name, d.records, seed)
    return bench


def _oo7_trace(name: str, dataset: list[ObjectRecord]) -> WorkloadTrace:
    if name == "t1":
        module = next(r for r in dataset if r.type_name == "Module")
        return WorkloadTrace([("Module.t1", module.oid)])
    # t2 traversals: update atomic parts in place, one step per part
    parts = [r for r in dataset if r.type_name == "AtomicPart"]
    if name == "t2a":
        roots = [r.singles["rootPart"] for r in dataset if r.type_name == "CompositePart"]
        oids = roots
    elif name == "t2b":
        oids = [r.oid for r in parts]
    else:
        oids = [r.oid for r in parts for _ in range(4)]
    return WorkloadTrace([("AtomicPart.update", oid) for oid in oids])


# ---------------------------------------------------------------------------
# wordcount


def wordcount_model() -> ApplicationModel:
    b = MethodBuilder("Driver", "count")
    colls = b.getfield(b.this, "Driver", "collections")
    with b.foreach(colls) as tc:
        b.invoke(tc, "TextCollection", "count", result=False)
    driver_count = b.build()

    b = MethodBuilder("TextCollection", "count")
    texts = b.getfield(b.this, "TextCollection", "texts")
    with b.foreach(texts) as t:
        b.invoke(t, "Text", "count", result=False)
    tc_count = b.build()

    b = MethodBuilder("Text", "count")
    meta = b.getfield(b.this, "Text", "metadata")
    b.getfield(meta, "FileMeta", "name")
    total = b.lib(LIB_INT, "zero")
    chunks = b.getfield(b.this, "Text", "chunks")
    with b.foreach(chunks) as ch:
        words = b.getfield(ch, "Chunk", "words")
        b.lib("lib.Counter", "add", total, words)
    text_count = b.build()

    types = (
        type_decl("Driver", [("collections", "TextCollection", "collection")], [driver_count]),
        type_decl("TextCollection", [("texts", "Text", "collection"), ("name", "string")], [tc_count]),
        type_decl(
            "Text",
            [("metadata", "FileMeta"), ("chunks", "Chunk", "collection"), ("name", "string")],
            [text_count],
        ),
        type_decl("FileMeta", [("name", "string"), ("size", "long")]),
        type_decl("Chunk", [("text", "Text"), ("words", "int")]),
    )
    return ApplicationModel(types, ("Driver.count",))


def wordcount(
    files: int = 8, collections: int = 4, words_total: int = 80_000, chunks: int = 1, seed: int = 0
) -> Benchmark:
    """``chunks`` is the number of chunks c per text; the word total is fixed."""
    for k, v in dict(files=files, collections=collections, words_total=words_total, chunks=chunks).items():
        if v < 1:
            raise SpecError(f"wordcount parameter {k} must be positive")
    rng = random.Random(seed)
    d = _Data()
    driver = d.new("Driver")
    tcs = [d.new("TextCollection", name=f"tc{i}") for i in range(collections)]
    for tc in tcs:
        tc.collections["texts"] = []
    per_file = _split(words_total, files)
    for i in range(files):
        text = d.new("Text", name=f"file{i}")
        meta = d.new("FileMeta", name=f"file{i}.txt", size=per_file[i] * rng.randrange(4, 8))
        text.singles["metadata"] = meta.oid
        text.collections["chunks"] = []
        for w in _split(per_file[i], chunks):
            ch = d.new("Chunk", words=w)
            ch.singles["text"] = text.oid
            text.collections["chunks"].append(ch.oid)
        tcs[i % collections].collections["texts"].append(text.oid)
    driver.collections["collections"] = [tc.oid for tc in tcs]
    info = {"files": files, "collections": collections, "words_total": words_total, "chunks": chunks}
    bench = Benchmark(wordcount_model(), d.records, {}, driver.oid, info)
    bench.traces["count"] = trace_for("wordcount", "count", d.records, seed)
    return bench


def _split(total: int, parts: int) -> list[int]:
    q, r = divmod(total, parts)
    return [q + (1 if i < r else 0) for i in range(parts)]


# ---------------------------------------------------------------------------
# k-means


def kmeans_model() -> ApplicationModel:
    b = MethodBuilder("VectorCollection", "assign", params=[("centroids", "lib.Centroids")])
    vectors = b.getfield(b.this, "VectorCollection", "vectors")
    with b.foreach(vectors) as v:
        coords = b.getfield(v, "Vector", "values")
        b.lib("lib.Centroids", "nearest", b.param(0), coords)
    assign = b.build()

    b = MethodBuilder("KMeans", "iterate")
    cents = b.lib("lib.Centroids", "new")
    frags = b.getfield(b.this, "KMeans", "fragments")
    with b.foreach(frags) as f:
        b.invoke(f, "VectorCollection", "assign", [cents], result=False)
    iterate = b.build()

    types = (
        type_decl("KMeans", [("fragments", "VectorCollection", "collection"), ("k", "int")], [iterate]),
        type_decl("VectorCollection", [("vectors", "Vector", "collection")], [assign]),
        type_decl("Vector", [("values", "string"), ("dims", "int")]),
    )
    return ApplicationModel(types, ("KMeans.iterate",))


def kmeans(
    n: int = 10_000, k: int = 4, dims: int = 8, fragments: int = 10, iterations: int = 2, seed: int = 0
) -> Benchmark:
    for name, v in dict(n=n, k=k, dims=dims, fragments=fragments, iterations=iterations).items():
        if v < 1:
            raise SpecError(f"kmeans parameter {name} must be positive")
    rng = random.Random(seed)
    d = _Data()
    km = d.new("KMeans", k=k)
    frags = [d.new("VectorCollection") for _ in range(fragments)]
    for f, count in zip(frags, _split(n, fragments)):
        f.collections["vectors"] = []
        for _ in range(count):
            vals = " ".join(f"{rng.random():.4f}" for _ in range(dims))
            v = d.new("Vector", values=vals, dims=dims)
            f.collections["vectors"].append(v.oid)
    km.collections["fragments"] = [f.oid for f in frags]
    info = {"n": n, "k": k, "dims": dims, "fragments": fragments, "iterations": iterations}
    bench = Benchmark(kmeans_model(), d.records, {}, km.oid, info)
    bench.traces["kmeans"] = WorkloadTrace([("KMeans.iterate", km.oid)] * iterations)
    return bench


# ---------------------------------------------------------------------------
# weighted graph


def graph_model() -> ApplicationModel:
    b = MethodBuilder("Graph", "dfs")
    visited = b.lib(LIB_SET, "new")
    src = b.getfield(b.this, "Graph", "source")
    b.invoke(src, "Vertex", "dfs", [visited], result=False)
    g_dfs = b.build()

    b = MethodBuilder("Vertex", "dfs", params=[("visited", LIB_SET)])
    b.lib(LIB_SET, "add", b.param(0), b.this)
    edges = b.getfield(b.this, "Vertex", "edges")
    with b.foreach(edges) as e:
        nxt = b.getfield(e, "WeightedEdge", "to")
        seen = b.lib(LIB_SET, "contains", b.param(0), nxt)
        with b.if_(seen, op="false"):
            b.invoke(nxt, "Vertex", "dfs", [b.param(0)], result=False)
    v_dfs = b.build()

    # queue-driven relaxation: which vertex comes next depends on the distances
    b = MethodBuilder("Graph", "bellmanford")
    dist = b.lib(LIB_DIST, "new")
    queue = b.lib(LIB_QUEUE, "new")
    src = b.getfield(b.this, "Graph", "source")
    b.lib(LIB_DIST, "init", dist, src)
    b.lib(LIB_QUEUE, "push", queue, src)
    with b.loop():
        empty = b.lib(LIB_QUEUE, "isEmpty", queue)
        with b.if_(empty, op="true"):
            b.brk()
        v = b.lib(LIB_QUEUE, "pop", queue)
        b.invoke(v, "Vertex", "relax", [dist, queue], result=False)
    g_bf = b.build()

    b = MethodBuilder("Vertex", "relax", params=[("dist", LIB_DIST), ("queue", LIB_QUEUE)])
    edges = b.getfield(b.this, "Vertex", "edges")
    with b.foreach(edges) as e:
        nxt = b.getfield(e, "WeightedEdge", "to")
        w = b.getfield(e, "WeightedEdge", "weight")
        changed = b.lib(LIB_DIST, "relax", b.param(0), b.this, nxt, w)
        with b.if_(changed, op="true"):
            b.lib(LIB_QUEUE, "push", b.param(1), nxt)
    v_relax = b.build()

    types = (
        type_decl(
            "Graph",
            [("vertices", "Vertex", "collection"), ("source", "Vertex")],
            [g_dfs, g_bf],
        ),
        type_decl("Vertex", [("edges", "WeightedEdge", "collection"), ("id", "int")], [v_dfs, v_relax]),
        type_decl("WeightedEdge", [("to", "Vertex"), ("weight", "int")]),
    )
    return ApplicationModel(types, ("Graph.dfs", "Graph.bellmanford"))


def graph(v: int = 1000, e: int = 10_000, seed: int = 0, max_weight: int = 100) -> Benchmark:
    if v < 1 or e < 0 or max_weight < 1:
        raise SpecError("graph needs v >= 1, e >= 0 and a positive weight bound")
    if e < v - 1:
        raise SpecError("graph needs at least v - 1 edges to stay connected")
    rng = random.Random(seed)
    d = _Data()
    g = d.new("Graph")
    verts = [d.new("Vertex", id=i) for i in range(v)]
    for vx in verts:
        vx.collections["edges"] = []
    # a random spanning tree from vertex 0 keeps every vertex reachable
    pairs = [(rng.randrange(i), i) for i in range(1, v)]
    pairs += [(rng.randrange(v), rng.randrange(v)) for _ in range(e - (v - 1))]
    for a, b_ in pairs:
        edge = d.new("WeightedEdge", weight=rng.randrange(1, max_weight + 1))
        edge.singles["to"] = verts[b_].oid
        verts[a].collections["edges"].append(edge.oid)
    for vx in verts:
        rng.shuffle(vx.collections["edges"])
    g.collections["vertices"] = [vx.oid for vx in verts]
    g.singles["source"] = verts[0].oid
    bench = Benchmark(graph_model(), d.records, {}, g.oid, {"v": v, "e": e})
    for name in TRAVERSALS["graph"]:
        bench.traces[name] = trace_for("graph", name, d.records, seed)
    return bench


# ---------------------------------------------------------------------------
# dispatch


def trace_for(family: str, traversal: str, dataset: list[ObjectRecord], seed: int = 0) -> WorkloadTrace:
    """Build a named traversal for a generated dataset."""
    if family not in FAMILIES:
        raise SpecError(f"unknown family {family!r}")
    if traversal not in TRAVERSALS[family]:
        raise SpecError(f"{family} has no traversal {traversal!r}")

    def root(type_name):
        for r in dataset:
            if r.type_name == type_name:
                return r.oid
        raise SpecError(f"dataset has no {type_name}")

    if family == "oo7":
        return _oo7_trace(traversal, dataset)
    entry = {
        "bank": ("BankManagement", "setAllTransCustomers"),
        "wordcount": ("Driver", "count"),
        "kmeans": ("KMeans", "iterate"),
        "graph": ("Graph", traversal),
    }[family]
    return WorkloadTrace([(f"{entry[0]}.{entry[1]}", root(entry[0]))])


_SIZE_KEYS = {
    "bank": {"transactions"},
    "oo7": {"size", "levels", "fanout", "composites", "atomics", "conns", "per_base"},
    "wordcount": {"files", "collections", "words_total", "chunks"},
    "kmeans": {"n", "k", "dims", "fragments", "iterations"},
    "graph": {"v", "e", "max_weight"},
}


def generate(spec: BenchmarkSpec) -> Benchmark:
    unknown = set(spec.size) - _SIZE_KEYS[spec.family]
    if unknown:
        raise SpecError(f"unknown {spec.family} parameters: {sorted(unknown)}")
    fn = {"bank": bank, "oo7": oo7, "wordcount": wordcount, "kmeans": kmeans, "graph": graph}
    return fn[spec.family](seed=spec.seed, **spec.size)


def write_benchmark(bench: Benchmark, out: str | Path) -> list[Path]:
    from .store import dataset_to_json

    out = Path(out)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    written = [out / "model.json", out / "dataset.json"]
    written[0].write_text(ir.dumps(bench.model) + "\n", encoding="utf-8")
    written[1].write_text(dataset_to_json(bench.dataset) + "\n", encoding="utf-8")
    for name, tr in sorted(bench.traces.items()):
        path = out / "traces" / f"{name}.json"
        path.write_text(tr.to_json() + "\n", encoding="utf-8")
        written.append(path)
    info = out / "info.json"
    info.write_text(json.dumps(bench.info | {"objects": len(bench.dataset)}, indent=1, sort_keys=True) + "\n")
    written.append(info)
    return written


# ---------------------------------------------------------------------------
# random models for property tests and scaling runs


@dataclass
class RandomCase:
    model: ApplicationModel
    dataset: list[ObjectRecord]
    trace: WorkloadTrace


def random_case(
    seed: int,
    n_types: int = 5,
    groups: int = 1,
    methods_per_type: int = 2,
    stmts: int = 4,
    branches: bool = False,
    pool: int = 3,
    steps_per_entry: int = 2,
) -> RandomCase:
    """A random well-typed model with data and a trace starting at entry points.

    Types form independent groups of ``n_types``. Within a group fields and
    calls only point to higher-indexed types, so there is no recursion and
    call depth is bounded by the group size. Every single association is
    non-null and every collection non-empty. With ``branches=False`` the only
    jumps are loop back-edges and loop exits.
    """
    rng = random.Random(seed)
    types: list = []
    records: list[ObjectRecord] = []
    steps = []
    entries = []
    for gi in range(groups):
        tnames = [f"G{gi}T{j}" for j in range(n_types)]
        fields = {}
        for j, tn in enumerate(tnames):
            fs = [("val", "int")]
            if j < n_types - 1:
                for k in range(rng.randint(1, 3)):
                    card = "collection" if rng.random() < 0.3 else "single"
                    fs.append((f"f{k}", tnames[rng.randrange(j + 1, n_types)], card))
            fields[tn] = fs
        methods: dict[str, list] = {}
        sigs: dict[str, dict] = {}  # type -> name -> (param type | None, returns)
        for j in reversed(range(n_types)):
            tn = tnames[j]
            methods[tn], sigs[tn] = [], {}
            for mi in range(methods_per_type):
                ptype = tnames[rng.randrange(j + 1, n_types)] if j < n_types - 1 and rng.random() < 0.4 else None
                gen = _RandomBody(rng, tn, ptype, fields, sigs, tnames, stmts, branches)
                decl = gen.build(f"m{mi}")
                methods[tn].append(decl)
                sigs[tn][decl.name] = (ptype, decl.returns)
        for tn in tnames:
            types.append(type_decl(tn, fields[tn], methods[tn]))
        # data: a pool of objects per type, references into the target's pool
        objs = {tn: [ObjectRecord(f"{tn}#{i}", tn, {}, {}, {"val": rng.randrange(100)})
                     for i in range(pool)] for tn in tnames}
        for tn in tnames:
            for rec in objs[tn]:
                for f in fields[tn][1:]:
                    name, tgt, card = f
                    if card == "single":
                        rec.singles[name] = rng.choice(objs[tgt]).oid
                    else:
                        rec.collections[name] = [rng.choice(objs[tgt]).oid for _ in range(rng.randint(1, 3))]
                records.append(rec)
        root = tnames[0]
        for m in methods[root]:
            entries.append(f"{root}.{m.name}")
            ptype = sigs[root][m.name][0]
            for _ in range(steps_per_entry):
                args = (rng.choice(objs[ptype]).oid,) if ptype else ()
                steps.append((f"{root}.{m.name}", rng.choice(objs[root]).oid, args))
    model = ApplicationModel(tuple(types), tuple(entries))
    return RandomCase(model, records, WorkloadTrace(steps, {"mode": "prob", "p": 0.5}))


class _RandomBody:
    def __init__(self, rng, owner, ptype, fields, sigs, tnames, stmts, branches):
        self.rng = rng
        self.owner = owner
        self.fields = fields
        self.sigs = sigs
        self.tnames = tnames
        self.stmts = stmts
        self.branches = branches
        params = [("p", ptype)] if ptype else []
        self.b = MethodBuilder(owner, "", params=params)
        self.ptype = ptype

    def build(self, name: str) -> MethodDecl:
        b = self.b
        b.name = name
        scope = [(b.this, self.owner)]
        if self.ptype:
            scope.append((b.param(0), self.ptype))
        self._block(scope, self.stmts, depth=0)
        objs = [v for v in scope[1:] if v[0] != b.this]
        if objs and self.rng.random() < 0.5:
            var, t = self.rng.choice(objs)
            b.returns = t
            b.ret(var)
        return b.build()

    def _block(self, scope: list, n: int, depth: int) -> None:
        rng, b = self.rng, self.b
        for _ in range(n):
            var, t = rng.choice(scope)
            assoc = [f for f in self.fields[t][1:]]
            choice = rng.random()
            if choice < 0.15 or not assoc and choice < 0.6:
                b.getfield(var, t, "val")
            elif choice < 0.6 and assoc:
                name, tgt, card = rng.choice(assoc)
                coll = b.getfield(var, t, name)
                if card == "single":
                    scope.append((coll, tgt))
                elif depth < 2:
                    with b.foreach(coll, style=rng.choice(("iterator", "arrayload"))) as el:
                        self._block(scope + [(el, tgt)], max(1, n // 2), depth + 1)
            elif choice < 0.85:
                callees = [
                    (mname, sig) for mname, sig in self.sigs.get(t, {}).items()
                    if t != self.owner
                ]
                if not callees:
                    continue
                mname, (ptype, ret) = rng.choice(callees)
                args = []
                if ptype:
                    cands = [v for v, vt in scope if vt == ptype]
                    if not cands:
                        continue
                    args = [rng.choice(cands)]
                out = b.invoke(var, t, mname, args, result=ret is not None)
                if ret is not None:
                    scope.append((out, ret))
            elif self.branches and depth < 2:
                with b.if_():
                    self._block(list(scope), max(1, n // 2), depth + 1)
            else:
                b.noop(var)
