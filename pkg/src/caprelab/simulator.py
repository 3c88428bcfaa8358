"""Virtual-time simulation of a distributed object store running IR workloads.

One simpy process plays the application thread: it drives the interpreter
and pays for every demand fetch. Under ``capre`` a single scheduler process
consumes the hint sets queued at method entry; single associations along a
hint are fetched one after the other while the elements of a collection are
fetched concurrently, bounded by the fetch lanes of each storage node. Under
``rop:d`` every demand miss spawns an eager fetch of the object's single
references up to depth d.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from collections import OrderedDict
from dataclasses import dataclass, field

import simpy

from .graphs import build_app_type_graph
from .hints import HintSet, analyze, rop_hints
from .interp import Interpreter
from .ir import ApplicationModel
from .store import Policy, StoreConfig, StoreState, build_store
from .trace import BranchOracle, WorkloadTrace

CSV_COLUMNS = ("policy", "hits", "misses", "prefetched_total", "used", "unused", "completion_time")
COMPARE_POLICIES = ("none", "rop:1", "rop:3", "rop:5", "rop:10", "capre")


@dataclass
class RunMetrics:
    policy: str
    hits: int = 0
    misses: int = 0
    joined: int = 0  # misses that waited on an in-flight prefetch
    prefetched_total: int = 0
    prefetched_used: int = 0
    completion_time: float = 0.0
    per_method: dict[str, dict] = field(default_factory=dict)
    # every object reached while resolving hints, fetched or already cached
    prefetch_targets: set[str] = field(default_factory=set, repr=False, compare=False)

    @property
    def prefetched_unused(self) -> int:
        return self.prefetched_total - self.prefetched_used

    @property
    def demand_accesses(self) -> int:
        return self.hits + self.misses

    @property
    def hit_rate(self) -> float:
        return self.hits / self.demand_accesses if self.demand_accesses else 0.0

    def row(self) -> dict:
        return {
            "policy": self.policy,
            "hits": self.hits,
            "misses": self.misses,
            "prefetched_total": self.prefetched_total,
            "used": self.prefetched_used,
            "unused": self.prefetched_unused,
            "completion_time": _num(self.completion_time),
        }

    def to_dict(self) -> dict:
        return self.row() | {"joined": self.joined, "per_method": self.per_method}


def _num(x: float):
    return int(x) if float(x).is_integer() else round(x, 6)


class _Trie:
    __slots__ = ("children",)

    def __init__(self):
        self.children: dict[tuple[str, str], _Trie] = {}

    @classmethod
    def of(cls, paths) -> _Trie:
        root = cls()
        for p in sorted(paths):
            node = root
            for step in p:
                node = node.children.setdefault(step, cls())
        return root


class _Simulation:
    def __init__(self, model, store: StoreState, trace, hints, event_log):
        self.model = model
        self.store = store
        self.cfg = cfg = store.config
        self.trace = trace
        self.env = simpy.Environment()
        self.lanes = [simpy.Resource(self.env, capacity=cfg.channels) for _ in range(cfg.num_nodes)]
        self.cache: OrderedDict[str, None] = OrderedDict()
        self.inflight: dict[str, simpy.Event] = {}
        self.unclaimed: set[str] = set()  # prefetched, not yet demanded
        self.m = RunMetrics(str(cfg.policy))
        self.log = event_log
        self.policy = cfg.policy
        self.interp = Interpreter(model, store.objects, BranchOracle(trace.branches, cfg.seed))
        self._tries: dict[str, _Trie] = {}
        if self.policy.kind == "capre":
            for ref, hs in (hints or {}).items():
                self._tries[ref] = _Trie.of(hs.paths())
            self.tasks = simpy.Store(self.env)
            self.env.process(self._scheduler())
        elif self.policy.kind == "rop":
            self.g = build_app_type_graph(model)
            self._rop: dict[str, _Trie] = {}

    # -- bookkeeping --------------------------------------------------------

    def _insert(self, oid: str) -> None:
        self.cache[oid] = None
        self.cache.move_to_end(oid)
        cap = self.cfg.cache_capacity
        while cap is not None and len(self.cache) > cap:
            old, _ = self.cache.popitem(last=False)
            self.unclaimed.discard(old)

    def _claim(self, oid: str) -> None:
        if oid in self.unclaimed:
            self.unclaimed.discard(oid)
            self.m.prefetched_used += 1

    def _event(self, kind, phase, oid, pred=None):
        if self.log is not None:
            self.log.append(
                {
                    "t": _num(self.env.now),
                    "event": phase,
                    "kind": kind,
                    "oid": oid,
                    "node": self.store.objects[oid].node,
                    "pred": pred,
                }
            )

    # -- application thread -------------------------------------------------

    def main(self):
        env, interp = self.env, self.interp
        compute = self.cfg.compute_latency
        done = 0
        stack: list[str] = []
        for ev in interp.run_trace(self.trace):
            n = interp.log.instructions - done
            if n and compute:
                yield env.timeout(n * compute)
            done = interp.log.instructions
            tag = ev[0]
            if tag == "load":
                yield from self._demand(ev[1], stack[-1] if stack else None)
            elif tag == "enter":
                ref = ev[1]
                stack.append(ref)
                pm = self.m.per_method.setdefault(ref, {"activations": 0, "hits": 0, "misses": 0})
                pm["activations"] += 1
                if self.policy.kind == "capre" and ref in self._tries:
                    self.tasks.put((self._tries[ref], ev[2]))
            else:
                stack.pop()
        n = interp.log.instructions - done
        if n and compute:
            yield env.timeout(n * compute)
        self.m.completion_time = env.now

    def _demand(self, oid: str, method: str | None):
        pm = self.m.per_method.get(method) if method else None
        if oid in self.cache:
            self.m.hits += 1
            if pm:
                pm["hits"] += 1
            self.cache.move_to_end(oid)
            self._claim(oid)
            if self.cfg.local_latency:
                yield self.env.timeout(self.cfg.local_latency)
            return
        self.m.misses += 1
        if pm:
            pm["misses"] += 1
        if oid in self.inflight:
            self.m.joined += 1
            yield self.inflight[oid]
            self._claim(oid)
        else:
            self._event("demand", "start", oid)
            yield self.env.timeout(self.cfg.remote_latency)
            self._event("demand", "complete", oid)
            self._insert(oid)
        if self.policy.kind == "rop":
            self.env.process(self._rop_fetch(oid))

    # -- prefetching --------------------------------------------------------

    def _fetch(self, oid: str, pred: str | None):
        """Prefetch one object; returns once it is resident."""
        self.m.prefetch_targets.add(oid)
        if oid in self.cache:
            return
        if oid in self.inflight:
            yield self.inflight[oid]
            return
        done = self.env.event()
        self.inflight[oid] = done
        lane = self.lanes[self.store.objects[oid].node]
        with lane.request() as req:
            yield req
            self._event("prefetch", "start", oid, pred)
            yield self.env.timeout(self.cfg.remote_latency)
        self._event("prefetch", "complete", oid, pred)
        self.m.prefetched_total += 1
        self.unclaimed.add(oid)
        self._insert(oid)
        del self.inflight[oid]
        done.succeed()

    def _resolve(self, oid: str, trie: _Trie):
        rec = self.store.objects[oid]
        for (fname, card), sub in trie.children.items():
            if card == "single":
                target = rec.singles.get(fname)
                if target is None:
                    continue
                yield from self._fetch(target, oid)
                if sub.children:
                    yield from self._resolve(target, sub)
            else:
                procs = [
                    self.env.process(self._element(e, oid, sub))
                    for e in rec.collections.get(fname, ())
                ]
                if procs:
                    yield self.env.all_of(procs)

    def _element(self, oid: str, owner: str, sub: _Trie):
        yield from self._fetch(oid, owner)
        if sub.children:
            yield from self._resolve(oid, sub)

    def _scheduler(self):
        overhead = self.cfg.scheduler_overhead
        while True:
            trie, root = yield self.tasks.get()
            if overhead:
                yield self.env.timeout(overhead)
            yield from self._resolve(root, trie)

    def _rop_fetch(self, oid: str):
        t = self.store.objects[oid].type_name
        trie = self._rop.get(t)
        if trie is None:
            hs = rop_hints(t, self.policy.depth, self.g) if t in self.g.nodes else None
            trie = self._rop[t] = _Trie.of(hs.paths() if hs else ())
        yield from self._rop_level(oid, trie)

    def _rop_level(self, oid: str, trie: _Trie):
        # references of one object are requested together, the next level once they arrive
        rec = self.store.objects[oid]
        procs = []
        for (fname, _), sub in trie.children.items():
            target = rec.singles.get(fname)
            if target is not None:
                procs.append(self.env.process(self._element(target, oid, sub)))
        if procs:
            yield self.env.all_of(procs)

    def run(self) -> RunMetrics:
        main = self.env.process(self.main())
        self.env.run(until=main)
        return self.m


def run_workload(
    model: ApplicationModel,
    dataset,
    trace: WorkloadTrace,
    cfg: StoreConfig,
    hints: dict[str, HintSet] | None = None,
    event_log: list | None = None,
) -> RunMetrics:
    """Simulate one trace under cfg.policy.

    ``dataset`` is a list of records or an already placed StoreState. Under
    capre without hints the model is analyzed first and the deduplicated
    hints are used.
    """
    store = dataset if isinstance(dataset, StoreState) else build_store(dataset, cfg)
    if store.config != cfg:
        store = StoreState(store.objects, cfg)
    if cfg.policy.kind == "capre" and hints is None:
        hints = analyze(model).hints
    return _Simulation(model, store, trace, hints, event_log).run()


@dataclass
class Comparison:
    seed: int
    runs: list[RunMetrics]

    def by_policy(self) -> dict[str, RunMetrics]:
        return {r.policy: r for r in self.runs}

    def reductions(self) -> dict[str, float]:
        """Completion-time reduction of each policy relative to none, in percent."""
        base = self.by_policy()["none"].completion_time
        return {r.policy: (100.0 * (base - r.completion_time) / base if base else 0.0) for r in self.runs}


def compare_policies(
    model: ApplicationModel,
    dataset,
    trace: WorkloadTrace,
    cfg: StoreConfig,
    hints: dict[str, HintSet] | None = None,
    policies=COMPARE_POLICIES,
) -> Comparison:
    if hints is None and "capre" in policies:
        hints = analyze(model).hints
    runs = []
    for p in policies:
        c = cfg.with_(policy=Policy.parse(p))
        runs.append(run_workload(model, dataset, trace, c, hints))
    return Comparison(cfg.seed, runs)


def metrics_csv(comparisons: list[Comparison], with_seed: bool = True) -> str:
    buf = io.StringIO()
    cols = (("seed",) if with_seed else ()) + CSV_COLUMNS
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for c in comparisons:
        for r in c.runs:
            w.writerow(({"seed": c.seed} if with_seed else {}) | r.row())
    return buf.getvalue()


def summarize(comparisons: list[Comparison]) -> list[dict]:
    """Mean and standard deviation of completion time and reduction per policy."""
    times: dict[str, list[float]] = {}
    reds: dict[str, list[float]] = {}
    for c in comparisons:
        red = c.reductions()
        for r in c.runs:
            times.setdefault(r.policy, []).append(r.completion_time)
            reds.setdefault(r.policy, []).append(red[r.policy])
    out = []
    for p, ts in times.items():
        out.append(
            {
                "policy": p,
                "runs": len(ts),
                "mean_completion_time": round(statistics.fmean(ts), 6),
                "stdev_completion_time": round(statistics.pstdev(ts), 6),
                "mean_reduction_pct": round(statistics.fmean(reds[p]), 6),
            }
        )
    return out


def summary_table(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    widths = [max(len(c), *(len(str(r[c])) for r in rows)) for c in cols]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    for r in rows:
        lines.append("  ".join(str(r[c]).ljust(w) for c, w in zip(cols, widths)))
    return "\n".join(lines)


def metrics_json(comparisons: list[Comparison]) -> str:
    return json.dumps(
        [{"seed": c.seed, "runs": [r.to_dict() for r in c.runs], "reductions": c.reductions()}
         for c in comparisons],
        indent=1,
        sort_keys=True,
    )

