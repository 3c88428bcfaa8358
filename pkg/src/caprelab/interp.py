"""Concrete execution of IR methods over an object graph.

The interpreter is a generator: it yields ``("load", oid)`` whenever the
program demands an object, ``("enter", method_ref, oid)`` and
``("exit", method_ref)`` around every method activation, and leaves timing to the caller. Every navigation is also
attributed to each active method activation as a field path rooted at that
activation's receiver, which is what the path oracle collects.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field

from .ir import ITERATOR_OWNERS, SELF, ApplicationModel, is_library_type
from .store import ObjectRecord
from .trace import BranchOracle, Step, TraceError, WorkloadTrace

Paths = dict  # activation id -> path tuple


class InterpError(RuntimeError):
    pass


class Obj:
    __slots__ = ("oid", "paths")

    def __init__(self, oid: str, paths: Paths | None = None):
        self.oid = oid
        self.paths = paths or {}

    def __eq__(self, other):
        return isinstance(other, Obj) and other.oid == self.oid

    def __hash__(self):
        return hash(self.oid)


@dataclass
class CollVal:
    oids: list[str]
    field: str
    paths: Paths


@dataclass
class IterVal:
    coll: CollVal
    pos: int = 0


def _key(v):
    return v.oid if isinstance(v, Obj) else v


@dataclass
class _Frame:
    ref: str
    instrs: tuple
    act: int
    env: dict
    ret_var: str | None
    pc: int = 0


@dataclass
class ExecLog:
    """Program-visible behaviour: primitive reads, navigations and branch outcomes."""

    events: list[tuple] = field(default_factory=list)
    instructions: int = 0


class Interpreter:
    def __init__(
        self,
        model: ApplicationModel,
        objects: dict[str, ObjectRecord],
        oracle: BranchOracle,
        track_paths: bool = False,
        max_depth: int = 100_000,
    ):
        self.model = model
        self.objects = objects
        self.oracle = oracle
        self.track = track_paths
        self.max_depth = max_depth
        self.log = ExecLog()
        # method ref -> set of receiver-rooted paths (only with track_paths)
        self.accessed: dict[str, set] = defaultdict(set)
        self._act_method: dict[int, str] = {}
        self._next_act = 0
        self._live: set[int] = set()

    # -- public -------------------------------------------------------------

    def run_trace(self, trace: WorkloadTrace):
        for k, step in enumerate(trace.steps):
            yield from self.run_step(step, k)

    def run_step(self, step: Step, k: int = 0):
        for oid in (step.root, *step.args):
            if oid not in self.objects:
                raise TraceError(f"step {k}: object {oid} not in dataset")
        root = self.objects[step.root]
        owner = step.method.rpartition(".")[0]
        ref = self._dispatch(root, owner, step.method.rpartition(".")[2])
        if ref is None:
            raise TraceError(f"step {k}: {root.type_name} has no method {step.method}")
        self.oracle.begin_step(step.branches)
        yield ("load", step.root)
        args = []
        for a in step.args:
            yield ("load", a)
            args.append(Obj(a))
        yield from self._execute(ref, Obj(step.root), args)

    # -- execution ----------------------------------------------------------

    def _dispatch(self, rec: ObjectRecord, owner: str, name: str) -> str | None:
        for t in (rec.type_name, owner):
            tdecl = self.model.type(t)
            if tdecl is not None and tdecl.method(name) is not None:
                return f"{t}.{name}"
        return None

    def _frame(self, ref: str, this: Obj, args, ret_var: str | None) -> _Frame:
        act = self._next_act
        self._next_act += 1
        self._act_method[act] = ref
        if self.track:
            self.accessed[ref]
        self._live.add(act)
        env: dict[str, object] = {SELF: Obj(this.oid, {**this.paths, act: ()} if self.track else {})}
        for k, a in enumerate(args):
            env[f"p{k}"] = a
        return _Frame(ref, self.model.method(ref).instructions, act, env, ret_var)

    def _execute(self, ref: str, this: Obj, args: list):
        # Calls push frames on an explicit stack, so deep recursion in the
        # interpreted program costs no Python recursion.
        stack = [self._frame(ref, this, args, None)]
        yield ("enter", ref, this.oid)
        log = self.log.events
        while stack:
            fr = stack[-1]
            instrs = fr.instrs
            if fr.pc >= len(instrs):
                ret = None
            else:
                ins = instrs[fr.pc]
                self.log.instructions += 1
                fr.pc += 1
                kind = ins.kind
                env = fr.env
                try:
                    uses = [env[u] for u in ins.uses]
                except KeyError as exc:
                    raise InterpError(f"{fr.ref}[{ins.ii}]: unbound variable {exc}") from None
                if kind == "getfield":
                    obj = uses[0]
                    if not isinstance(obj, Obj):
                        raise InterpError(f"{fr.ref}[{ins.ii}]: field access on a non-object")
                    rec = self.objects[obj.oid]
                    fname = ins.params["fieldName"]
                    if fname in rec.collections:
                        val = CollVal(rec.collections[fname], fname, obj.paths)
                    elif fname in rec.singles or self._is_assoc(rec.type_name, fname):
                        target = rec.singles.get(fname)
                        log.append(("nav", obj.oid, fname, target))
                        if target is None:
                            val = None
                        else:
                            val = Obj(target, self._extend(obj.paths, fname, "single"))
                            yield ("load", target)
                    else:
                        val = rec.values.get(fname, 0)
                        log.append(("read", obj.oid, fname, val))
                    env[ins.def_var] = val
                elif kind == "arrayload":
                    it = uses[0]
                    coll = it.coll if isinstance(it, IterVal) else it
                    if not isinstance(coll, CollVal):
                        raise InterpError(f"{fr.ref}[{ins.ii}]: arrayload on a non-collection")
                    if isinstance(it, IterVal):
                        pos = it.pos
                        it.pos += 1
                    else:
                        pos = 0
                    if pos >= len(coll.oids):
                        raise InterpError(f"{fr.ref}[{ins.ii}]: iterator exhausted")
                    oid = coll.oids[pos]
                    log.append(("elem", coll.field, pos, oid))
                    env[ins.def_var] = Obj(oid, self._extend(coll.paths, coll.field, "collection"))
                    yield ("load", oid)
                elif kind == "invokemethod":
                    owner = ins.params["ownerType"]
                    name = ins.params["methodName"]
                    if is_library_type(owner) or not self.model.is_declared(owner):
                        val = self._library(owner, name, uses)
                        if ins.def_var is not None:
                            env[ins.def_var] = val
                    else:
                        recv = uses[0]
                        if not isinstance(recv, Obj):
                            raise InterpError(f"{fr.ref}[{ins.ii}]: call {owner}.{name} on null")
                        if len(stack) > self.max_depth:
                            raise InterpError(f"{fr.ref}[{ins.ii}]: call depth exceeded")
                        callee = self._dispatch(self.objects[recv.oid], owner, name)
                        stack.append(self._frame(callee, recv, uses[1:], ins.def_var))
                        yield ("enter", callee, recv.oid)
                    continue
                elif kind == "conditionalbranch":
                    op = ins.params.get("op", "oracle")
                    if op == "oracle":
                        outcome = self.oracle()
                        log.append(("branch", fr.ref, ins.ii, outcome))
                        jump = not outcome
                    elif op in ("true", "false"):
                        jump = bool(uses[0]) == (op == "true")
                    else:
                        same = _key(uses[0]) == _key(uses[1])
                        jump = same == (op == "eq")
                    if jump:
                        fr.pc = ins.params["target"]
                    continue
                elif kind in ("goto", "break", "continue"):
                    fr.pc = ins.params["target"]
                    continue
                elif kind == "return":
                    ret = uses[0] if uses else None
                elif ins.def_var is not None:
                    env[ins.def_var] = None
                if kind != "return":
                    continue
            # the frame finished
            stack.pop()
            self._live.discard(fr.act)
            yield ("exit", fr.ref)
            if stack and fr.ret_var is not None:
                stack[-1].env[fr.ret_var] = ret


    def _is_assoc(self, type_name: str, fname: str) -> bool:
        t = self.model.type(type_name)
        fd = t.field(fname) if t else None
        return fd is not None and self.model.is_persistent(fd.type)

    def _extend(self, paths: Paths, fname: str, card: str) -> Paths:
        if not self.track or not paths:
            return {}
        out = {}
        for act, p in paths.items():
            if act not in self._live:
                continue
            np = p + ((fname, card),)
            out[act] = np
            self.accessed[self._act_method[act]].add(np)
        return out

    def _library(self, owner: str, name: str, uses: list):
        """Built-in semantics of the library calls the benchmarks use."""
        a = uses[0] if uses else None
        if name == "iterator" and isinstance(a, CollVal):
            return IterVal(a)
        if owner in ITERATOR_OWNERS and name == "hasNext":
            return a.pos < len(a.coll.oids)
        if name == "size" and isinstance(a, CollVal):
            return len(a.oids)
        if owner == "lib.Set":
            if name == "new":
                return set()
            if name == "add":
                a.add(_key(uses[1]))
                return True
            if name == "contains":
                return _key(uses[1]) in a
        if owner == "lib.Queue":
            if name == "new":
                return deque()
            if name == "push":
                a.append(_key(uses[1]))
                return True
            if name == "pop":
                oid = a.popleft()
                return Obj(oid) if isinstance(oid, str) else oid
            if name == "isEmpty":
                return not a
        if owner == "lib.Int":
            if name == "zero":
                return 0
            if name == "inc":
                return a + 1
            if name == "lt":
                return a < uses[1]
        if owner == "lib.DistMap":
            if name == "new":
                return {}
            if name == "init":
                a[_key(uses[1])] = 0
                return True
            if name == "relax":
                u, v, w = _key(uses[1]), _key(uses[2]), uses[3]
                du = a.get(u)
                if du is None:
                    return False
                if du + w < a.get(v, float("inf")):
                    a[v] = du + w
                    return True
                return False
        return None


def oracle_accessed_paths(
    model: ApplicationModel, dataset, trace: WorkloadTrace, seed: int = 0
) -> dict[str, set]:
    """Replay a trace without cache or prefetching and collect, per method, the
    association paths its activations navigated, rooted at their receivers."""
    objects = dataset if isinstance(dataset, dict) else {r.oid: r for r in dataset}
    interp = Interpreter(model, objects, BranchOracle(trace.branches, seed), track_paths=True)
    for _ in interp.run_trace(trace):
        pass
    return {ref: set(ps) for ref, ps in interp.accessed.items()}
