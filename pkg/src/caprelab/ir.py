"""Application model: types, persistent fields and methods as IR instruction streams.

The on-disk format is JSON::

    {"types": [{"name": ..., "persistent": true,
                "fields": [{"name": ..., "type": ..., "cardinality": "single"}],
                "methods": [{"name": ..., "params": [{"name": ..., "type": ...}],
                             "returns": null, "overrides": null,
                             "instructions": [...]}]}],
     "entryPoints": ["Type.method", ...]}

Each instruction is ``{"ii", "kind", "params", "def", "use", "scope"}``.  The
receiver slot is ``v_self``; parameters are ``p0``, ``p1``, ...
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

SELF = "v_self"

KINDS = frozenset(
    {
        "getfield",
        "arrayload",
        "invokemethod",
        "conditionalbranch",
        "goto",
        "return",
        "break",
        "continue",
        "noop",
    }
)
EXIT_KINDS = frozenset({"return", "break", "continue"})
CARDINALITIES = ("single", "collection")
PRIMITIVES = frozenset(
    {"int", "long", "short", "byte", "char", "float", "double", "boolean", "string", "void"}
)
ITERATOR_OWNERS = frozenset({"Iterator", "java.util.Iterator"})
BRANCH_OPS = frozenset({"oracle", "true", "false", "eq", "ne"})


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ResolveError(ValueError):
    """An identifier in the model does not resolve."""

    def __init__(self, name: str, context: str):
        self.name = name
        super().__init__(f"unresolved name {name!r} in {context}")


def is_library_type(name: str) -> bool:
    """Library/opaque types: java.* and lib.* names plus the bare Iterator."""
    return name.startswith(("java.", "lib.")) or name in ITERATOR_OWNERS


@dataclass(frozen=True)
class ScopeFrame:
    kind: str  # "loop" | "branch"
    id: str
    arm: str | None = None


@dataclass(frozen=True)
class Instruction:
    ii: int
    kind: str
    params: dict = field(default_factory=dict, hash=False, compare=True)
    def_var: str | None = None
    uses: tuple[str, ...] = ()
    scope: tuple[ScopeFrame, ...] = ()

    def in_loop(self) -> bool:
        return any(f.kind == "loop" for f in self.scope)

    def in_branch(self) -> bool:
        return any(f.kind == "branch" for f in self.scope)

    def loop_ids(self) -> list[str]:
        return [f.id for f in self.scope if f.kind == "loop"]


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type: str
    cardinality: str = "single"


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: tuple[tuple[str, str], ...] = ()
    instructions: tuple[Instruction, ...] = ()
    returns: str | None = None
    overrides: str | None = None


@dataclass(frozen=True)
class TypeDecl:
    name: str
    persistent: bool = True
    fields: tuple[FieldDecl, ...] = ()
    methods: tuple[MethodDecl, ...] = ()

    def field(self, name: str) -> FieldDecl | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def method(self, name: str) -> MethodDecl | None:
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True)
class ApplicationModel:
    types: tuple[TypeDecl, ...] = ()
    entry_points: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {t.name: t for t in self.types})

    def type(self, name: str) -> TypeDecl | None:
        return self._by_name.get(name)

    def is_declared(self, name: str) -> bool:
        return name in self._by_name

    def is_persistent(self, name: str) -> bool:
        t = self._by_name.get(name)
        return t is not None and t.persistent

    def method(self, ref: str) -> MethodDecl | None:
        owner, _, name = ref.rpartition(".")
        t = self._by_name.get(owner)
        return t.method(name) if t else None

    def methods(self) -> Iterable[tuple[str, TypeDecl, MethodDecl]]:
        """All (ref, owner, method) triples in declaration order."""
        for t in self.types:
            for m in t.methods:
                yield f"{t.name}.{m.name}", t, m

    def method_refs(self) -> list[str]:
        return [ref for ref, _, _ in self.methods()]

    def instruction_count(self) -> int:
        return sum(len(m.instructions) for _, _, m in self.methods())


@dataclass(frozen=True)
class Violation:
    message: str
    type: str | None = None
    method: str | None = None
    ii: int | None = None
    subject: str | None = None  # unresolved name, for reference errors

    def to_dict(self) -> dict:
        return {"type": self.type, "method": self.method, "ii": self.ii, "message": self.message}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(v.to_dict(), sort_keys=True) + "\n" for v in self.violations)


# ---------------------------------------------------------------------------
# loading


def _require(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"missing key {key!r} in {where}")
    return obj[key]


def normalize(instr: Instruction) -> Instruction:
    # Iterator.next() inside a loop is the same collection-element access as arrayload.
    if (
        instr.kind == "invokemethod"
        and instr.params.get("ownerType") in ITERATOR_OWNERS
        and instr.params.get("methodName") == "next"
    ):
        return Instruction(instr.ii, "arrayload", {}, instr.def_var, instr.uses, instr.scope)
    return instr


def _instruction_from_dict(d: dict, where: str) -> Instruction:
    kind = _require(d, "kind", where)
    if kind not in KINDS:
        raise ParseError(f"unknown instruction kind {kind!r} in {where}")
    scope = []
    for s in d.get("scope") or []:
        fk = _require(s, "kind", where)
        if fk not in ("loop", "branch"):
            raise ParseError(f"unknown scope kind {fk!r} in {where}")
        scope.append(ScopeFrame(fk, str(_require(s, "id", where)), s.get("arm")))
    ii = _require(d, "ii", where)
    if not isinstance(ii, int):
        raise ParseError(f"instruction index must be an integer in {where}")
    instr = Instruction(
        ii=ii,
        kind=kind,
        params=dict(d.get("params") or {}),
        def_var=d.get("def"),
        uses=tuple(d.get("use") or ()),
        scope=tuple(scope),
    )
    return normalize(instr)


def model_from_dict(data: dict) -> ApplicationModel:
    """Build an ApplicationModel from decoded JSON; no resolution checks."""
    if not isinstance(data, dict):
        raise ParseError("top level must be an object")
    types = []
    for ti, td in enumerate(data.get("types") or []):
        tname = _require(td, "name", f"types[{ti}]")
        fields = tuple(
            FieldDecl(
                _require(fd, "name", f"type {tname}"),
                _require(fd, "type", f"type {tname}"),
                fd.get("cardinality", "single"),
            )
            for fd in td.get("fields") or []
        )
        methods = []
        for md in td.get("methods") or []:
            mname = _require(md, "name", f"type {tname}")
            where = f"{tname}.{mname}"
            params = tuple(
                (_require(p, "name", where), _require(p, "type", where))
                for p in md.get("params") or []
            )
            instrs = tuple(
                _instruction_from_dict(i, f"{where}[{k}]")
                for k, i in enumerate(md.get("instructions") or [])
            )
            methods.append(
                MethodDecl(mname, params, instrs, md.get("returns"), md.get("overrides"))
            )
        types.append(TypeDecl(tname, bool(td.get("persistent", True)), fields, tuple(methods)))
    return ApplicationModel(tuple(types), tuple(data.get("entryPoints") or ()))


def model_to_dict(model: ApplicationModel) -> dict:
    def instr(i: Instruction) -> dict:
        return {
            "ii": i.ii,
            "kind": i.kind,
            "params": dict(i.params),
            "def": i.def_var,
            "use": list(i.uses),
            "scope": [{"kind": s.kind, "id": s.id, "arm": s.arm} for s in i.scope],
        }

    return {
        "types": [
            {
                "name": t.name,
                "persistent": t.persistent,
                "fields": [
                    {"name": f.name, "type": f.type, "cardinality": f.cardinality}
                    for f in t.fields
                ],
                "methods": [
                    {
                        "name": m.name,
                        "params": [{"name": n, "type": ty} for n, ty in m.params],
                        "returns": m.returns,
                        "overrides": m.overrides,
                        "instructions": [instr(i) for i in m.instructions],
                    }
                    for m in t.methods
                ],
            }
            for t in model.types
        ],
        "entryPoints": list(model.entry_points),
    }


def dumps(model: ApplicationModel) -> str:
    return json.dumps(model_to_dict(model), indent=1)


def loads(text: str) -> ApplicationModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    model = model_from_dict(data)
    _resolve(model)
    return model


def parse_application(path: str | Path) -> ApplicationModel:
    """Load and resolve an application file.

    Raises ParseError for malformed input and ResolveError for the first
    unknown type, field or method reference.
    """
    return loads(Path(path).read_text(encoding="utf-8"))


def _resolve(model: ApplicationModel) -> None:
    for v in _reference_violations(model):
        raise ResolveError(v.subject, v.method or v.type or "model")


# ---------------------------------------------------------------------------
# validation


def _type_known(model: ApplicationModel, name: str) -> bool:
    return model.is_declared(name) or name in PRIMITIVES or is_library_type(name)


def _reference_violations(model: ApplicationModel) -> Iterable[Violation]:
    def unresolved(name, what, type_=None, method=None, ii=None):
        return Violation(f"unknown {what} {name!r}", type_, method, ii, subject=name)

    for t in model.types:
        for f in t.fields:
            if not _type_known(model, f.type):
                yield unresolved(f.type, f"type for field {f.name}:", t.name)
        for m in t.methods:
            ref = f"{t.name}.{m.name}"
            for _, pt in m.params:
                if not _type_known(model, pt):
                    yield unresolved(pt, "parameter type", t.name, ref)
            if m.returns and not _type_known(model, m.returns):
                yield unresolved(m.returns, "return type", t.name, ref)
            if m.overrides and not model.is_declared(m.overrides):
                yield unresolved(m.overrides, "overridden type", t.name, ref)
            for i in m.instructions:
                owner = i.params.get("ownerType") or ""
                if i.kind == "getfield":
                    fname = i.params.get("fieldName")
                    if not model.is_declared(owner):
                        yield unresolved(owner, "getfield owner type", t.name, ref, i.ii)
                    elif model.type(owner).field(fname) is None:
                        yield unresolved(f"{owner}.{fname}", "field", t.name, ref, i.ii)
                elif i.kind == "invokemethod":
                    mname = i.params.get("methodName")
                    if model.is_declared(owner):
                        if model.type(owner).method(mname) is None:
                            yield unresolved(f"{owner}.{mname}", "method", t.name, ref, i.ii)
                    elif not is_library_type(owner):
                        yield unresolved(owner, "invoked type", t.name, ref, i.ii)
    for ep in model.entry_points:
        if model.method(ep) is None:
            yield unresolved(ep, "entry point")


def validate_model(model: ApplicationModel) -> ValidationReport:
    """Collect every invariant violation; an empty report means the model is valid."""
    out = list(_reference_violations(model))
    seen_types: set[str] = set()
    for t in model.types:
        if t.name in seen_types:
            out.append(Violation(f"duplicate type name {t.name}", t.name))
        seen_types.add(t.name)
        names = [f.name for f in t.fields]
        for dup in sorted({n for n in names if names.count(n) > 1}):
            out.append(Violation(f"duplicate field name {dup}", t.name))
        for f in t.fields:
            if f.cardinality not in CARDINALITIES:
                out.append(Violation(f"bad cardinality {f.cardinality!r} on {f.name}", t.name))
            elif f.cardinality == "collection" and not model.is_declared(f.type):
                out.append(Violation(f"collection field {f.name} of non-declared type", t.name))
        mnames = [m.name for m in t.methods]
        for dup in sorted({n for n in mnames if mnames.count(n) > 1}):
            out.append(Violation(f"duplicate method name {dup}", t.name))
        for m in t.methods:
            out.extend(_method_violations(t, m))
    return ValidationReport(out)


def _method_violations(t: TypeDecl, m: MethodDecl) -> Iterable[Violation]:
    ref = f"{t.name}.{m.name}"
    defined = {SELF} | {f"p{k}" for k in range(len(m.params))}
    n = len(m.instructions)
    for pos, i in enumerate(m.instructions):
        if i.ii != pos:
            yield Violation(f"instruction index {i.ii} at position {pos}", t.name, ref, i.ii)
        for u in i.uses:
            if u not in defined:
                yield Violation(f"use of undefined variable {u}", t.name, ref, i.ii)
        if i.def_var is not None:
            if i.def_var in defined:
                yield Violation(f"variable {i.def_var} assigned twice", t.name, ref, i.ii)
            defined.add(i.def_var)
        if i.kind in ("goto", "conditionalbranch"):
            target = i.params.get("target")
            if not isinstance(target, int) or not 0 <= target <= n:
                yield Violation(f"jump target {target!r} out of range", t.name, ref, i.ii)
        if i.kind == "conditionalbranch" and i.params.get("op", "oracle") not in BRANCH_OPS:
            yield Violation(f"unknown branch op {i.params.get('op')!r}", t.name, ref, i.ii)
        if i.kind in ("getfield", "arrayload") and not i.uses:
            yield Violation(f"{i.kind} without operand", t.name, ref, i.ii)
        # library calls may be static (constructors and the like)
        if i.kind == "invokemethod" and not i.uses and not is_library_type(i.params.get("ownerType", "")):
            yield Violation("invokemethod without receiver", t.name, ref, i.ii)


def is_branch_dependent(instr: Instruction) -> bool:
    """True if the instruction sits in a conditional arm, or is a loop exit inside a loop."""
    return instr.in_branch() or (instr.kind in EXIT_KINDS and instr.in_loop())
