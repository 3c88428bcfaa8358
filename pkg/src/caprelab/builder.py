"""Fluent construction of IR method bodies.

Loops and conditionals are context managers that emit the jump instructions
and maintain scope annotations, so hand-written fixtures stay short::

    b = MethodBuilder("BankManagement", "setAllTransCustomers")
    trans = b.getfield(b.this, "BankManagement", "transactions")
    with b.foreach(trans) as t:
        acct = b.invoke(t, "Transaction", "getAccount")
        ...
"""

from __future__ import annotations

import itertools
from contextlib import contextmanager

from .ir import SELF, FieldDecl, Instruction, MethodDecl, ScopeFrame, TypeDecl, normalize

ITER = "java.util.Iterator"
COLL = "java.util.Collection"


class MethodBuilder:
    def __init__(
        self,
        owner: str,
        name: str,
        params: list[tuple[str, str]] | None = None,
        returns: str | None = None,
        overrides: str | None = None,
    ):
        self.owner = owner
        self.name = name
        self.params = list(params or [])
        self.returns = returns
        self.overrides = overrides
        self._instrs: list[dict] = []
        self._scope: list[ScopeFrame] = []
        self._vars = itertools.count(1)
        self._scopes = itertools.count(1)

    this = SELF

    def param(self, k: int) -> str:
        return f"p{k}"

    def _var(self) -> str:
        return f"v{next(self._vars)}"

    def _emit(self, kind: str, params=None, uses=(), define=False) -> str | None:
        d = self._var() if define else None
        self._instrs.append(
            {
                "kind": kind,
                "params": dict(params or {}),
                "def": d,
                "use": list(uses),
                "scope": tuple(self._scope),
            }
        )
        return d

    def _here(self) -> int:
        return len(self._instrs)

    # -- instructions -------------------------------------------------------

    def getfield(self, obj: str, owner: str, field: str, field_type: str | None = None) -> str:
        params = {"ownerType": owner, "fieldName": field}
        if field_type:
            params["fieldType"] = field_type
        return self._emit("getfield", params, [obj], define=True)

    def invoke(self, recv: str, owner: str, method: str, args=(), result=True) -> str | None:
        return self._emit(
            "invokemethod", {"ownerType": owner, "methodName": method}, [recv, *args], result
        )

    def lib(self, owner: str, method: str, *uses: str) -> str:
        """Library call (non-declared owner); always defines a value."""
        return self._emit("invokemethod", {"ownerType": owner, "methodName": method}, uses, True)

    def noop(self, *uses: str) -> None:
        """Placeholder for side effects that navigate nothing, e.g. a primitive field write."""
        self._emit("noop", {}, uses)

    def ret(self, var: str | None = None) -> None:
        self._emit("return", {}, [var] if var else [])

    def brk(self) -> None:
        self._emit("break", {"target": None})

    # -- structured control flow -------------------------------------------

    @contextmanager
    def foreach(self, coll: str, style: str = "iterator"):
        """Iterate a collection value; yields the element variable.

        ``style="iterator"`` spells the loop with Iterator.next() (normalized
        to arrayload on load), ``style="arrayload"`` emits arrayload directly.
        """
        it = self.lib(COLL, "iterator", coll)
        loop = ScopeFrame("loop", f"L{next(self._scopes)}")
        self._scope.append(loop)
        head = self._here()
        has = self.lib(ITER, "hasNext", it)
        branch_at = self._here()
        self._emit("conditionalbranch", {"op": "false", "target": None}, [has])
        if style == "iterator":
            elem = self._emit("invokemethod", {"ownerType": ITER, "methodName": "next"}, [it], True)
        else:
            elem = self._emit("arrayload", {}, [it], True)
        breaks_from = self._here()
        yield elem
        self._emit("goto", {"target": head})
        self._scope.pop()
        end = self._here()
        self._instrs[branch_at]["params"]["target"] = end
        for ins in self._instrs[breaks_from:end]:
            if ins["kind"] == "break" and ins["params"].get("target") is None:
                ins["params"]["target"] = end

    @contextmanager
    def loop(self):
        """Unconditional loop; leave it with ``brk()`` (typically under ``if_``)."""
        frame = ScopeFrame("loop", f"L{next(self._scopes)}")
        self._scope.append(frame)
        head = self._here()
        yield
        self._emit("goto", {"target": head})
        self._scope.pop()
        end = self._here()
        for ins in self._instrs[head:end]:
            if ins["kind"] == "break" and ins["params"].get("target") is None:
                ins["params"]["target"] = end

    @contextmanager
    def if_(self, *uses: str, op: str = "oracle"):
        """``if (cond) { then }``; with op=oracle the branch oracle decides the condition."""
        frame = ScopeFrame("branch", f"B{next(self._scopes)}", "then")
        at = self._here()
        self._emit("conditionalbranch", {"op": _skip_op(op), "target": None}, uses)
        self._scope.append(frame)
        yield
        self._scope.pop()
        self._instrs[at]["params"]["target"] = self._here()

    @contextmanager
    def if_else(self, *uses: str, op: str = "oracle"):
        """Yields a callable that switches emission to the else arm."""
        bid = f"B{next(self._scopes)}"
        at = self._here()
        self._emit("conditionalbranch", {"op": _skip_op(op), "target": None}, uses)
        self._scope.append(ScopeFrame("branch", bid, "then"))
        state = {}

        def otherwise():
            state["goto"] = self._here()
            self._emit("goto", {"target": None})
            self._scope[-1] = ScopeFrame("branch", bid, "else")
            self._instrs[at]["params"]["target"] = self._here()

        yield otherwise
        self._scope.pop()
        if "goto" in state:
            self._instrs[state["goto"]]["params"]["target"] = self._here()
        else:
            self._instrs[at]["params"]["target"] = self._here()

    # -- output -------------------------------------------------------------

    def build(self) -> MethodDecl:
        instrs = []
        for ii, d in enumerate(self._instrs):
            ins = Instruction(ii, d["kind"], d["params"], d["def"], tuple(d["use"]), d["scope"])
            instrs.append(normalize(ins))
        return MethodDecl(self.name, tuple(self.params), tuple(instrs), self.returns, self.overrides)


def _skip_op(op: str) -> str:
    # The emitted branch jumps over the then-arm; "oracle" stays as is because the
    # interpreter treats an oracle outcome of True as "enter the then-arm".
    return {"oracle": "oracle", "true": "false", "false": "true", "eq": "ne", "ne": "eq"}[op]


def type_decl(name: str, fields=(), methods=(), persistent: bool = True) -> TypeDecl:
    """fields: iterable of (name, type) or (name, type, cardinality)."""
    fds = tuple(FieldDecl(*f) if len(f) == 3 else FieldDecl(f[0], f[1]) for f in fields)
    return TypeDecl(name, persistent, fds, tuple(methods))
