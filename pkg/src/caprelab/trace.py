"""Workload traces and the seeded branch oracle."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    method: str
    root: str
    args: tuple[str, ...] = ()
    branches: dict | None = field(default=None, compare=False, hash=False)


def _as_step(s) -> Step:
    if isinstance(s, Step):
        return s
    method, root, *rest = s
    return Step(method, root, tuple(rest[0]) if rest else ())


@dataclass(init=False)
class WorkloadTrace:
    """Ordered method invocations plus the branch-oracle policy.

    ``branches`` is one of ``{"mode": "prob", "p": 0.5}``,
    ``{"mode": "fixed", "value": true}`` or
    ``{"mode": "script", "outcomes": [true, false, ...]}``; a step may carry
    its own override.
    """

    steps: list[Step]
    branches: dict

    def __init__(self, steps=(), branches: dict | None = None):
        self.steps = [_as_step(s) for s in steps]
        self.branches = dict(branches or {"mode": "prob", "p": 0.5})

    def to_json(self) -> str:
        return json.dumps(
            {
                "steps": [
                    {"method": s.method, "root": s.root, "args": list(s.args)}
                    | ({"branches": s.branches} if s.branches else {})
                    for s in self.steps
                ],
                "branches": self.branches,
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> WorkloadTrace:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TraceError(f"malformed trace: {exc}") from exc
        steps = []
        for k, s in enumerate(data.get("steps", [])):
            if "method" not in s or "root" not in s:
                raise TraceError(f"step {k} needs method and root")
            steps.append(Step(s["method"], s["root"], tuple(s.get("args", ())), s.get("branches")))
        return cls(steps, data.get("branches"))

    @classmethod
    def load(cls, path: str | Path) -> WorkloadTrace:
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


class BranchOracle:
    """Resolves data-dependent conditionals; one RNG stream per run, consumed in program order."""

    def __init__(self, default: dict, seed: int):
        self.default = default
        self.rng = random.Random(seed)
        self.spec = default
        self._script_pos = 0

    def begin_step(self, override: dict | None) -> None:
        self.spec = override or self.default
        self._script_pos = 0

    def __call__(self) -> bool:
        spec = self.spec
        mode = spec.get("mode", "prob")
        if mode == "fixed":
            return bool(spec.get("value", True))
        if mode == "script":
            outcomes = spec.get("outcomes") or [True]
            out = outcomes[self._script_pos % len(outcomes)]
            self._script_pos += 1
            return bool(out)
        if mode == "prob":
            return self.rng.random() < float(spec.get("p", 0.5))
        raise TraceError(f"unknown branch mode {mode!r}")
