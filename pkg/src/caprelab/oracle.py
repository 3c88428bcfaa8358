"""Compare the paths a replay actually navigated with the statically derived hints."""

from __future__ import annotations

from dataclasses import dataclass

from .hints import Analysis, HintSet, format_path
from .interp import oracle_accessed_paths
from .trace import WorkloadTrace

EXACT = "exact"
SUPERSET_BD = "superset(branch-dependent)"
SUPERSET_DATA = "superset(data)"
UNDER_TRUNCATED = "under(truncated)"
UNDER_OVERRIDDEN = "under(overridden)"
VIOLATION = "VIOLATION"


@dataclass
class MethodVerdict:
    method: str
    verdict: str
    missing: list[str]  # hinted but never navigated
    unpredicted: list[str]  # navigated but not hinted

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "verdict": self.verdict,
            "missing": self.missing,
            "unpredicted": self.unpredicted,
        }


def verdict_for(
    analysis: Analysis, ref: str, observed: set, hints: dict[str, HintSet] | None = None
) -> MethodVerdict:
    """Classify one method.

    Hints may over-approximate (both arms of a branch, or data such as empty
    collections and null references); the only acceptable under-approximation
    comes from cut recursion or calls to overriding methods, which the
    analysis deliberately does not follow.
    """
    hs = (hints if hints is not None else analysis.raw).get(ref)
    expected = hs.closure() if hs else set()
    ag = analysis.graphs[ref]
    missing = sorted(format_path(p) for p in expected - observed)
    extra = sorted(format_path(p) for p in observed - expected)
    if extra:
        if ag.truncated:
            v = UNDER_TRUNCATED
        elif any(cs.status == "overridden" for cs in ag.call_sites):
            v = UNDER_OVERRIDDEN
        else:
            v = VIOLATION
    elif missing:
        v = SUPERSET_BD if ag.has_branch_dependent() else SUPERSET_DATA
    else:
        v = EXACT
    return MethodVerdict(ref, v, missing, extra)


def oracle_check(
    analysis: Analysis,
    dataset,
    trace: WorkloadTrace,
    seed: int = 0,
    hints: dict[str, HintSet] | None = None,
) -> list[MethodVerdict]:
    """Verdict per executed method; compares against the pre-dedup hints unless
    an explicit hint map is given."""
    observed = oracle_accessed_paths(analysis.model, dataset, trace, seed)
    return [verdict_for(analysis, ref, observed[ref], hints) for ref in sorted(observed)]
