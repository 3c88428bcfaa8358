import pytest

from caprelab.benchgen import random_case
from caprelab.builder import MethodBuilder, type_decl
from caprelab import ir
from caprelab.hints import analyze, format_path
from caprelab.interp import Interpreter, oracle_accessed_paths
from caprelab.oracle import EXACT, SUPERSET_BD, SUPERSET_DATA, VIOLATION, oracle_check
from caprelab.trace import BranchOracle, TraceError, WorkloadTrace
from hypothesis import given, settings
from hypothesis import strategies as st


def forced(bench, value):
    return WorkloadTrace(bench.traces["setAllTransCustomers"].steps, {"mode": "fixed", "value": value})


def verdicts(analysis, bench, trace):
    return {v.method: v for v in oracle_check(analysis, bench.dataset, trace)}


def test_empty_trace_observes_nothing(bank_bench):
    assert oracle_accessed_paths(bank_bench.model, bank_bench.dataset, WorkloadTrace([])) == {}


def test_then_arm_skips_dept(bank_bench):
    a = analyze(bank_bench.model)
    v = verdicts(a, bank_bench, forced(bank_bench, True))
    assert v["BankManagement.setAllTransCustomers"].verdict == SUPERSET_BD
    assert v["BankManagement.setAllTransCustomers"].missing == ["transactions@collection.emp.dept"]
    assert v["Transaction.getAccount"].verdict == SUPERSET_BD
    assert v["Account.setCustomer"].verdict == EXACT


def test_else_arm_is_exact(bank_bench):
    a = analyze(bank_bench.model)
    v = verdicts(a, bank_bench, forced(bank_bench, False))
    assert {m: x.verdict for m, x in v.items()} == {
        "BankManagement.setAllTransCustomers": EXACT,
        "Transaction.getAccount": EXACT,
        "Account.setCustomer": EXACT,
    }
    observed = oracle_accessed_paths(bank_bench.model, bank_bench.dataset, forced(bank_bench, False))
    assert "transactions@collection.emp.dept" in {
        format_path(p) for p in observed["BankManagement.setAllTransCustomers"]
    }


def test_empty_collection_gives_data_superset():
    from caprelab.store import ObjectRecord

    b = MethodBuilder("Box", "sum")
    items = b.getfield(b.this, "Box", "items")
    with b.foreach(items) as it:
        b.getfield(b.getfield(it, "Item", "tag"), "Tag", "name")
    model = ir.ApplicationModel(
        (
            type_decl("Box", [("items", "Item", "collection")], [b.build()]),
            type_decl("Item", [("tag", "Tag")]),
            type_decl("Tag", [("name", "string")]),
        ),
        ("Box.sum",),
    )
    data = [ObjectRecord("b", "Box", {}, {"items": []}, {})]
    v = oracle_check(analyze(model), data, WorkloadTrace([("Box.sum", "b")]))
    assert [(x.method, x.verdict) for x in v] == [("Box.sum", SUPERSET_DATA)]
    assert v[0].missing == ["items@collection", "items@collection.tag"]


def test_unknown_root_is_trace_error(bank_bench):
    with pytest.raises(TraceError):
        oracle_accessed_paths(bank_bench.model, bank_bench.dataset,
                              WorkloadTrace([("BankManagement.setAllTransCustomers", "nope")]))


def test_missing_hint_is_a_violation(bank_bench):
    a = analyze(bank_bench.model)
    hints = dict(a.raw)
    hs = hints["Account.setCustomer"]
    hints["Account.setCustomer"] = type(hs)(hs.method_ref, hs.source_type, frozenset())
    v = {x.method: x for x in oracle_check(a, bank_bench.dataset, forced(bank_bench, False), hints=hints)}
    assert v["Account.setCustomer"].verdict == VIOLATION
    assert v["Account.setCustomer"].unpredicted == ["cust", "cust.company"]


def test_branch_oracle_modes():
    o = BranchOracle({"mode": "script", "outcomes": [True, False]}, 0)
    assert [o() for _ in range(4)] == [True, False, True, False]
    o.begin_step({"mode": "fixed", "value": False})
    assert not o()
    a, b = BranchOracle({"mode": "prob", "p": 0.5}, 7), BranchOracle({"mode": "prob", "p": 0.5}, 7)
    assert [a() for _ in range(20)] == [b() for _ in range(20)]


def test_deep_recursion_runs_without_python_stack():
    b = MethodBuilder("Node", "walk")
    nxt = b.getfield(b.this, "Node", "next")
    with b.if_(nxt, op="true"):
        b.invoke(nxt, "Node", "walk", result=False)
    model = ir.ApplicationModel((type_decl("Node", [("next", "Node")], [b.build()]),), ("Node.walk",))
    from caprelab.store import ObjectRecord

    n = 5000
    data = {f"n{i}": ObjectRecord(f"n{i}", "Node", {"next": f"n{i + 1}"} if i + 1 < n else {}, {}, {})
            for i in range(n)}
    interp = Interpreter(model, data, BranchOracle({}, 0))
    loads = [e[1] for e in interp.run_trace(WorkloadTrace([("Node.walk", "n0")])) if e[0] == "load"]
    assert loads == [f"n{i}" for i in range(n)]


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 100_000), branches=st.booleans())
def test_random_programs_never_violate(seed, branches):
    case = random_case(seed, branches=branches)
    a = analyze(case.model)
    for v in oracle_check(a, case.dataset, case.trace, seed):
        assert v.verdict != VIOLATION, v
        if not branches:
            assert v.verdict == EXACT, v
