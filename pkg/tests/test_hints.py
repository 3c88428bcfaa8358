import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caprelab import ir
from caprelab.benchgen import random_case, wordcount_model
from caprelab.builder import MethodBuilder, type_decl
from caprelab.graphs import AugmentedTypeGraph, NavNode, build_app_type_graph
from caprelab.hints import (
    CallGraph,
    HintError,
    HintSet,
    UnknownType,
    analyze,
    dedup_hints,
    generate_hints,
    hints_from_json,
    hints_to_json,
    parse_path,
    rop_hints,
    validate_hint,
)


def strings(hs):
    return set(hs.strings())


def test_set_all_trans_customers_hints(bank_app):
    a = analyze(bank_app)
    assert strings(a.raw["BankManagement.setAllTransCustomers"]) == {
        "transactions@collection.type",
        "transactions@collection.emp.dept",
        "transactions@collection.account.cust.company",
        "manager.company",
    }


def test_get_account_hints(bank_app):
    a = analyze(bank_app)
    assert strings(a.raw["Transaction.getAccount"]) == {"type", "emp.dept", "account"}
    assert strings(a.raw["Account.setCustomer"]) == {"cust.company"}


def test_root_only_graph_gives_no_hints():
    ag = AugmentedTypeGraph("A.m")
    ag.add_node(NavNode("root", ir.SELF, None, "A"))
    assert len(generate_hints(ag)) == 0


def test_no_hint_is_prefix_of_another(bank_app):
    for hs in analyze(bank_app).raw.values():
        paths = hs.paths()
        for p in paths:
            assert not any(q != p and q[: len(p)] == p for q in paths)


def test_dedup_bank(bank_app):
    a = analyze(bank_app)
    # every getAccount / setCustomer hint is covered by the single caller
    assert len(a.hints["Transaction.getAccount"]) == 0
    assert len(a.hints["Account.setCustomer"]) == 0
    assert a.hints["BankManagement.setAllTransCustomers"] == a.raw["BankManagement.setAllTransCustomers"]


def two_callers_model():
    b = MethodBuilder("C", "leaf")
    b.getfield(b.getfield(b.this, "C", "d"), "D", "e")
    leaf = b.build()
    b = MethodBuilder("A", "viaA")
    b.invoke(b.getfield(b.this, "A", "c"), "C", "leaf", result=False)
    via_a = b.build()
    b = MethodBuilder("B", "viaB")
    c = b.getfield(b.this, "B", "c")
    with b.if_():
        b.invoke(c, "C", "leaf", result=False)
    via_b = b.build()
    b = MethodBuilder("B", "other")
    b.invoke(b.this, "B", "viaB", result=False)
    other = b.build()
    model = ir.ApplicationModel(
        (
            type_decl("A", [("c", "C")], [via_a]),
            type_decl("B", [("c", "C")], [via_b, other]),
            type_decl("C", [("d", "D")], [leaf]),
            type_decl("D", [("e", "E")]),
            type_decl("E", []),
        ),
        ("A.viaA",),
    )
    return model


def test_dedup_requires_every_caller():
    model = two_callers_model()
    a = analyze(model)
    assert strings(a.hints["C.leaf"]) == set()  # both A.viaA and B.viaB carry c.d.e
    # drop B's copy: the hint is no longer covered at every call site
    raw = dict(a.raw)
    raw["B.viaB"] = HintSet("B.viaB", "B", frozenset())
    assert strings(dedup_hints(raw, a.call_graph)["C.leaf"]) == {"d.e"}


def test_dedup_leaves_entry_points_and_orphans():
    model = two_callers_model()
    a = analyze(model)
    assert a.hints["A.viaA"] == a.raw["A.viaA"]  # entry point
    assert a.hints["B.other"] == a.raw["B.other"]  # no callers


def test_dedup_idempotent_and_fixpoint(bank_app):
    a = analyze(bank_app)
    once = dedup_hints(a.raw, a.call_graph)
    assert dedup_hints(once, a.call_graph) == once
    assert dedup_hints(a.raw, a.call_graph, fixpoint=True) == once


def test_rop_golden(bank_app):
    g = build_app_type_graph(bank_app)
    assert strings(rop_hints("Transaction", 1, g)) == {"type", "account", "emp"}
    d2 = rop_hints("Transaction", 2, g).closure()
    d1 = rop_hints("Transaction", 1, g).closure()
    assert {".".join(f for f, _ in p) for p in d2 - d1} == {"emp.dept", "account.cust"}


def test_rop_collection_only_type_is_empty():
    g = build_app_type_graph(wordcount_model())
    for d in (1, 3, 10):
        assert len(rop_hints("Driver", d, g)) == 0


def test_rop_errors(bank_app):
    g = build_app_type_graph(bank_app)
    with pytest.raises(UnknownType):
        rop_hints("Ledger", 1, g)
    with pytest.raises(ValueError):
        rop_hints("Transaction", 0, g)


def test_hint_file_round_trip(bank_app):
    a = analyze(bank_app, dedup=False)
    text = hints_to_json(a.hints)
    assert hints_from_json(text, bank_app) == a.hints
    assert "transactions@collection.type" in json.loads(text)["BankManagement.setAllTransCustomers"]


def test_hint_file_rejects_invalid_paths(bank_app):
    with pytest.raises(HintError):
        hints_from_json('{"Transaction.getAccount": ["emp.salary"]}', bank_app)
    with pytest.raises(HintError):
        hints_from_json('{"Transaction.getAccount": ["account@collection"]}', bank_app)
    with pytest.raises(HintError):
        hints_from_json("[1, 2", bank_app)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), branches=st.booleans())
def test_every_hint_is_a_walk_in_the_type_graph(seed, branches):
    model = random_case(seed, branches=branches).model
    a = analyze(model)
    for ref, hs in a.raw.items():
        for h in hs.hints:
            assert h.path
            validate_hint(a.g, hs.source_type, h.path)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n_types=st.integers(2, 8))
def test_rop_stagnates(seed, n_types):
    model = random_case(seed, n_types=n_types).model
    g = build_app_type_graph(model)
    for t in g.nodes:
        big = rop_hints(t, len(g.nodes), g)
        for d in range(len(g.nodes), len(g.nodes) + 4):
            assert rop_hints(t, d, g) == big
        assert all(card == "single" for h in big.hints for _, card in h.path)


def test_parse_path():
    assert parse_path("a@collection.b") == (("a", "collection"), ("b", "single"))
    with pytest.raises(HintError):
        parse_path("a..b")


def test_call_graph_edges_match_invocations(bank_app):
    cg = analyze(bank_app).call_graph
    assert isinstance(cg, CallGraph)
    assert cg.callers["Transaction.getAccount"] == {"BankManagement.setAllTransCustomers"}
    assert cg.callers["BankManagement.setAllTransCustomers"] == set()
