import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caprelab import ir
from caprelab.benchgen import bank_model, random_case
from caprelab.builder import MethodBuilder, type_decl
from caprelab.graphs import GraphBuilder
from caprelab.ir import Instruction, ScopeFrame, is_branch_dependent


def test_bank_fixture_matches_generator(bank_app):
    assert bank_app == bank_model()


def test_bank_fixture_methods(bank_app):
    assert {t.name for t in bank_app.types} >= {
        "Transaction", "TransactionType", "Account", "Customer", "Company", "Employee", "Department"
    }
    assert set(bank_app.method_refs()) == {
        "Transaction.getAccount", "Account.setCustomer", "BankManagement.setAllTransCustomers"
    }
    assert ir.validate_model(bank_app)


def test_empty_model(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text('{"types": []}')
    m = ir.parse_application(p)
    assert m.types == () and m.entry_points == ()


def test_unknown_type_is_named():
    doc = {"types": [{"name": "Bank", "fields": [{"name": "book", "type": "Ledger"}]}]}
    with pytest.raises(ir.ResolveError) as info:
        ir.loads(json.dumps(doc))
    assert info.value.name == "Ledger"


def test_parse_error_has_position():
    with pytest.raises(ir.ParseError) as info:
        ir.loads('{"types": [\n  {"name": }\n]}')
    assert info.value.line == 2


def test_undefined_use_is_reported_with_method_and_index():
    b = MethodBuilder("A", "m")
    b.getfield(b.this, "A", "x")
    m = b.build()
    bad = ir.Instruction(1, "noop", {}, None, ("v99",), ())
    m = ir.MethodDecl(m.name, m.params, m.instructions + (bad,))
    model = ir.ApplicationModel((type_decl("A", [("x", "int")], [m]),))
    report = ir.validate_model(model)
    assert len(report) == 1
    v = report.violations[0]
    assert (v.method, v.ii) == ("A.m", 1)
    assert json.loads(report.to_jsonl())["ii"] == 1


def test_duplicate_field():
    model = ir.ApplicationModel((type_decl("A", [("x", "int"), ("x", "long")]),))
    assert len(ir.validate_model(model)) == 1


def test_iterator_next_normalized_to_arrayload():
    ins = Instruction(3, "invokemethod", {"ownerType": "java.util.Iterator", "methodName": "next"},
                      "v4", ("v2",), (ScopeFrame("loop", "L1"),))
    assert ir.normalize(ins).kind == "arrayload"


def test_dept_is_branch_dependent_account_is_not(bank_app):
    m = bank_app.method("Transaction.getAccount")
    by_field = {i.params.get("fieldName"): i for i in m.instructions if i.kind == "getfield"}
    assert is_branch_dependent(by_field["dept"])
    assert not is_branch_dependent(by_field["account"])


def test_break_in_loop_is_branch_dependent():
    ins = Instruction(0, "break", {"target": 1}, None, (), (ScopeFrame("loop", "L1"),))
    assert is_branch_dependent(ins)
    assert not is_branch_dependent(Instruction(0, "return", {}, None, (), ()))


frames = st.lists(
    st.builds(ScopeFrame, st.sampled_from(["loop", "branch"]), st.sampled_from(["a", "b"]),
              st.sampled_from([None, "then", "else"])),
    max_size=4,
)


@given(kind=st.sampled_from(sorted(ir.KINDS)), scope=frames, ii=st.integers(0, 50))
def test_branch_dependence_is_a_function_of_kind_and_scope(kind, scope, ii):
    a = Instruction(ii, kind, {}, None, (), tuple(scope))
    b = Instruction(0, kind, {"target": 3}, "v1", ("v0",), tuple(scope))
    assert is_branch_dependent(a) == is_branch_dependent(b)
    expected = any(f.kind == "branch" for f in scope) or (
        kind in ("return", "break", "continue") and any(f.kind == "loop" for f in scope)
    )
    assert is_branch_dependent(a) == expected


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), branches=st.booleans())
def test_round_trip_and_validity(seed, branches):
    model = random_case(seed, branches=branches).model
    again = ir.loads(ir.dumps(model))
    assert again == model
    assert ir.validate_model(again)
    # a valid model analyzes without resolution failures
    GraphBuilder(again).build_all()


def test_round_trip_fixture(bank_app):
    assert ir.loads(ir.dumps(bank_app)) == bank_app
