import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caprelab import ir
from caprelab.benchgen import (
    FAMILIES,
    BenchmarkSpec,
    SpecError,
    generate,
    graph,
    kmeans,
    oo7,
    trace_for,
    wordcount,
    write_benchmark,
)
from caprelab.interp import Interpreter
from caprelab.store import StoreConfig, build_store, check_dataset, load_dataset
from caprelab.trace import BranchOracle, WorkloadTrace

SMALL = {
    "bank": {"transactions": 12},
    "oo7": {"size": "small", "composites": 8},
    "wordcount": {"files": 4, "collections": 2, "words_total": 400, "chunks": 3},
    "kmeans": {"n": 60, "k": 3, "dims": 2, "fragments": 4},
    "graph": {"v": 30, "e": 90},
}


def test_oo7_small_is_about_a_thousand_objects():
    b = oo7("small", seed=1)
    assert 900 <= len(b.dataset) <= 1200
    assert set(b.traces) == {"t1", "t2a", "t2b", "t2c"}


def test_wordcount_chunking_keeps_word_total():
    one = wordcount(chunks=1, words_total=10_000)
    many = wordcount(chunks=1000, words_total=10_000)

    def words(b):
        return sum(r.values["words"] for r in b.dataset if r.type_name == "Chunk")

    assert words(one) == words(many) == 10_000
    assert sum(r.type_name == "Chunk" for r in many.dataset) == 8 * 1000


def test_graph_dfs_visits_every_vertex_once():
    b = graph(v=200, e=800, seed=3)
    interp = Interpreter(b.model, {r.oid: r for r in b.dataset}, BranchOracle({}, 0))
    entered = [e[2] for e in interp.run_trace(b.traces["dfs"]) if e[0] == "enter" and e[1] == "Vertex.dfs"]
    vertices = {r.oid for r in b.dataset if r.type_name == "Vertex"}
    assert sorted(entered) == sorted(vertices)


def test_kmeans_touches_every_vector_each_iteration():
    b = kmeans(n=50, k=2, dims=2, fragments=5, iterations=3)
    interp = Interpreter(b.model, {r.oid: r for r in b.dataset}, BranchOracle({}, 0))
    loads = [e[1] for e in interp.run_trace(b.traces[next(iter(b.traces))]) if e[0] == "load"]
    vectors = [oid for oid in loads if oid.startswith("Vector#")]
    assert len(vectors) == 50 * 3


def test_unknown_inputs_rejected():
    with pytest.raises(SpecError):
        trace_for("oo7", "t9", oo7("small", composites=2).dataset)
    with pytest.raises(SpecError):
        BenchmarkSpec("tpcc")
    with pytest.raises(SpecError):
        generate(BenchmarkSpec("graph", {"nodes": 3}))
    with pytest.raises(SpecError):
        BenchmarkSpec("bank", {"transactions": 0})
    with pytest.raises(SpecError):
        oo7("huge")


@pytest.mark.parametrize("family", FAMILIES)
def test_written_benchmark_round_trips(family, tmp_path):
    bench = generate(BenchmarkSpec(family, SMALL[family], seed=5))
    write_benchmark(bench, tmp_path)
    model = ir.parse_application(tmp_path / "model.json")
    assert ir.validate_model(model)
    data = load_dataset(tmp_path / "dataset.json")
    assert check_dataset(data, model) == []
    info = json.loads((tmp_path / "info.json").read_text())
    assert info["objects"] == len(data) == len(bench.dataset)
    for name in bench.traces:
        tr = WorkloadTrace.load(tmp_path / "traces" / f"{name}.json")
        assert tr.steps == bench.traces[name].steps


@settings(max_examples=25, deadline=None)
@given(family=st.sampled_from(FAMILIES), seed=st.integers(0, 10_000), nodes=st.integers(1, 6))
def test_generated_data_is_placeable(family, seed, nodes):
    bench = generate(BenchmarkSpec(family, SMALL[family], seed=seed))
    assert ir.validate_model(bench.model)
    assert check_dataset(bench.dataset, bench.model) == []
    counts = build_store(bench.dataset, StoreConfig(num_nodes=nodes, seed=seed)).node_counts()
    assert sum(counts) == len(bench.dataset)


def test_generation_is_seeded():
    a = generate(BenchmarkSpec("graph", SMALL["graph"], seed=8))
    b = generate(BenchmarkSpec("graph", SMALL["graph"], seed=8))
    c = generate(BenchmarkSpec("graph", SMALL["graph"], seed=9))
    assert [r.to_dict() for r in a.dataset] == [r.to_dict() for r in b.dataset]
    assert [r.to_dict() for r in a.dataset] != [r.to_dict() for r in c.dataset]
