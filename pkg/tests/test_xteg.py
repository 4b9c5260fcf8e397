import numpy as np
import pytest

from bridgeguard.errors import DisconnectedGraph
from bridgeguard.ingest import flatten_frames, record_from_document
from bridgeguard.synthgen import gen_attack_tgt, gen_normal_deposit
from bridgeguard.xteg import (
    EMIT,
    EOA,
    EVENT,
    FUNCTION,
    build_xteg,
    dump_xteg,
    to_simple_digraph,
)
from conftest import random_record

A = "0x" + "aa" * 20
B = "0x" + "bb" * 20


def test_normal_deposit_structure():
    # Full deposit chain: EOA -> router.deposit -> token.transferFrom -> vault,
    # with lock + deposit emissions: 6 vertices, CALLx3 + EMITx2.
    graph = build_xteg(gen_normal_deposit(seed=1).record)
    assert len(graph.vertices) == 6
    kinds = sorted(e.kind for e in graph.edges)
    assert kinds == ["CALL", "CALL", "CALL", "EMIT", "EMIT"]
    assert all(e.multiplicity == 1 for e in graph.edges)


def test_minimal_single_call():
    record = record_from_document(
        {"trace": {"type": "CALL", "from": A, "to": B, "input": "0x"}, "logs": []})
    graph = build_xteg(record)
    assert len(graph.vertices) == 2
    assert len(graph.edges) == 1
    assert graph.edges[0].kind == "CALL"
    assert graph.vertices[0].kind == EOA


def test_target_attack_contains_create_and_selfdestruct_on_same_vertex():
    graph = build_xteg(gen_attack_tgt(seed=2).record)
    create = [e for e in graph.edges if e.kind == "CREATE"]
    destruct = [e for e in graph.edges if e.kind == "SELFDESTRUCT"]
    assert len(create) == 1 and len(destruct) == 1
    assert create[0].dst == destruct[0].src  # the created attack contract


def test_vertex_identity_merges_repeat_calls():
    # Two calls to the same (address, selector) collapse into one vertex,
    # and the parallel edges merge with multiplicity 2.
    trace = {"type": "CALL", "from": A, "to": B, "input": "0xdeadbeef", "calls": [
        {"type": "CALL", "from": B, "to": B, "input": "0xdeadbeef"},
    ]}
    record = record_from_document({"trace": trace, "logs": []})
    graph = build_xteg(record)
    assert len(graph.vertices) == 2
    loops = [e for e in graph.edges if e.src == e.dst]
    assert len(loops) == 1 and loops[0].multiplicity == 1
    # self-loop dropped in the simple reduction
    assert to_simple_digraph(graph).arcs == ((0, 1),)


def test_sender_address_is_always_the_eoa_vertex():
    # A call back to the sender maps onto the existing EOA vertex.
    trace = {"type": "CALL", "from": A, "to": B, "input": "0x", "calls": [
        {"type": "CALL", "from": B, "to": A, "input": "0x", "value": "0x1"},
    ]}
    graph = build_xteg(record_from_document({"trace": trace, "logs": []}))
    assert len(graph.vertices) == 2
    kinds = {v.kind for v in graph.vertices}
    assert kinds == {EOA, FUNCTION}
    addresses = [v.address for v in graph.vertices if v.kind == EOA]
    assert addresses == [A]


def test_degenerate_self_send_rejected():
    record = record_from_document(
        {"trace": {"type": "CALL", "from": A, "to": A, "input": "0x", "value": "0x1"},
         "logs": []})
    with pytest.raises(DisconnectedGraph):
        build_xteg(record)


def test_determinism_and_first_appearance_ids(rng):
    for _ in range(25):
        record = random_record(rng)
        g1 = build_xteg(record)
        g2 = build_xteg(record)
        assert g1 == g2
        assert [v.id for v in g1.vertices] == list(range(len(g1.vertices)))


def test_premerge_edge_count_identity(rng):
    # multiplicity-weighted edge count = (frames - 1 root excluded... the root
    # frame itself contributes one edge) + logs: frames + logs in total.
    for _ in range(25):
        record = random_record(rng)
        graph = build_xteg(record)
        total = sum(e.multiplicity for e in graph.edges)
        assert total == len(flatten_frames(record)) + len(record.logs)


def test_log_event_vertices_are_sinks(rng):
    for _ in range(25):
        record = random_record(rng)
        graph = build_xteg(record)
        for v in graph.vertices:
            if v.kind != EVENT:
                continue
            assert all(e.src != v.id for e in graph.edges)
            assert any(e.dst == v.id and e.kind == EMIT for e in graph.edges)


def test_emit_edges_terminate_only_at_event_vertices(rng):
    for _ in range(25):
        record = random_record(rng)
        graph = build_xteg(record)
        for e in graph.edges:
            dst_kind = graph.vertices[e.dst].kind
            assert (e.kind == EMIT) == (dst_kind == EVENT)


def test_edge_order_reflects_execution_sequence():
    deposit = gen_normal_deposit(seed=5).record
    graph = build_xteg(deposit)
    orders = [e.order for e in graph.edges]
    assert orders == sorted(orders) == list(range(len(graph.edges)))
    # Lock (log_index 0, emitted by the token frame) must come after the
    # token call edge; Deposit (log_index 1) must come after Lock.
    by_order = {e.order: e for e in graph.edges}
    emits = sorted(e.order for e in graph.edges if e.kind == EMIT)
    token_edge = next(e for e in graph.edges
                      if e.kind == "CALL" and e.dst == by_order[emits[0]].src)
    assert emits[0] > token_edge.order
    assert emits[1] > emits[0]


def test_simple_digraph_equals_bruteforce_dedup(rng):
    for _ in range(30):
        record = random_record(rng)
        graph = build_xteg(record)
        expected = set()
        for e in graph.edges:
            if e.src != e.dst:
                expected.add((e.src, e.dst))
        simple = to_simple_digraph(graph)
        assert set(simple.arcs) == expected
        assert simple.n == len(graph.vertices)
        adjacency = simple.adjacency()
        assert adjacency.sum() == len(expected)
        assert np.diagonal(adjacency).sum() == 0


def test_reciprocal_arcs_survive_simplification():
    trace = {"type": "CALL", "from": A, "to": B, "input": "0xdeadbeef", "calls": [
        {"type": "CALL", "from": B, "to": A, "input": "0x", "value": "0x1"},
    ]}
    graph = build_xteg(record_from_document({"trace": trace, "logs": []}))
    assert set(to_simple_digraph(graph).arcs) == {(0, 1), (1, 0)}


def test_dump_contains_vertices_and_edges():
    graph = build_xteg(gen_normal_deposit(seed=9).record)
    text = dump_xteg(graph)
    assert text.count("\nv ") + text.startswith("v ") == len(graph.vertices)
    assert text.count("\ne ") == len(graph.edges)
    assert "EMIT" in text
