import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bridgeguard.errors import EmptyTrace, InvalidConfig, MalformedTrace
from bridgeguard.hashing import keccak256
from bridgeguard.ingest import (
    LABELS,
    DatasetManifest,
    ManifestEntry,
    flatten_frames,
    load_manifest,
    load_trace_file,
    record_from_document,
    save_manifest,
    save_trace_file,
    validate_record,
)
from conftest import random_trace_doc

A = "0x" + "aa" * 20
B = "0x" + "bb" * 20
C = "0x" + "cc" * 20


def _doc(trace, logs=None, **extra):
    doc = {"trace": trace, "logs": logs or []}
    doc.update(extra)
    return doc


def test_nested_children_depths():
    trace = {"type": "CALL", "from": A, "to": B, "input": "0x", "calls": [
        {"type": "CALL", "from": B, "to": C, "input": "0x"},
        {"type": "CALL", "from": B, "to": A, "input": "0x"},
    ]}
    record = record_from_document(_doc(trace))
    frames = flatten_frames(record)
    assert len(frames) == 3
    assert [f.depth for f in frames] == [0, 1, 1]
    validate_record(record)


def test_minimal_root_only():
    record = record_from_document(_doc({"type": "CALL", "from": A, "to": B, "input": "0x"}))
    assert len(flatten_frames(record)) == 1
    assert record.logs == []


def test_selector_extracted_from_token_transfer_calldata(tmp_path):
    # Oracle: first 4 bytes of keccak256 of the canonical signature.
    expected = keccak256(b"transfer(address,uint256)")[:4].hex()
    assert expected == "a9059cbb"
    calldata = "0x" + expected + "00" * 64
    path = tmp_path / "tx.json"
    path.write_text(json.dumps(_doc({"type": "CALL", "from": A, "to": B,
                                     "input": calldata})))
    record = load_trace_file(path)
    assert record.root_frame.selector == expected


def test_selector_absent_for_short_input():
    for short in ("0x", "0xa9", "0xa9059c"):
        record = record_from_document(_doc({"type": "CALL", "from": A, "to": B,
                                            "input": short}))
        assert record.root_frame.selector is None


def test_flatten_order_matches_preorder():
    trace = {"type": "CALL", "from": A, "to": B, "input": "0x", "calls": [
        {"type": "CALL", "from": B, "to": C, "input": "0x", "calls": [
            {"type": "CALL", "from": C, "to": A, "input": "0x"},
        ]},
        {"type": "CALL", "from": B, "to": A, "input": "0x"},
    ]}
    record = record_from_document(_doc(trace))
    frames = flatten_frames(record)
    assert [f.order for f in frames] == [0, 1, 2, 3]


def _count_naive(frame) -> int:
    return 1 + sum(_count_naive(child) for child in frame.children)


def _preorder_naive(frame):
    yield frame
    for child in frame.children:
        yield from _preorder_naive(child)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_flatten_matches_naive_recursion(seed):
    rng = np.random.default_rng(seed)
    record = record_from_document(random_trace_doc(rng, max_frames=200))
    frames = flatten_frames(record)
    assert len(frames) == _count_naive(record.root_frame)
    assert [f.order for f in frames] == [f.order for f in _preorder_naive(record.root_frame)]
    assert [f.order for f in frames] == list(range(len(frames)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_round_trip_through_disk_format(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    record = record_from_document(random_trace_doc(rng, max_frames=60))
    path = tmp_path_factory.mktemp("rt") / "tx.json"
    save_trace_file(record, path)
    assert load_trace_file(path) == record


def test_errors_empty_and_malformed(tmp_path):
    with pytest.raises(EmptyTrace):
        record_from_document({"trace": None, "logs": []})
    with pytest.raises(EmptyTrace):
        record_from_document({"logs": []})
    with pytest.raises(MalformedTrace):
        record_from_document(_doc({"type": "FOO", "from": A, "to": B, "input": "0x"}))
    with pytest.raises(MalformedTrace):
        record_from_document(_doc({"type": "CALL", "from": "nothex", "to": B,
                                   "input": "0x"}))
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(MalformedTrace):
        load_trace_file(path)


def test_duplicate_log_index_rejected():
    logs = [{"address": B, "topics": [], "data": "0x", "logIndex": 0},
            {"address": C, "topics": [], "data": "0x", "logIndex": 0}]
    with pytest.raises(MalformedTrace):
        record_from_document(_doc({"type": "CALL", "from": A, "to": B,
                                   "input": "0x"}, logs))


def test_selfdestruct_without_beneficiary_uses_zero_address():
    trace = {"type": "CALL", "from": A, "to": B, "input": "0x", "calls": [
        {"type": "SELFDESTRUCT", "from": B, "to": None, "input": "0x"},
    ]}
    record = record_from_document(_doc(trace))
    assert record.root_frame.children[0].callee == "0x" + "00" * 20


def test_reverted_frames_are_flagged_and_kept():
    trace = {"type": "CALL", "from": A, "to": B, "input": "0x", "calls": [
        {"type": "CALL", "from": B, "to": C, "input": "0x", "error": "execution reverted"},
    ]}
    record = record_from_document(_doc(trace))
    assert len(flatten_frames(record)) == 2
    assert record.root_frame.children[0].reverted
    assert not record.root_frame.reverted


def test_manifest_round_trip_and_validation(tmp_path):
    manifest = DatasetManifest(entries=[
        ManifestEntry(source="a.json", label="Normal", chain_id=1),
        ManifestEntry(source="b.json", label="AttackTgt", chain_id=56),
    ])
    path = tmp_path / "manifest.jsonl"
    save_manifest(manifest, path)
    assert load_manifest(path) == manifest

    path.write_text('{"source": "a.json", "label": "Bad", "chain_id": 1}\n')
    with pytest.raises(InvalidConfig):
        load_manifest(path)
    path.write_text('{"source": "a.json", "label": "Normal", "chain_id": 1}\n' * 2)
    with pytest.raises(InvalidConfig):
        load_manifest(path)
    assert set(LABELS) == {"Normal", "AttackSrc", "AttackTgt"}
