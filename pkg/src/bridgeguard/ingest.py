"""Normalize transaction execution data (call traces + receipt logs).

The canonical on-disk format is one transaction per JSON file with keys
``trace`` (a call-tracer tree: type/from/to/input/value/calls) and ``logs``
(the receipt log array), hex strings 0x-prefixed lowercase. Optional
metadata keys ``tx_hash``, ``chain_id``, ``block_number``, ``sender`` are
honored when present and derived deterministically otherwise. The RPC path
produces the same document shape, so both share this parser.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyTrace, InvalidConfig, MalformedTrace

FRAME_KINDS = frozenset({
    "CALL", "STATICCALL", "DELEGATECALL", "CALLCODE",
    "CREATE", "CREATE2", "SELFDESTRUCT",
})

LABELS = ("Normal", "AttackSrc", "AttackTgt")  # fixed class order

ZERO_ADDRESS = "0x" + "00" * 20


@dataclass
class CallFrame:
    frame_kind: str
    caller: str
    callee: str
    selector: str | None  # 8 hex chars, no 0x; None when input < 4 bytes
    value: int
    depth: int
    order: int  # global pre-order index, root = 0
    children: list["CallFrame"] = field(default_factory=list)
    reverted: bool = False


@dataclass
class LogEntry:
    emitter: str
    topic0: str | None  # 0x + 64 hex; None for anonymous events
    topics_rest: list[str]
    data: str
    log_index: int


@dataclass
class TxRecord:
    tx_hash: str
    chain_id: int
    root_frame: CallFrame
    logs: list[LogEntry]
    block_number: int
    sender: str


@dataclass
class ManifestEntry:
    source: str  # trace file path or tx hash
    label: str
    chain_id: int


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]


# --- hex normalization ---------------------------------------------------


def _norm_hex(value: object, name: str, nbytes: int | None = None) -> str:
    if not isinstance(value, str) or not value.startswith("0x"):
        raise MalformedTrace(f"{name}: expected 0x-prefixed hex string, got {value!r}")
    body = value[2:].lower()
    if body and any(c not in "0123456789abcdef" for c in body):
        raise MalformedTrace(f"{name}: non-hex characters in {value!r}")
    if nbytes is not None and len(body) != 2 * nbytes:
        raise MalformedTrace(f"{name}: expected {nbytes} bytes, got {value!r}")
    return "0x" + body


def _norm_address(value: object, name: str) -> str:
    return _norm_hex(value, name, nbytes=20)


def _norm_quantity(value: object, name: str) -> int:
    if value is None:
        return 0
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 16) if value.startswith("0x") else int(value)
        except ValueError:
            pass
    raise MalformedTrace(f"{name}: expected integer or hex quantity, got {value!r}")


# --- trace document parsing ----------------------------------------------


def _parse_frame(node: object, depth: int, counter: list[int]) -> CallFrame:
    if not isinstance(node, dict):
        raise MalformedTrace(f"frame at depth {depth} is not an object")
    kind = node.get("type")
    if not isinstance(kind, str) or kind.upper() not in FRAME_KINDS:
        raise MalformedTrace(f"unknown frame type {kind!r} at depth {depth}")
    kind = kind.upper()

    caller = _norm_address(node.get("from"), "from")
    # CREATE* report the created address in `to`; SELFDESTRUCT the refund
    # beneficiary, which some tracers omit entirely.
    to = node.get("to")
    callee = ZERO_ADDRESS if to in (None, "") else _norm_address(to, "to")

    raw_input = node.get("input", "0x")
    input_hex = _norm_hex(raw_input, "input") if raw_input is not None else "0x"
    sel = input_hex[2:10] if len(input_hex) >= 10 else None

    order = counter[0]
    counter[0] += 1
    frame = CallFrame(
        frame_kind=kind,
        caller=caller,
        callee=callee,
        selector=sel,
        value=_norm_quantity(node.get("value"), "value"),
        depth=depth,
        order=order,
        reverted=bool(node.get("error") or node.get("revertReason")),
    )
    calls = node.get("calls") or []
    if not isinstance(calls, list):
        raise MalformedTrace("`calls` must be a list")
    frame.children = [_parse_frame(child, depth + 1, counter) for child in calls]
    return frame


def _parse_log(entry: object, position: int) -> LogEntry:
    if not isinstance(entry, dict):
        raise MalformedTrace(f"log #{position} is not an object")
    topics = entry.get("topics", [])
    if not isinstance(topics, list):
        raise MalformedTrace(f"log #{position}: topics must be a list")
    norm_topics = [_norm_hex(t, "topic", nbytes=32) for t in topics]
    data = entry.get("data", "0x")
    return LogEntry(
        emitter=_norm_address(entry.get("address"), "log address"),
        topic0=norm_topics[0] if norm_topics else None,
        topics_rest=norm_topics[1:],
        data=_norm_hex(data, "log data") if data is not None else "0x",
        log_index=_norm_quantity(entry.get("logIndex", position), "logIndex"),
    )


def _derived_tx_hash(doc: dict) -> str:
    canonical = json.dumps(
        {"trace": doc.get("trace"), "logs": doc.get("logs", [])},
        sort_keys=True, separators=(",", ":"),
    )
    return "0x" + hashlib.blake2b(canonical.encode(), digest_size=32).hexdigest()


def record_from_document(doc: object, chain_id: int | None = None) -> TxRecord:
    """Parse one trace document (the file/RPC wire shape) into a TxRecord."""
    if not isinstance(doc, dict):
        raise MalformedTrace("document is not a JSON object")
    trace = doc.get("trace")
    if trace is None or trace == {}:
        raise EmptyTrace("document has no root frame")
    counter = [0]
    root = _parse_frame(trace, 0, counter)

    logs = [_parse_log(entry, i) for i, entry in enumerate(doc.get("logs") or [])]
    seen = set()
    for log in logs:
        if log.log_index in seen:
            raise MalformedTrace(f"duplicate logIndex {log.log_index}")
        seen.add(log.log_index)
    logs.sort(key=lambda log: log.log_index)

    sender = doc.get("sender")
    sender = _norm_address(sender, "sender") if sender is not None else root.caller
    if sender != root.caller:
        raise MalformedTrace("sender does not match root frame caller")

    tx_hash = doc.get("tx_hash")
    tx_hash = _norm_hex(tx_hash, "tx_hash", nbytes=32) if tx_hash else _derived_tx_hash(doc)

    return TxRecord(
        tx_hash=tx_hash,
        chain_id=_norm_quantity(doc.get("chain_id", chain_id or 0), "chain_id"),
        root_frame=root,
        logs=logs,
        block_number=_norm_quantity(doc.get("block_number"), "block_number"),
        sender=sender,
    )


def load_trace_file(path: str | Path, chain_id: int | None = None) -> TxRecord:
    """Load one transaction's trace document plus receipt logs from disk."""
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise MalformedTrace(f"{path}: invalid JSON ({exc})") from exc
    return record_from_document(doc, chain_id=chain_id)


# --- serialization (round-trip format) ------------------------------------


def _frame_to_node(frame: CallFrame) -> dict:
    node: dict = {
        "type": frame.frame_kind,
        "from": frame.caller,
        "to": frame.callee,
        "input": "0x" + frame.selector if frame.selector else "0x",
        "value": hex(frame.value),
    }
    if frame.reverted:
        node["error"] = "execution reverted"
    if frame.children:
        node["calls"] = [_frame_to_node(child) for child in frame.children]
    return node


def record_to_document(record: TxRecord) -> dict:
    return {
        "tx_hash": record.tx_hash,
        "chain_id": record.chain_id,
        "block_number": record.block_number,
        "sender": record.sender,
        "trace": _frame_to_node(record.root_frame),
        "logs": [
            {
                "address": log.emitter,
                "topics": ([log.topic0] if log.topic0 else []) + log.topics_rest,
                "data": log.data,
                "logIndex": log.log_index,
            }
            for log in record.logs
        ],
    }


def save_trace_file(record: TxRecord, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(record_to_document(record), f, indent=1, sort_keys=True)
        f.write("\n")


# --- frame utilities -------------------------------------------------------


def flatten_frames(record: TxRecord) -> list[CallFrame]:
    """Pre-order frame sequence; `order` matches list position."""
    out: list[CallFrame] = []
    stack = [record.root_frame]
    while stack:
        frame = stack.pop()
        out.append(frame)
        stack.extend(reversed(frame.children))
    return out


def validate_record(record: TxRecord) -> None:
    """Assert the structural invariants of a normalized record."""
    if record.root_frame.depth != 0:
        raise MalformedTrace("root frame depth must be 0")
    if record.root_frame.caller != record.sender:
        raise MalformedTrace("root frame caller must equal sender")
    frames = flatten_frames(record)
    for pos, frame in enumerate(frames):
        if frame.order != pos:
            raise MalformedTrace(f"frame order {frame.order} != pre-order position {pos}")
        for child in frame.children:
            if child.depth != frame.depth + 1:
                raise MalformedTrace("child depth must be parent depth + 1")
        if frame.selector is not None and len(frame.selector) != 8:
            raise MalformedTrace("selector must be 4 bytes when present")


# --- dataset manifest ------------------------------------------------------


def load_manifest(path: str | Path) -> DatasetManifest:
    """Read a JSON-lines manifest: {"source":..., "label":..., "chain_id":N}."""
    entries: list[ManifestEntry] = []
    seen_sources = set()
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidConfig(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            label = obj.get("label")
            if label not in LABELS:
                raise InvalidConfig(f"{path}:{lineno}: label must be one of {LABELS}")
            source = obj.get("source")
            if not isinstance(source, str) or not source:
                raise InvalidConfig(f"{path}:{lineno}: missing source")
            if source in seen_sources:
                raise InvalidConfig(f"{path}:{lineno}: duplicate tx identity {source}")
            seen_sources.add(source)
            entries.append(ManifestEntry(
                source=source,
                label=label,
                chain_id=_norm_quantity(obj.get("chain_id", 0), "chain_id"),
            ))
    return DatasetManifest(entries=entries)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with open(path, "w") as f:
        for entry in manifest.entries:
            f.write(json.dumps(
                {"source": entry.source, "label": entry.label, "chain_id": entry.chain_id}
            ) + "\n")
