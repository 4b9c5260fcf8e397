"""Transaction execution graph construction.

Vertices are EOA addresses, (contract address, function selector) pairs,
and (emitter, topic0) log events. Edges carry the call opcode kind or EMIT,
with parallel identical edges merged into a multiplicity count. Construction
is a pure function of the TxRecord: vertex ids follow first appearance, so
rebuilding the same record always yields the identical graph.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DisconnectedGraph, EmptyTrace
from .ingest import FRAME_KINDS, CallFrame, TxRecord, flatten_frames

EMIT = "EMIT"
EDGE_KINDS = frozenset(FRAME_KINDS | {EMIT})

# vertex kind tags
EOA = "eoa"
FUNCTION = "function"
EVENT = "event"

FALLBACK = "fallback"  # contract entered with input < 4 bytes
ANONYMOUS = "anonymous"  # log without topic0


@dataclass(frozen=True)
class Vertex:
    id: int
    kind: str  # EOA | FUNCTION | EVENT
    address: str  # account / contract / emitter address
    detail: str  # "" for EOA; selector-or-fallback; topic0-or-anonymous

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.kind, self.address, self.detail)


@dataclass
class XtegEdge:
    src: int
    dst: int
    kind: str
    order: int  # execution sequence of first occurrence
    multiplicity: int = 1


@dataclass
class XTEG:
    tx_hash: str
    vertices: list[Vertex]  # indexed by vertex id
    edges: list[XtegEdge]  # sorted by order


@dataclass(frozen=True)
class SimpleDigraph:
    """Kind-free simple digraph over the same vertex ids (no self-loops)."""
    n: int
    arcs: tuple[tuple[int, int], ...]  # sorted, deduplicated

    def adjacency(self):
        import numpy as np
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for src, dst in self.arcs:
            a[src, dst] = 1
        return a


class _VertexInterner:
    def __init__(self) -> None:
        self.by_key: dict[tuple[str, str, str], int] = {}
        self.vertices: list[Vertex] = []

    def intern(self, kind: str, address: str, detail: str) -> int:
        key = (kind, address, detail)
        vid = self.by_key.get(key)
        if vid is None:
            vid = len(self.vertices)
            self.by_key[key] = vid
            self.vertices.append(Vertex(id=vid, kind=kind, address=address, detail=detail))
        return vid


def _frame_vertex(interner: _VertexInterner, frame: CallFrame, sender: str) -> int:
    # The sender is the only address known to be an EOA; everything else is
    # treated as contract code keyed by (address, selector).
    if frame.callee == sender:
        return interner.intern(EOA, sender, "")
    return interner.intern(FUNCTION, frame.callee, frame.selector or FALLBACK)


def _attribute_log_frame(frames: list[CallFrame], emitter: str) -> CallFrame:
    # Deepest frame whose callee is the emitter, earliest in pre-order;
    # root as the deterministic fallback when no frame matches.
    best: CallFrame | None = None
    for frame in frames:
        if frame.callee == emitter:
            if best is None or frame.depth > best.depth:
                best = frame
    return best if best is not None else frames[0]


def build_xteg(record: TxRecord) -> XTEG:
    """Build the execution graph: one edge per frame, one EMIT per log."""
    if record.root_frame is None:  # defensive; the parser already rejects this
        raise EmptyTrace(record.tx_hash)

    frames = flatten_frames(record)
    interner = _VertexInterner()
    sender_vid = interner.intern(EOA, record.sender, "")
    frame_vid = {frame.order: _frame_vertex(interner, frame, record.sender) for frame in frames}

    parent_of: dict[int, CallFrame] = {}
    for frame in frames:
        for child in frame.children:
            parent_of[child.order] = frame

    # Frame edges take their pre-order entry time; log edges keep receipt
    # (log_index) order while never preceding their emitting frame's edge.
    raw: list[tuple[tuple[int, int, int], int, int, str]] = []
    for frame in frames:
        parent = parent_of.get(frame.order)
        src = sender_vid if parent is None else frame_vid[parent.order]
        raw.append(((frame.order, 0, 0), src, frame_vid[frame.order], frame.frame_kind))

    emit_time = 0
    for log in record.logs:  # already sorted by log_index
        host = _attribute_log_frame(frames, log.emitter)
        emit_time = max(emit_time, host.order)
        src = frame_vid[host.order]
        dst = interner.intern(EVENT, log.emitter, log.topic0 or ANONYMOUS)
        raw.append(((emit_time, 1, log.log_index), src, dst, EMIT))

    raw.sort(key=lambda item: item[0])
    edges: list[XtegEdge] = []
    merged: dict[tuple[int, int, str], XtegEdge] = {}
    for order, (_, src, dst, kind) in enumerate(raw):
        key = (src, dst, kind)
        existing = merged.get(key)
        if existing is not None:
            existing.multiplicity += 1
        else:
            edge = XtegEdge(src=src, dst=dst, kind=kind, order=order)
            merged[key] = edge
            edges.append(edge)

    graph = XTEG(tx_hash=record.tx_hash, vertices=interner.vertices, edges=edges)
    _assert_consistent(graph)
    return graph


def _assert_consistent(graph: XTEG) -> None:
    n = len(graph.vertices)
    if n < 2:
        # A root self-send collapses caller and callee into one vertex;
        # such degenerate transactions carry no call structure to mine.
        raise DisconnectedGraph(f"{graph.tx_hash}: graph has {n} vertex(es), need >= 2")
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for edge in graph.edges:
        ra, rb = find(edge.src), find(edge.dst)
        if ra != rb:
            parent[ra] = rb
    roots = {find(i) for i in range(n)}
    if len(roots) != 1:
        raise DisconnectedGraph(f"{graph.tx_hash}: {len(roots)} weak components")


def to_simple_digraph(graph: XTEG) -> SimpleDigraph:
    """Drop edge kinds, multiplicities, and self-loops; dedupe arcs."""
    arcs = sorted({(e.src, e.dst) for e in graph.edges if e.src != e.dst})
    return SimpleDigraph(n=len(graph.vertices), arcs=tuple(arcs))


def dump_xteg(graph: XTEG) -> str:
    """Edge-list text dump plus vertex table, for debugging/visualization."""
    lines = [f"# tx {graph.tx_hash}", "# vertices: id kind address detail"]
    for v in graph.vertices:
        lines.append(f"v {v.id} {v.kind} {v.address} {v.detail or '-'}")
    lines.append("# edges: src_id dst_id kind order multiplicity")
    for e in graph.edges:
        lines.append(f"e {e.src} {e.dst} {e.kind} {e.order} {e.multiplicity}")
    return "\n".join(lines) + "\n"
