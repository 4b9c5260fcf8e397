"""Directed 3-node motif census (16 isomorphism classes).

The catalog M1..M16 is the full directed triad census in the conventional
census order `003 .. 300`: the empty triad, the single-arc and mutual-pair
dyadic triads, and the 13 weakly connected classes. Each vertex triple is
counted once, in its exact class, so the counts always partition C(n, 3).

`motif_census_matrix` derives the connected-class counts from entrywise
sums of products of the bidirectional part B = A ∧ Aᵀ and unidirectional
part U = A − B of the adjacency matrix, then recovers the sparse classes by
inclusion–exclusion against C(n,3), the arc total, and the mutual-dyad
count. `triad_census_bruteforce` classifies every triple by canonical form
and exists as the independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations
from math import comb

import numpy as np

from .errors import GraphTooLarge, MultiEdgePresent, SelfLoopPresent
from .xteg import XTEG, SimpleDigraph, to_simple_digraph

MOTIF_NAMES = (
    "003", "012", "102", "021D", "021U", "021C", "111D", "111U",
    "030T", "030C", "201", "120D", "120U", "120C", "210", "300",
)

# Canonical arc list of each class on vertices {a, b, c}.
MOTIF_ARCS: dict[str, tuple[tuple[str, str], ...]] = {
    "003": (),
    "012": (("a", "b"),),
    "102": (("a", "b"), ("b", "a")),
    "021D": (("b", "a"), ("b", "c")),
    "021U": (("a", "b"), ("c", "b")),
    "021C": (("a", "b"), ("b", "c")),
    "111D": (("a", "c"), ("c", "a"), ("b", "c")),
    "111U": (("a", "c"), ("c", "a"), ("c", "b")),
    "030T": (("a", "b"), ("c", "b"), ("a", "c")),
    "030C": (("b", "a"), ("c", "b"), ("a", "c")),
    "201": (("a", "b"), ("b", "a"), ("a", "c"), ("c", "a")),
    "120D": (("b", "a"), ("b", "c"), ("a", "c"), ("c", "a")),
    "120U": (("a", "b"), ("c", "b"), ("a", "c"), ("c", "a")),
    "120C": (("a", "b"), ("b", "c"), ("a", "c"), ("c", "a")),
    "210": (("a", "b"), ("b", "c"), ("c", "b"), ("a", "c"), ("c", "a")),
    "300": (("a", "b"), ("b", "a"), ("b", "c"), ("c", "b"), ("a", "c"), ("c", "a")),
}

# Bit positions for the 6 ordered pairs of a triple (i, j, k).
_PAIR_BITS = {(0, 1): 0, (1, 0): 1, (0, 2): 2, (2, 0): 3, (1, 2): 4, (2, 1): 5}


@dataclass(frozen=True)
class LocalFeature:
    counts: tuple[int, ...]  # position i = occurrences of class M_{i+1}

    def __post_init__(self) -> None:
        if len(self.counts) != 16:
            raise ValueError("motif census must have 16 classes")

    def to_vector(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64)


def _canonical_code(code: int) -> int:
    best = 63
    bits = [(code >> b) & 1 for b in range(6)]
    for perm in permutations(range(3)):
        mapped = 0
        for (i, j), b in _PAIR_BITS.items():
            if bits[_PAIR_BITS[(perm[i], perm[j])]]:
                mapped |= 1 << b
        best = min(best, mapped)
    return best


def _class_table() -> dict[int, int]:
    table: dict[int, int] = {}
    names = {"a": 0, "b": 1, "c": 2}
    for idx, name in enumerate(MOTIF_NAMES):
        code = 0
        for src, dst in MOTIF_ARCS[name]:
            code |= 1 << _PAIR_BITS[(names[src], names[dst])]
        table[_canonical_code(code)] = idx
    assert len(table) == 16
    return table


_CANONICAL_TO_CLASS = _class_table()


def classify_triad(code: int) -> int:
    """Class index (0..15) of a triple given its 6-bit ordered-pair code."""
    return _CANONICAL_TO_CLASS[_canonical_code(code)]


def _as_adjacency(g: SimpleDigraph | np.ndarray) -> np.ndarray:
    if isinstance(g, SimpleDigraph):
        return g.adjacency()
    a = np.asarray(g)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MultiEdgePresent("adjacency must be square")
    if not np.isin(a, (0, 1)).all():
        raise MultiEdgePresent("adjacency entries must be 0/1")
    if np.diagonal(a).any():
        raise SelfLoopPresent("self-loops are not allowed")
    return a.astype(np.int64)


def motif_census_matrix(g: SimpleDigraph | np.ndarray) -> LocalFeature:
    a = _as_adjacency(g)
    n = a.shape[0]
    if n < 3:
        return LocalFeature(counts=(0,) * 16)

    b = a * a.T
    u = a - b
    ut = u.T
    a_u = int(u.sum())  # asymmetric dyads
    m = int(b.sum()) // 2  # mutual dyads

    uu = u @ u
    c030t = int((uu * u).sum())
    c030c = int((uu * ut).sum()) // 3
    c120c = int((uu * b).sum())
    c120d = int(((ut @ u) * b).sum()) // 2
    c120u = int(((u @ ut) * b).sum()) // 2
    c210 = int(((u @ b) * b).sum())
    c300 = int(((b @ b) * b).sum()) // 6

    c201 = (int((b @ b).sum()) - 2 * m - 2 * c210 - 6 * c300) // 2
    c111d = int((u @ b).sum()) - 2 * c120d - c120c - c210
    c111u = int((b @ u).sum()) - 2 * c120u - c120c - c210
    c021d = (int((ut @ u).sum()) - a_u) // 2 - c030t - c120d
    c021u = (int((u @ ut).sum()) - a_u) // 2 - c030t - c120u
    c021c = int(uu.sum()) - c030t - 3 * c030c - c120c

    # Dyad-incidence inclusion-exclusion for the classes with an isolated
    # vertex: every dyad lies in n-2 triples.
    c102 = m * (n - 2) - (
        c111d + c111u + 2 * c201 + c120d + c120u + c120c + 2 * c210 + 3 * c300
    )
    c012 = a_u * (n - 2) - (
        2 * (c021d + c021u + c021c + c120d + c120u + c120c)
        + c111d + c111u + 3 * (c030t + c030c) + c210
    )
    connected = (
        c021d + c021u + c021c + c111d + c111u + c030t + c030c
        + c201 + c120d + c120u + c120c + c210 + c300
    )
    c003 = comb(n, 3) - connected - c012 - c102

    by_name = {
        "003": c003, "012": c012, "102": c102, "021D": c021d, "021U": c021u,
        "021C": c021c, "111D": c111d, "111U": c111u, "030T": c030t,
        "030C": c030c, "201": c201, "120D": c120d, "120U": c120u,
        "120C": c120c, "210": c210, "300": c300,
    }
    return LocalFeature(counts=tuple(by_name[name] for name in MOTIF_NAMES))


def triad_census_bruteforce(g: SimpleDigraph | np.ndarray) -> LocalFeature:
    a = _as_adjacency(g)
    n = a.shape[0]
    if n > 64:
        raise GraphTooLarge(f"brute force capped at 64 vertices, got {n}")
    counts = [0] * 16
    for i, j, k in combinations(range(n), 3):
        trio = (i, j, k)
        code = 0
        for (x, y), bit in _PAIR_BITS.items():
            if a[trio[x], trio[y]]:
                code |= 1 << bit
        counts[classify_triad(code)] += 1
    return LocalFeature(counts=tuple(counts))


def local_feature(graph: XTEG) -> LocalFeature:
    """Motif census of the graph's kind-free simple digraph."""
    return motif_census_matrix(to_simple_digraph(graph))


def catalog_markdown() -> str:
    """Reference table mapping M1..M16 to canonical arc lists."""
    lines = [
        "# Directed 3-node motif catalog",
        "",
        "Census classes in fixed order; arcs on canonical vertices a, b, c.",
        "Every simple 3-vertex digraph belongs to exactly one class.",
        "",
        "| Motif | Census name | Arcs |",
        "|-------|-------------|------|",
    ]
    for idx, name in enumerate(MOTIF_NAMES, start=1):
        arcs = ", ".join(f"{s}->{d}" for s, d in MOTIF_ARCS[name]) or "(none)"
        lines.append(f"| M{idx} | {name} | {arcs} |")
    return "\n".join(lines) + "\n"
