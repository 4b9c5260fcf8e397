"""Per-stage timing of the detection pipeline over a corpus.

Stages match the pipeline's structure: graph construction, global mining
(WL document + embedding + statistics + flow flag), local mining (motif
census), classification. Times are wall-clock milliseconds, single worker
for stability. Published reference timings for the original BridgeGuard
benchmark are carried alongside for comparison, never asserted.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .classify import concat_features
from .errors import CorpusTooSmall
from .features import assemble_global, direction_flag, graph_stats
from .graph2vec import infer_embedding
from .ingest import TxRecord
from .motifs import local_feature
from .pipeline import DetectorBundle, _signatures
from .wl import wl_document
from .xteg import build_xteg

STAGES = ("xteg_construction", "global_mining", "local_mining", "classification")

# Original BridgeGuard benchmark, milliseconds per stage (total 15.212 -> ~65 TPS).
REFERENCE_STAGE_MS = {
    "xteg_construction": 0.253,
    "global_mining": 0.332,
    "local_mining": 14.6,
    "classification": 0.027,
}
REFERENCE_TOTAL_MS = 15.212
REFERENCE_TPS = 65.0


@dataclass
class BenchReport:
    n: int
    stage_ms: dict[str, float]  # mean per stage, STAGES order
    total_ms: float  # sum of stage means
    tps: float  # 1000 / total_ms
    median_total_ms: float  # median per-transaction end-to-end latency
    config_hash: str

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "stage_ms": {stage: self.stage_ms[stage] for stage in STAGES},
            "total_ms": self.total_ms,
            "tps": self.tps,
            "median_total_ms": self.median_total_ms,
            "reference_stage_ms": dict(REFERENCE_STAGE_MS),
            "reference_total_ms": REFERENCE_TOTAL_MS,
            "reference_tps": REFERENCE_TPS,
            "config_hash": self.config_hash,
        }


def run_bench(records: list[TxRecord], bundle: DetectorBundle,
              min_corpus: int = 100) -> BenchReport:
    if len(records) < min_corpus:
        raise CorpusTooSmall(f"bench needs >= {min_corpus} transactions, got {len(records)}")
    cfg = bundle.config
    signatures = _signatures(cfg)
    sums = {stage: 0.0 for stage in STAGES}
    totals = []
    for record in records:
        t0 = time.perf_counter_ns()
        graph = build_xteg(record)
        t1 = time.perf_counter_ns()
        doc = wl_document(graph, cfg.wl_iterations)
        embedding = infer_embedding(bundle.embedding, doc)
        glob = assemble_global(embedding, graph_stats(graph),
                               direction_flag(record.logs, signatures))
        t2 = time.perf_counter_ns()
        loc = local_feature(graph)
        t3 = time.perf_counter_ns()
        bundle.predict(concat_features(glob, loc))
        t4 = time.perf_counter_ns()

        sums["xteg_construction"] += (t1 - t0) / 1e6
        sums["global_mining"] += (t2 - t1) / 1e6
        sums["local_mining"] += (t3 - t2) / 1e6
        sums["classification"] += (t4 - t3) / 1e6
        totals.append((t4 - t0) / 1e6)

    n = len(records)
    stage_ms = {stage: sums[stage] / n for stage in STAGES}
    total_ms = sum(stage_ms.values())
    return BenchReport(
        n=n,
        stage_ms=stage_ms,
        total_ms=total_ms,
        tps=1000.0 / total_ms if total_ms > 0 else float("inf"),
        median_total_ms=float(np.median(totals)),
        config_hash=cfg.config_hash(),
    )


def format_bench_table(report: BenchReport) -> str:
    rows = [
        ("Step", "Avg. time (ms)", "Reference (ms)"),
        ("-" * 34, "-" * 14, "-" * 14),
    ]
    names = {
        "xteg_construction": "xTEG construction",
        "global_mining": "Global graph mining",
        "local_mining": "Local graph mining",
        "classification": "Attack detection classifier",
    }
    for stage in STAGES:
        rows.append((names[stage], f"{report.stage_ms[stage]:.3f}",
                     f"{REFERENCE_STAGE_MS[stage]:.3f}"))
    rows.append(("Total", f"{report.total_ms:.3f}", f"{REFERENCE_TOTAL_MS:.3f}"))
    rows.append(("TPS", f"{report.tps:.1f}", f"{REFERENCE_TPS:.1f}"))
    rows.append(("Median per-tx latency", f"{report.median_total_ms:.3f}", "-"))
    width0 = max(len(r[0]) for r in rows)
    width1 = max(len(r[1]) for r in rows)
    lines = [f"{a:<{width0}}  {b:>{width1}}  {c:>14}" for a, b, c in rows]
    lines.append(f"(corpus: {report.n} transactions, config {report.config_hash})")
    return "\n".join(lines)
