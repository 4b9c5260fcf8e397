"""BridgeGuard: cross-chain bridge attack transaction detection.

Pipeline: trace ingestion -> transaction execution graph -> global features
(16-dim graph embedding + 4 statistics + deposit/withdraw flag) and local
features (16-class directed motif census) -> 37-dim vector -> supervised
classification into Normal / AttackSrc / AttackTgt.
"""

__version__ = "0.1.0"

from .classify import FeatureVector, LabeledSample, concat_features, evaluate
from .ingest import TxRecord, load_trace_file
from .motifs import LocalFeature, local_feature
from .wl import wl_document
from .xteg import XTEG, build_xteg

__all__ = [
    "FeatureVector",
    "LabeledSample",
    "LocalFeature",
    "TxRecord",
    "XTEG",
    "build_xteg",
    "concat_features",
    "evaluate",
    "load_trace_file",
    "local_feature",
    "wl_document",
    "__version__",
]
