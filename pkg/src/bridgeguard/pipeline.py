"""End-to-end wiring: records -> graphs -> features -> detector.

The embedding model is always fit on training data only; test and detect
inputs are embedded against the frozen model. A trained detector is saved
as a bundle directory holding the embedding model, the classifier, and the
resolved configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import (
    FeatureVector,
    LabeledSample,
    concat_features,
    dtree_leaf_distribution,
    dtree_predict,
    dtree_train,
    evaluate,
    evaluate_binary,
    knn_neighbor_stats,
    knn_predict,
    knn_train,
    load_classifier,
    save_classifier,
    split_dataset,
)
from .config import RunConfig
from .errors import InvalidConfig, ModelMissing
from .features import DEFAULT_SIGNATURES, assemble_global, direction_flag, graph_stats
from .graph2vec import (
    EmbeddingModel,
    TrainParams,
    infer_embedding,
    load_model,
    save_model,
    train_graph2vec,
)
from .ingest import LABELS, TxRecord
from .motifs import LocalFeature, local_feature
from .wl import WLDocument, wl_document
from .xteg import XTEG, build_xteg

BUNDLE_FILE = "bundle.json"
EMBEDDING_FILE = "embedding.npz"
CLASSIFIER_FILE = "classifier.json"
BUNDLE_FORMAT_VERSION = 1


def _train_params(cfg: RunConfig) -> TrainParams:
    return TrainParams(epochs=cfg.epochs, learning_rate=cfg.learning_rate,
                       negative=cfg.negative, wl_iterations=cfg.wl_iterations)


def _signatures(cfg: RunConfig) -> dict[str, str]:
    if cfg.signatures:
        return dict(cfg.signatures)
    return DEFAULT_SIGNATURES


@dataclass
class PreparedTx:
    """Split-independent per-transaction artifacts; only the embedding
    depends on the training split."""
    record: TxRecord
    graph: XTEG
    doc: WLDocument
    stats: tuple[int, int, int, float]
    flag: float
    census: LocalFeature


def prepare(record: TxRecord, cfg: RunConfig) -> PreparedTx:
    graph = build_xteg(record)
    return PreparedTx(
        record=record,
        graph=graph,
        doc=wl_document(graph, cfg.wl_iterations),
        stats=graph_stats(graph),
        flag=direction_flag(record.logs, _signatures(cfg)),
        census=local_feature(graph),
    )


def feature_vector(prep: PreparedTx, model: EmbeddingModel,
                   cfg: RunConfig) -> FeatureVector:
    embedding = infer_embedding(model, prep.doc)
    glob = assemble_global(embedding, prep.stats, prep.flag)
    return concat_features(glob, prep.census)


@dataclass
class DetectorBundle:
    embedding: EmbeddingModel
    classifier: object  # KNNModel | DecisionTreeModel
    classifier_kind: str
    config: RunConfig

    def predict(self, features) -> str:
        if self.classifier_kind == "knn":
            return knn_predict(self.classifier, features)
        return dtree_predict(self.classifier, features)

    def scores(self, features) -> dict:
        if self.classifier_kind == "knn":
            return knn_neighbor_stats(self.classifier, features)
        return dtree_leaf_distribution(self.classifier, features)


def _fit_classifier(kind: str, train: list[LabeledSample], cfg: RunConfig):
    if kind == "knn":
        return knn_train(train, k=cfg.k, seed=cfg.seed)
    if kind == "dtree":
        return dtree_train(train, max_depth=cfg.max_depth,
                           min_samples_leaf=cfg.min_samples_leaf, seed=cfg.seed,
                           class_weighting=cfg.class_weighting)
    raise InvalidConfig(f"unknown classifier {kind!r}")


def train_detector(records: list[TxRecord], labels: list[str],
                   cfg: RunConfig) -> tuple[DetectorBundle, dict]:
    """Single split -> embedding + classifier; returns bundle and test metrics."""
    preps = [prepare(r, cfg) for r in records]
    shells = [LabeledSample(tx_hash=str(i), features=None, label=lab)
              for i, lab in enumerate(labels)]
    train_shells, test_shells = split_dataset(shells, ratio=cfg.split_ratio,
                                              seed=cfg.seed)
    train_idx = [int(s.tx_hash) for s in train_shells]
    test_idx = [int(s.tx_hash) for s in test_shells]
    model = train_graph2vec([preps[i].doc for i in train_idx],
                            dim=cfg.embedding_dim, params=_train_params(cfg),
                            seed=cfg.seed)

    def samples(indices: list[int]) -> list[LabeledSample]:
        return [LabeledSample(tx_hash=records[i].tx_hash,
                              features=feature_vector(preps[i], model, cfg),
                              label=labels[i]) for i in indices]

    train_samples = samples(train_idx)
    test_samples = samples(test_idx)
    classifier = _fit_classifier(cfg.classifier, train_samples, cfg)
    bundle = DetectorBundle(embedding=model, classifier=classifier,
                            classifier_kind=cfg.classifier, config=cfg)
    predictions = [bundle.predict(s.features) for s in test_samples]
    truth = [s.label for s in test_samples]
    metrics = {
        "three_class": evaluate(predictions, truth, classes=LABELS).to_dict(),
        "binary": evaluate_binary(predictions, truth).to_dict(),
    }
    return bundle, metrics


def repeated_pipeline_eval(records: list[TxRecord], labels: list[str],
                           cfg: RunConfig,
                           classifiers: tuple[str, ...] = ("knn",)) -> dict:
    """The repeated protocol with a leakage-free embedding refit per split."""
    if cfg.runs < 1:
        raise InvalidConfig("runs must be >= 1")
    preps = [prepare(r, cfg) for r in records]
    indexed = [LabeledSample(tx_hash=str(i), features=None, label=lab)
               for i, lab in enumerate(labels)]

    per_run: dict[str, list[dict]] = {kind: [] for kind in classifiers}
    for run in range(cfg.runs):
        seed = cfg.seed + run
        train_shells, test_shells = split_dataset(indexed, ratio=cfg.split_ratio,
                                                  seed=seed)
        train_idx = [int(s.tx_hash) for s in train_shells]
        test_idx = [int(s.tx_hash) for s in test_shells]
        model = train_graph2vec([preps[i].doc for i in train_idx],
                                dim=cfg.embedding_dim, params=_train_params(cfg),
                                seed=seed)
        emb_cache: dict[str, np.ndarray] = {}  # embeddings repeat per content

        def fv(i: int) -> FeatureVector:
            prep = preps[i]
            h = prep.doc.content_hash
            if h not in emb_cache:
                emb_cache[h] = infer_embedding(model, prep.doc)
            glob = assemble_global(emb_cache[h], prep.stats, prep.flag)
            return concat_features(glob, prep.census)

        train_samples = [LabeledSample(records[i].tx_hash, fv(i), labels[i])
                         for i in train_idx]
        test_samples = [LabeledSample(records[i].tx_hash, fv(i), labels[i])
                        for i in test_idx]
        truth = [s.label for s in test_samples]
        for kind in classifiers:
            classifier = _fit_classifier(kind, train_samples, cfg)
            predictor = knn_predict if kind == "knn" else dtree_predict
            predictions = [predictor(classifier, s.features) for s in test_samples]
            report = evaluate(predictions, truth, classes=LABELS).to_dict()
            binary = evaluate_binary(predictions, truth).to_dict()
            report["binary"] = binary
            per_run[kind].append(report)

    out: dict = {"runs": cfg.runs, "config_hash": cfg.config_hash()}
    for kind in classifiers:
        out[kind] = _mean_std(per_run[kind])
    return out


def _mean_std(reports: list[dict]) -> dict:
    """Mean/std (population) over per-run report dicts of identical shape.

    Numeric leaves (scalars and nested numeric lists like the confusion
    matrix) are aggregated elementwise; the class-name lists pass through.
    """
    def walk(path, node, collected):
        if isinstance(node, dict):
            for key, sub in node.items():
                walk(path + (key,), sub, collected)
        else:
            collected.setdefault(path, []).append(node)

    collected: dict[tuple, list] = {}
    for report in reports:
        walk((), report, collected)

    def build(stat: str) -> dict:
        out: dict = {}
        for path, values in collected.items():
            cursor = out
            for key in path[:-1]:
                cursor = cursor.setdefault(key, {})
            if path[-1] == "classes":
                cursor[path[-1]] = values[0]
                continue
            arr = np.asarray(values, dtype=np.float64)
            agg = arr.mean(axis=0) if stat == "mean" else arr.std(axis=0)
            cursor[path[-1]] = agg.tolist() if agg.ndim else float(agg)
        return out

    return {"mean": build("mean"), "std": build("std")}


# --- bundle persistence ------------------------------------------------------


def save_bundle(bundle: DetectorBundle, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_model(bundle.embedding, out_dir / EMBEDDING_FILE)
    save_classifier(bundle.classifier, out_dir / CLASSIFIER_FILE)
    meta = {
        "version": BUNDLE_FORMAT_VERSION,
        "classifier_kind": bundle.classifier_kind,
        "config": bundle.config.to_dict(),
        "config_hash": bundle.config.config_hash(),
    }
    with open(out_dir / BUNDLE_FILE, "w") as f:
        json.dump(meta, f, indent=1, sort_keys=True)
        f.write("\n")
    return out_dir


def load_bundle(model_dir: str | Path) -> DetectorBundle:
    model_dir = Path(model_dir)
    meta_path = model_dir / BUNDLE_FILE
    if not meta_path.exists():
        raise ModelMissing(f"no detector bundle at {model_dir}")
    with open(meta_path) as f:
        meta = json.load(f)
    if meta.get("version") != BUNDLE_FORMAT_VERSION:
        raise ModelMissing(f"unsupported bundle version {meta.get('version')}")
    cfg = RunConfig(**meta["config"])
    return DetectorBundle(
        embedding=load_model(model_dir / EMBEDDING_FILE),
        classifier=load_classifier(model_dir / CLASSIFIER_FILE),
        classifier_kind=meta["classifier_kind"],
        config=cfg,
    )


def detect(bundle: DetectorBundle, records: list[TxRecord]) -> list[dict]:
    """One output row per transaction: hash, predicted label, score detail."""
    rows = []
    for record in records:
        prep = prepare(record, bundle.config)
        features = feature_vector(prep, bundle.embedding, bundle.config)
        rows.append({
            "tx_hash": record.tx_hash,
            "label": bundle.predict(features),
            "scores": bundle.scores(features),
        })
    return rows
