"""Supervised classification of transaction feature vectors.

Implements exactly-specified K-nearest-neighbors and Gini decision-tree
classifiers (deterministic tie rules, bit-reproducible under seeds), the
stratified split protocol, and precision/recall/F1/support evaluation with
the 0/0 -> 0 convention. The 37-dim layout is [global(21), local(16)].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ClassTooSmall,
    DimensionMismatch,
    EmptyTrainingSet,
    InvalidConfig,
    KTooLarge,
    LengthMismatch,
    ModelMissing,
    ModelVersionMismatch,
)
from .features import GLOBAL_DIM, GlobalFeature
from .hashing import derive_seed
from .ingest import LABELS
from .motifs import LocalFeature

LOCAL_DIM = 16
FEATURE_DIM = GLOBAL_DIM + LOCAL_DIM  # 37

CLASSIFIER_FORMAT_VERSION = 1

ATTACK = "Attack"  # binary collapse of AttackSrc/AttackTgt
BINARY_CLASSES = ("Normal", ATTACK)


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # fixed layout, length 37

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.shape != (FEATURE_DIM,):
            raise DimensionMismatch(f"feature vector must have {FEATURE_DIM} dims")
        if not np.isfinite(values).all():
            raise DimensionMismatch("feature vector contains non-finite values")


@dataclass
class LabeledSample:
    tx_hash: str
    features: FeatureVector
    label: str


def concat_features(glob: GlobalFeature, loc: LocalFeature) -> FeatureVector:
    """37-dim vector, global block first. Argument types are enforced."""
    if not isinstance(glob, GlobalFeature) or not isinstance(loc, LocalFeature):
        raise TypeError("concat_features takes (GlobalFeature, LocalFeature)")
    return FeatureVector(values=np.concatenate([glob.to_vector(), loc.to_vector()]))


def _as_matrix(samples: list[LabeledSample]) -> tuple[np.ndarray, list[str]]:
    rows = [np.asarray(getattr(s.features, "values", s.features), dtype=np.float64)
            for s in samples]
    return np.stack(rows), [s.label for s in samples]


def _label_order(labels: set[str]) -> list[str]:
    return [c for c in LABELS if c in labels] + sorted(labels - set(LABELS))


# --- dataset splitting ----------------------------------------------------


def split_dataset(samples: list[LabeledSample], ratio: float = 0.7,
                  stratified: bool = True, seed: int = 0):
    """Disjoint, exhaustive (train, test); per-class proportions within ±1."""
    if not 0.0 < ratio < 1.0:
        raise InvalidConfig(f"split ratio must be in (0, 1), got {ratio}")
    if not samples:
        raise ClassTooSmall("no samples to split")

    groups: dict[str, list[int]] = {}
    for i, sample in enumerate(samples):
        groups.setdefault(sample.label, []).append(i)

    train_idx: list[int] = []
    test_idx: list[int] = []
    if stratified:
        for label in _label_order(set(groups)):
            idx = np.array(groups[label])
            rng = np.random.default_rng(derive_seed(seed, "split", label))
            rng.shuffle(idx)
            n_train = int(round(ratio * idx.size))
            n_train = min(max(n_train, 1), idx.size)
            if n_train == idx.size and idx.size > 1:
                n_train -= 1
            train_idx.extend(idx[:n_train].tolist())
            test_idx.extend(idx[n_train:].tolist())
    else:
        if len(samples) < 2:
            raise ClassTooSmall("need at least 2 samples to split")
        idx = np.arange(len(samples))
        rng = np.random.default_rng(derive_seed(seed, "split"))
        rng.shuffle(idx)
        n_train = min(max(int(round(ratio * idx.size)), 1), idx.size - 1)
        train_idx = idx[:n_train].tolist()
        test_idx = idx[n_train:].tolist()

    if not test_idx:
        raise ClassTooSmall("split produced an empty test set")
    mix = np.random.default_rng(derive_seed(seed, "mix"))
    mix.shuffle(train_idx)
    mix.shuffle(test_idx)
    return [samples[i] for i in train_idx], [samples[i] for i in test_idx]


# --- standardization -------------------------------------------------------


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray  # zero-variance dims pinned to 1

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


# --- K-nearest neighbors ----------------------------------------------------


@dataclass
class KNNModel:
    k: int
    standardizer: Standardizer
    x: np.ndarray  # standardized training matrix
    y: list[str]
    classes: list[str]
    seed: int = 0


def knn_train(train: list[LabeledSample], k: int = 5, seed: int = 0) -> KNNModel:
    if not train:
        raise EmptyTrainingSet("KNN needs at least one training sample")
    if k < 1:
        raise InvalidConfig("k must be >= 1")
    if k > len(train):
        raise KTooLarge(f"k={k} exceeds training size {len(train)}")
    x, y = _as_matrix(train)
    standardizer = Standardizer.fit(x)
    return KNNModel(k=k, standardizer=standardizer, x=standardizer.transform(x),
                    y=y, classes=_label_order(set(y)), seed=seed)


def knn_neighbor_stats(model: KNNModel, features) -> dict[str, dict[str, float]]:
    """Per-class neighbor count and summed distance among the k nearest."""
    q = np.asarray(getattr(features, "values", features), dtype=np.float64)
    z = model.standardizer.transform(q)
    dist = np.sqrt(((model.x - z) ** 2).sum(axis=1))
    nearest = np.argsort(dist, kind="stable")[:model.k]
    stats: dict[str, dict[str, float]] = {
        c: {"count": 0, "sum_distance": 0.0} for c in model.classes}
    for i in nearest:
        entry = stats[model.y[i]]
        entry["count"] += 1
        entry["sum_distance"] += float(dist[i])
    return stats


def knn_predict(model: KNNModel, features) -> str:
    """Majority label among the k nearest by standardized Euclidean distance.

    Ties break on smallest summed distance, then fixed class order.
    """
    stats = knn_neighbor_stats(model, features)
    def rank(label: str):
        entry = stats[label]
        order = LABELS.index(label) if label in LABELS else len(LABELS)
        return (-entry["count"], entry["sum_distance"], order, label)
    present = [c for c in model.classes if stats[c]["count"] > 0]
    return min(present, key=rank)


# --- decision tree -----------------------------------------------------------


@dataclass
class TreeNode:
    counts: np.ndarray  # weighted class histogram at this node
    dim: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class DecisionTreeModel:
    root: TreeNode
    classes: list[str]
    max_depth: int | None
    min_samples_leaf: int
    seed: int = 0


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def _best_split(x: np.ndarray, y: np.ndarray, w: np.ndarray, n_classes: int,
                min_leaf: int):
    """Lowest-impurity (dim, threshold); ties prefer low dim, low threshold."""
    n = x.shape[0]
    if n < 2 * min_leaf:
        return None
    total_counts = np.zeros(n_classes)
    np.add.at(total_counts, y, w)
    parent = _gini(total_counts)
    total_w = total_counts.sum()
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    onehot *= w[:, None]

    best = None  # (weighted child impurity, dim, threshold)
    positions = np.arange(1, n)
    for dim in range(x.shape[1]):
        order = np.argsort(x[:, dim], kind="stable")
        xs = x[order, dim]
        left = np.cumsum(onehot[order], axis=0)[:-1]  # counts left of each cut
        left_w = left.sum(axis=1)
        right = total_counts[None, :] - left
        right_w = total_w - left_w
        with np.errstate(invalid="ignore", divide="ignore"):
            gini_l = 1.0 - ((left / left_w[:, None]) ** 2).sum(axis=1)
            gini_r = 1.0 - ((right / right_w[:, None]) ** 2).sum(axis=1)
        child = (left_w * gini_l + right_w * gini_r) / total_w
        invalid = (xs[:-1] == xs[1:]) | (positions < min_leaf) | (n - positions < min_leaf)
        child[invalid] = np.inf
        pos = int(np.argmin(child))  # first minimum = lowest threshold
        if not np.isfinite(child[pos]) or child[pos] >= parent:
            continue  # split must strictly reduce impurity
        cand = (float(child[pos]), dim, (xs[pos] + xs[pos + 1]) / 2.0)
        if best is None or cand < best:
            best = cand
    if best is None:
        return None
    return best[1], best[2]


def _grow(x: np.ndarray, y: np.ndarray, w: np.ndarray, n_classes: int,
          depth: int, max_depth: int | None, min_leaf: int) -> TreeNode:
    counts = np.zeros(n_classes)
    np.add.at(counts, y, w)
    node = TreeNode(counts=counts)
    if (max_depth is not None and depth >= max_depth) or len(np.unique(y)) <= 1:
        return node
    found = _best_split(x, y, w, n_classes, min_leaf)
    if found is None:
        return node
    dim, threshold = found
    mask = x[:, dim] <= threshold
    node.dim, node.threshold = dim, threshold
    node.left = _grow(x[mask], y[mask], w[mask], n_classes, depth + 1, max_depth, min_leaf)
    node.right = _grow(x[~mask], y[~mask], w[~mask], n_classes, depth + 1, max_depth, min_leaf)
    return node


def dtree_train(train: list[LabeledSample], max_depth: int | None = None,
                min_samples_leaf: int = 1, seed: int = 0,
                class_weighting: bool = False) -> DecisionTreeModel:
    if not train:
        raise EmptyTrainingSet("decision tree needs at least one training sample")
    x, labels = _as_matrix(train)
    classes = _label_order(set(labels))
    index = {c: i for i, c in enumerate(classes)}
    y = np.array([index[c] for c in labels])
    if class_weighting:
        freq = np.bincount(y, minlength=len(classes)).astype(np.float64)
        per_class = y.size / (len(classes) * np.maximum(freq, 1.0))
        w = per_class[y]
    else:
        w = np.ones(y.size)
    root = _grow(x, y, w, len(classes), 0, max_depth, max(1, min_samples_leaf))
    return DecisionTreeModel(root=root, classes=classes, max_depth=max_depth,
                             min_samples_leaf=min_samples_leaf, seed=seed)


def dtree_leaf_distribution(model: DecisionTreeModel, features) -> dict[str, float]:
    q = np.asarray(getattr(features, "values", features), dtype=np.float64)
    node = model.root
    while not node.is_leaf:
        node = node.left if q[node.dim] <= node.threshold else node.right
    total = node.counts.sum()
    return {c: float(node.counts[i] / total) if total else 0.0
            for i, c in enumerate(model.classes)}


def dtree_predict(model: DecisionTreeModel, features) -> str:
    dist = dtree_leaf_distribution(model, features)
    def rank(label: str):
        order = LABELS.index(label) if label in LABELS else len(LABELS)
        return (-dist[label], order, label)
    return min(model.classes, key=rank)


# --- evaluation --------------------------------------------------------------


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class Metrics:
    classes: list[str]
    per_class: dict[str, ClassMetrics]
    confusion: np.ndarray  # rows = true, cols = predicted
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float = field(init=False)
    micro_recall: float = field(init=False)

    def __post_init__(self) -> None:
        tp = float(np.trace(self.confusion))
        total = float(self.confusion.sum())
        self.micro_precision = tp / total if total else 0.0
        self.micro_recall = tp / total if total else 0.0

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "per_class": {
                c: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                } for c, m in self.per_class.items()
            },
            "confusion": self.confusion.astype(int).tolist(),
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
        }


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def evaluate(predictions: list[str], labels: list[str],
             classes: tuple[str, ...] | list[str] | None = None) -> Metrics:
    """Per-class precision/recall/F1/support, macro averages, confusion."""
    if len(predictions) != len(labels):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(labels)} labels")
    if not labels:
        raise LengthMismatch("nothing to evaluate")
    if classes is None:
        classes = _label_order(set(labels) | set(predictions))
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for pred, true in zip(predictions, labels):
        confusion[index[true], index[pred]] += 1

    per_class: dict[str, ClassMetrics] = {}
    for c, i in index.items():
        tp = float(confusion[i, i])
        precision = _safe_div(tp, float(confusion[:, i].sum()))
        recall = _safe_div(tp, float(confusion[i, :].sum()))
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class[c] = ClassMetrics(precision=precision, recall=recall, f1=f1,
                                    support=int(confusion[i, :].sum()))
    macro = lambda attr: float(np.mean([getattr(m, attr) for m in per_class.values()]))
    return Metrics(
        classes=classes,
        per_class=per_class,
        confusion=confusion,
        accuracy=_safe_div(float(np.trace(confusion)), float(confusion.sum())),
        macro_precision=macro("precision"),
        macro_recall=macro("recall"),
        macro_f1=macro("f1"),
    )


def collapse_attack(label: str) -> str:
    """Three-class label -> binary attack-vs-normal label."""
    return "Normal" if label == "Normal" else ATTACK


def evaluate_binary(predictions: list[str], labels: list[str]) -> Metrics:
    return evaluate([collapse_attack(p) for p in predictions],
                    [collapse_attack(t) for t in labels], classes=BINARY_CLASSES)


# --- repeated protocol -------------------------------------------------------


def _train_predict(train: list[LabeledSample], test: list[LabeledSample],
                   classifier: str, seed: int, **hyper) -> list[str]:
    if classifier == "knn":
        model = knn_train(train, k=hyper.get("k", 5), seed=seed)
        return [knn_predict(model, s.features) for s in test]
    if classifier == "dtree":
        model = dtree_train(
            train,
            max_depth=hyper.get("max_depth"),
            min_samples_leaf=hyper.get("min_samples_leaf", 1),
            seed=seed,
            class_weighting=hyper.get("class_weighting", False),
        )
        return [dtree_predict(model, s.features) for s in test]
    raise InvalidConfig(f"unknown classifier {classifier!r}")


def _aggregate(reports: list[dict]) -> dict:
    """Mean/std (population) over per-run metric dicts of identical shape."""
    def walk(path, node, agg):
        if isinstance(node, dict):
            for key, sub in node.items():
                walk(path + (key,), sub, agg)
        else:
            agg.setdefault(path, []).append(node)

    collected: dict[tuple, list] = {}
    for report in reports:
        walk((), report, collected)

    def build(stat):
        out: dict = {}
        for path, values in collected.items():
            cursor = out
            for key in path[:-1]:
                cursor = cursor.setdefault(key, {})
            arr = np.asarray(values, dtype=np.float64)
            cursor[path[-1]] = float(arr.mean() if stat == "mean" else arr.std())
        return out

    return {"mean": build("mean"), "std": build("std")}


def repeated_eval(samples: list[LabeledSample], runs: int = 10,
                  classifier: str = "knn", ratio: float = 0.7,
                  base_seed: int = 0, **hyper) -> dict:
    """`runs` independent seeded splits + train + eval; mean and std of metrics."""
    if runs < 1:
        raise InvalidConfig("runs must be >= 1")
    per_run = []
    for run in range(runs):
        seed = base_seed + run
        train, test = split_dataset(samples, ratio=ratio, seed=seed)
        predictions = _train_predict(train, test, classifier, seed, **hyper)
        truth = [s.label for s in test]
        report = evaluate(predictions, truth, classes=LABELS).to_dict()
        report.pop("confusion")
        report.pop("classes")
        binary = evaluate_binary(predictions, truth).to_dict()
        report["binary"] = {"Attack": binary["per_class"][ATTACK],
                            "accuracy": binary["accuracy"]}
        per_run.append(report)
    out = _aggregate(per_run)
    out["runs"] = runs
    out["classifier"] = classifier
    return out


# --- serialization -----------------------------------------------------------


def _tree_to_dict(node: TreeNode) -> dict:
    out: dict = {"counts": node.counts.tolist()}
    if not node.is_leaf:
        out.update(dim=node.dim, threshold=node.threshold,
                   left=_tree_to_dict(node.left), right=_tree_to_dict(node.right))
    return out


def _tree_from_dict(obj: dict) -> TreeNode:
    node = TreeNode(counts=np.asarray(obj["counts"], dtype=np.float64))
    if "dim" in obj:
        node.dim = obj["dim"]
        node.threshold = obj["threshold"]
        node.left = _tree_from_dict(obj["left"])
        node.right = _tree_from_dict(obj["right"])
    return node


def save_classifier(model: KNNModel | DecisionTreeModel, path: str | Path) -> None:
    if isinstance(model, KNNModel):
        doc = {
            "version": CLASSIFIER_FORMAT_VERSION,
            "kind": "knn",
            "hyperparams": {"k": model.k, "seed": model.seed},
            "standardizer": {"mean": model.standardizer.mean.tolist(),
                             "std": model.standardizer.std.tolist()},
            "classes": model.classes,
            "payload": {"x": model.x.tolist(), "y": model.y},
        }
    else:
        doc = {
            "version": CLASSIFIER_FORMAT_VERSION,
            "kind": "dtree",
            "hyperparams": {"max_depth": model.max_depth,
                            "min_samples_leaf": model.min_samples_leaf,
                            "seed": model.seed},
            "classes": model.classes,
            "payload": {"tree": _tree_to_dict(model.root)},
        }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_classifier(path: str | Path) -> KNNModel | DecisionTreeModel:
    path = Path(path)
    if not path.exists():
        raise ModelMissing(str(path))
    with open(path) as f:
        doc = json.load(f)
    if doc.get("version") != CLASSIFIER_FORMAT_VERSION:
        raise ModelVersionMismatch(f"classifier format {doc.get('version')}")
    if doc["kind"] == "knn":
        return KNNModel(
            k=doc["hyperparams"]["k"],
            standardizer=Standardizer(
                mean=np.asarray(doc["standardizer"]["mean"]),
                std=np.asarray(doc["standardizer"]["std"])),
            x=np.asarray(doc["payload"]["x"]),
            y=list(doc["payload"]["y"]),
            classes=list(doc["classes"]),
            seed=doc["hyperparams"]["seed"],
        )
    if doc["kind"] == "dtree":
        return DecisionTreeModel(
            root=_tree_from_dict(doc["payload"]["tree"]),
            classes=list(doc["classes"]),
            max_depth=doc["hyperparams"]["max_depth"],
            min_samples_leaf=doc["hyperparams"]["min_samples_leaf"],
            seed=doc["hyperparams"]["seed"],
        )
    raise ModelVersionMismatch(f"unknown classifier kind {doc['kind']!r}")
