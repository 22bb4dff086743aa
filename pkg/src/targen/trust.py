"""Repair-trust prediction: input-only features plus a from-scratch random forest.

The forest uses Gini splits, bootstrap sampling, and sqrt(d) feature
subsampling; everything is driven by a single seed so a (dataset, seed) pair
fixes the model bytes, the fold assignment, and the importance scores.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError
from .model import RepairInstance
from .prioritize import tfidf_cosine
from .taxonomy import node_label_multiset, parse_mini
from .tokenization import Tokenizer, tokenize, tokenize_lines

FEATURE_NAMES = (
    "max_tfidf_sim",
    "avg_tfidf_sim",
    "common_ast_hunk",
    "common_ast_node",
    "changed_files",
    "changed_lines",
    "test_loc",
)


@dataclass(frozen=True)
class TrustFeatures:
    max_tfidf_sim: float
    avg_tfidf_sim: float
    common_ast_hunk: int
    common_ast_node: int
    changed_files: int
    changed_lines: int
    test_loc: int

    def __post_init__(self):
        if not 0.0 <= self.max_tfidf_sim <= 1.0 + 1e-9:
            raise ContractError("max_tfidf_sim outside [0, 1]")
        if not 0.0 <= self.avg_tfidf_sim <= 1.0 + 1e-9:
            raise ContractError("avg_tfidf_sim outside [0, 1]")
        for name in ("common_ast_hunk", "common_ast_node", "changed_files",
                     "changed_lines", "test_loc"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be non-negative")

    def as_vector(self) -> list[float]:
        return [float(getattr(self, name)) for name in FEATURE_NAMES]


def extract_features(
    instance: RepairInstance, tokenizer: Tokenizer = tokenize
) -> TrustFeatures:
    """Input-only features: breakage-vs-pre-change-SUT similarity, AST-node
    overlap, SUT change size, and test length."""
    breakage_lines = instance.breakage_lines()
    hunks = list(instance.sut_hunks)
    if hunks:
        docs = [list(tokenizer(" ".join(h.deleted_lines))) for h in hunks]
        sims = tfidf_cosine(docs, tokenize_lines(breakage_lines))
        max_sim = max(sims)
        avg_sim = sum(sims) / len(sims)
    else:
        max_sim = avg_sim = 0.0

    breakage_nodes = node_label_multiset(parse_mini(breakage_lines))
    common_hunks = 0
    common_nodes = 0
    for hunk in hunks:
        hunk_nodes = node_label_multiset(parse_mini(list(hunk.deleted_lines)))
        overlap = sum(
            min(count, breakage_nodes.get(key, 0)) for key, count in hunk_nodes.items()
        )
        if overlap:
            common_hunks += 1
            common_nodes += overlap

    return TrustFeatures(
        max_tfidf_sim=max_sim,
        avg_tfidf_sim=avg_sim,
        common_ast_hunk=common_hunks,
        common_ast_node=common_nodes,
        changed_files=len({h.file for h in hunks}),
        changed_lines=sum(len(h.deleted_lines) + len(h.added_lines) for h in hunks),
        test_loc=len(instance.broken_test.source),
    )


def oversample(
    rows: np.ndarray, labels: np.ndarray, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Duplicate minority-class rows (with replacement) up to parity."""
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if len(classes) < 2:
        raise ContractError("oversampling needs at least two classes")
    rng = np.random.RandomState(seed)
    majority = counts.max()
    keep = [rows]
    keep_labels = [labels]
    for cls, count in zip(classes, counts):
        if count == majority:
            continue
        idx = np.flatnonzero(labels == cls)
        extra = rng.choice(idx, size=majority - count, replace=True)
        keep.append(rows[extra])
        keep_labels.append(labels[extra])
    return np.concatenate(keep), np.concatenate(keep_labels)


# --------------------------------------------------------------------------
# Random forest
# --------------------------------------------------------------------------


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    value: float = 0.5  # P(label == 1) at a leaf

    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf():
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "_TreeNode":
        if "value" in payload:
            return cls(value=payload["value"])
        return cls(
            feature=payload["feature"],
            threshold=payload["threshold"],
            left=cls.from_dict(payload["left"]),
            right=cls.from_dict(payload["right"]),
        )


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float((p * p).sum())


def _best_split(
    x: np.ndarray, y: np.ndarray, feature_ids: np.ndarray
) -> tuple[int, float, float] | None:
    """Best (feature, threshold, impurity drop) over candidate features.

    Ties keep the earliest candidate (lowest feature id, lowest threshold),
    which pins down determinism.
    """
    n = len(y)
    parent_gini = _gini(np.bincount(y, minlength=2))
    best: tuple[int, float, float] | None = None
    for f in feature_ids:
        order = np.argsort(x[:, f], kind="stable")
        values = x[order, f]
        labels = y[order]
        ones = np.cumsum(labels)
        total_ones = ones[-1]
        splittable = np.flatnonzero(values[1:] != values[:-1]) + 1
        if len(splittable) == 0:
            continue
        left_n = splittable.astype(float)
        right_n = n - left_n
        left_ones = ones[splittable - 1].astype(float)
        right_ones = total_ones - left_ones
        left_gini = 1.0 - ((left_ones / left_n) ** 2 + ((left_n - left_ones) / left_n) ** 2)
        right_gini = 1.0 - (
            (right_ones / right_n) ** 2 + ((right_n - right_ones) / right_n) ** 2
        )
        drops = parent_gini - (left_n * left_gini + right_n * right_gini) / n
        pick = int(np.argmax(drops))
        drop = float(drops[pick])
        if best is None or drop > best[2] + 1e-15:
            i = int(splittable[pick])
            threshold = (values[i] + values[i - 1]) / 2.0
            best = (int(f), float(threshold), drop)
    if best is None or best[2] <= 1e-15:
        return None
    return best


def _grow_tree(
    x: np.ndarray,
    y: np.ndarray,
    rng: np.random.RandomState,
    n_feature_candidates: int,
    max_depth: int | None,
    min_leaf: int,
    depth: int = 0,
) -> _TreeNode:
    node_value = float(y.mean()) if len(y) else 0.5
    if (
        len(y) < 2 * min_leaf
        or (max_depth is not None and depth >= max_depth)
        or y.min() == y.max()
    ):
        return _TreeNode(value=node_value)
    feature_ids = np.sort(
        rng.choice(x.shape[1], size=n_feature_candidates, replace=False)
    )
    split = _best_split(x, y, feature_ids)
    if split is None:
        return _TreeNode(value=node_value)
    feature, threshold, _ = split
    mask = x[:, feature] <= threshold
    if mask.sum() < min_leaf or (~mask).sum() < min_leaf:
        return _TreeNode(value=node_value)
    left = _grow_tree(x[mask], y[mask], rng, n_feature_candidates, max_depth, min_leaf, depth + 1)
    right = _grow_tree(x[~mask], y[~mask], rng, n_feature_candidates, max_depth, min_leaf, depth + 1)
    return _TreeNode(feature=feature, threshold=threshold, left=left, right=right,
                     value=node_value)


def _predict_tree(node: _TreeNode, row: np.ndarray) -> float:
    while not node.is_leaf():
        node = node.left if row[node.feature] <= node.threshold else node.right
    return node.value


def _predict_tree_batch(node: _TreeNode, x: np.ndarray, out: np.ndarray,
                        idx: np.ndarray) -> None:
    if node.is_leaf():
        out[idx] = node.value
        return
    mask = x[idx, node.feature] <= node.threshold
    if mask.any():
        _predict_tree_batch(node.left, x, out, idx[mask])
    if (~mask).any():
        _predict_tree_batch(node.right, x, out, idx[~mask])


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    seed: int = 0


@dataclass
class ForestModel:
    trees: list[_TreeNode]
    config: ForestConfig
    n_features: int
    oob_accuracy: float | None = None
    tokenizer_name: str = "punctuation"

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        total = np.zeros(len(rows))
        idx = np.arange(len(rows))
        scratch = np.zeros(len(rows))
        for tree in self.trees:
            _predict_tree_batch(tree, rows, scratch, idx)
            total += scratch
        return total / len(self.trees)

    def predict(self, rows: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(rows) >= threshold).astype(int)

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": 1,
                "tokenizer": self.tokenizer_name,
                "n_features": self.n_features,
                "config": {
                    "n_trees": self.config.n_trees,
                    "max_depth": self.config.max_depth,
                    "min_leaf": self.config.min_leaf,
                    "seed": self.config.seed,
                },
                "oob_accuracy": self.oob_accuracy,
                "trees": [t.to_dict() for t in self.trees],
            },
            sort_keys=True,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "ForestModel":
        payload = json.loads(text)
        cfg = payload["config"]
        return cls(
            trees=[_TreeNode.from_dict(t) for t in payload["trees"]],
            config=ForestConfig(
                n_trees=cfg["n_trees"],
                max_depth=cfg["max_depth"],
                min_leaf=cfg["min_leaf"],
                seed=cfg["seed"],
            ),
            n_features=payload["n_features"],
            oob_accuracy=payload.get("oob_accuracy"),
            tokenizer_name=payload.get("tokenizer", "punctuation"),
        )


def train_forest(
    rows: np.ndarray, labels: np.ndarray, config: ForestConfig = ForestConfig()
) -> ForestModel:
    """Bootstrap-sampled Gini trees with sqrt(d) features per split.

    Deterministic under a fixed seed. Reports the out-of-bag accuracy when
    every row lands out of bag at least once (small samples may not).
    """
    x = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=int)
    if x.ndim != 2:
        raise ContractError("rows must be 2-dimensional")
    if len(np.unique(y)) < 2:
        raise ContractError("training needs at least two classes")
    n, d = x.shape
    n_candidates = max(1, int(math.sqrt(d)))
    rng = np.random.RandomState(config.seed)
    trees: list[_TreeNode] = []
    oob_votes = np.zeros(n)
    oob_counts = np.zeros(n)
    for _ in range(config.n_trees):
        idx = rng.randint(0, n, size=n)
        tree_rng = np.random.RandomState(rng.randint(0, 2**31 - 1))
        tree = _grow_tree(
            x[idx], y[idx], tree_rng, n_candidates, config.max_depth, config.min_leaf
        )
        trees.append(tree)
        out_of_bag = np.setdiff1d(np.arange(n), idx, assume_unique=False)
        if len(out_of_bag):
            scratch = np.zeros(n)
            _predict_tree_batch(tree, x, scratch, out_of_bag)
            oob_votes[out_of_bag] += scratch[out_of_bag]
            oob_counts[out_of_bag] += 1
    covered = oob_counts > 0
    oob_accuracy = None
    if covered.any():
        preds = (oob_votes[covered] / oob_counts[covered]) >= 0.5
        oob_accuracy = float((preds.astype(int) == y[covered]).mean())
    return ForestModel(trees=trees, config=config, n_features=d, oob_accuracy=oob_accuracy)


# --------------------------------------------------------------------------
# Cross-validation and permutation importance
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


def _binary_metrics(y_true: np.ndarray, y_pred: np.ndarray, positive: int) -> ClassMetrics:
    tp = int(((y_pred == positive) & (y_true == positive)).sum())
    fp = int(((y_pred == positive) & (y_true != positive)).sum())
    fn = int(((y_pred != positive) & (y_true == positive)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassMetrics(100.0 * precision, 100.0 * recall, 100.0 * f1)


def stratified_folds(labels: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Partition row indices into k folds preserving class ratios."""
    labels = np.asarray(labels)
    rng = np.random.RandomState(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        rng.shuffle(idx)
        for i, row in enumerate(idx):
            folds[i % k].append(int(row))
    out = [np.array(sorted(f), dtype=int) for f in folds]
    for fold_id, fold in enumerate(out):
        present = set(labels[fold].tolist())
        if present != set(np.unique(labels).tolist()):
            raise ContractError(f"fold {fold_id} is missing a class; dataset too small")
    return out


@dataclass(frozen=True)
class CrossValReport:
    per_label: dict[int, ClassMetrics]
    accuracy: float


def cross_validate(
    rows: np.ndarray,
    labels: np.ndarray,
    k: int = 5,
    seed: int = 0,
    config: ForestConfig | None = None,
) -> CrossValReport:
    """Stratified k-fold CV; oversampling happens inside each training fold only."""
    x = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=int)
    if len(y) < k:
        raise ContractError(f"need at least {k} rows for {k}-fold CV")
    folds = stratified_folds(y, k, seed)
    base = config or ForestConfig(seed=seed)
    metrics: dict[int, list[ClassMetrics]] = {0: [], 1: []}
    accuracies = []
    for fold_id, val_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(len(y)), val_idx)
        x_train, y_train = x[train_idx], y[train_idx]
        counts = np.bincount(y_train, minlength=2)
        if counts.min() != counts.max() and counts.min() > 0:
            x_train, y_train = oversample(x_train, y_train, seed=base.seed + fold_id)
        model = train_forest(
            x_train,
            y_train,
            ForestConfig(base.n_trees, base.max_depth, base.min_leaf, base.seed + fold_id),
        )
        pred = model.predict(x[val_idx])
        accuracies.append(float((pred == y[val_idx]).mean()))
        for cls in (0, 1):
            metrics[cls].append(_binary_metrics(y[val_idx], pred, cls))
    per_label = {
        cls: ClassMetrics(
            precision=float(np.mean([m.precision for m in ms])),
            recall=float(np.mean([m.recall for m in ms])),
            f1=float(np.mean([m.f1 for m in ms])),
        )
        for cls, ms in metrics.items()
    }
    return CrossValReport(per_label=per_label, accuracy=float(np.mean(accuracies)))


def permutation_importance(
    model: ForestModel,
    rows: np.ndarray,
    labels: np.ndarray,
    seed: int = 0,
    n_shuffles: int = 10,
) -> list[tuple[str, float]]:
    """Accuracy drop when one feature is shuffled, averaged over shuffles.

    Returns (feature name, importance) sorted descending; a feature the model
    never consults scores ~0.
    """
    x = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=int)
    rng = np.random.RandomState(seed)
    baseline = float((model.predict(x) == y).mean())
    importances = []
    for f in range(x.shape[1]):
        drops = []
        for _ in range(n_shuffles):
            shuffled = x.copy()
            rng.shuffle(shuffled[:, f])
            acc = float((model.predict(shuffled) == y).mean())
            drops.append(baseline - acc)
        name = FEATURE_NAMES[f] if f < len(FEATURE_NAMES) else f"feature_{f}"
        importances.append((name, float(np.mean(drops))))
    return sorted(importances, key=lambda pair: -pair[1])
