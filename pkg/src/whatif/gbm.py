"""Desk-scale regularized gradient-boosted tree classifier.

Binary classification on logistic loss. Trees are grown by exact greedy
search (sorted numeric thresholds at midpoints, one-vs-rest categorical
splits) with second-order leaf values w = -G/(H + lambda) scaled by the
learning rate. Training is single-threaded and fully deterministic; a
trained model is immutable and safe for concurrent prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit

from .schema import Cell, Dataset

_MIN_GAIN = 1e-12


class ModelError(ValueError):
    """Training or prediction contract violation."""


@dataclass(frozen=True)
class GbmConfig:
    n_trees: int = 200
    max_depth: int = 3
    learning_rate: float = 0.1
    l2_leaf_penalty: float = 1.0
    min_samples_leaf: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0:
            raise ModelError("n_trees must be >= 0")
        if self.max_depth < 1:
            raise ModelError("max_depth must be >= 1")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ModelError("learning_rate must be in (0, 1]")
        if self.l2_leaf_penalty < 0.0:
            raise ModelError("l2_leaf_penalty must be >= 0")
        if self.min_samples_leaf < 1:
            raise ModelError("min_samples_leaf must be >= 1")

    def to_json(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "l2_leaf_penalty": self.l2_leaf_penalty,
            "min_samples_leaf": self.min_samples_leaf,
            "seed": self.seed,
        }


def _encode_columns(rows: Sequence[Sequence[Cell]], kinds: Sequence[str]) -> list[np.ndarray]:
    cols: list[np.ndarray] = []
    for j, kind in enumerate(kinds):
        cells = [r[j] for r in rows]
        if kind == "numeric":
            try:
                cols.append(np.asarray(cells, dtype=np.float64))
            except (TypeError, ValueError):
                raise ModelError(f"schema mismatch: non-numeric cell in numeric column {j}") from None
        else:
            arr = np.empty(len(cells), dtype=object)
            arr[:] = cells
            cols.append(arr)
    return cols


def _best_split(cols, kinds, domains, g, h, idx, lam, min_leaf):
    """Exact greedy split over all features at one node; first best wins ties."""
    n = idx.size
    g_node = g[idx]
    h_node = h[idx]
    G = g_node.sum()
    H = h_node.sum()
    parent = G * G / (H + lam)
    best = None
    best_gain = _MIN_GAIN
    for j, kind in enumerate(kinds):
        v = cols[j][idx]
        if kind == "numeric":
            order = np.argsort(v, kind="stable")
            vs = v[order]
            cg = np.cumsum(g_node[order])
            ch = np.cumsum(h_node[order])
            pos = np.nonzero(vs[:-1] < vs[1:])[0]
            pos = pos[(pos + 1 >= min_leaf) & (n - pos - 1 >= min_leaf)]
            if pos.size == 0:
                continue
            GL, HL = cg[pos], ch[pos]
            GR, HR = G - GL, H - HL
            gains = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam) - parent)
            i = int(np.argmax(gains))
            if gains[i] > best_gain:
                thr = (float(vs[pos[i]]) + float(vs[pos[i] + 1])) / 2.0
                best_gain = float(gains[i])
                best = {"feature": j, "op": "le", "threshold": thr, "gain": best_gain}
        else:
            for c in domains[j]:
                mask = v == c
                nl = int(mask.sum())
                if nl < min_leaf or n - nl < min_leaf:
                    continue
                GL = g_node[mask].sum()
                HL = h_node[mask].sum()
                GR, HR = G - GL, H - HL
                gain = 0.5 * (GL**2 / (HL + lam) + GR**2 / (HR + lam) - parent)
                if gain > best_gain:
                    best_gain = float(gain)
                    best = {"feature": j, "op": "eq", "value": c, "gain": best_gain}
    return best


def _grow_tree(cols, kinds, domains, g, h, idx, depth, cfg):
    lam = cfg.l2_leaf_penalty
    if depth < cfg.max_depth and idx.size >= 2 * cfg.min_samples_leaf:
        split = _best_split(cols, kinds, domains, g, h, idx, lam, cfg.min_samples_leaf)
    else:
        split = None
    if split is None:
        value = -cfg.learning_rate * g[idx].sum() / (h[idx].sum() + lam)
        return {"value": float(value)}, [(idx, float(value))]
    j = split["feature"]
    v = cols[j][idx]
    if split["op"] == "le":
        mask = v <= split["threshold"]
    else:
        mask = v == split["value"]
    left, leaves_l = _grow_tree(cols, kinds, domains, g, h, idx[mask], depth + 1, cfg)
    right, leaves_r = _grow_tree(cols, kinds, domains, g, h, idx[~mask], depth + 1, cfg)
    node = dict(split)
    node["left"] = left
    node["right"] = right
    return node, leaves_l + leaves_r


def _tree_add(node, cols, idx, out):
    if "value" in node and "feature" not in node:
        out[idx] += node["value"]
        return
    v = cols[node["feature"]][idx]
    if node["op"] == "le":
        mask = v <= node["threshold"]
    else:
        mask = v == node["value"]
    _tree_add(node["left"], cols, idx[mask], out)
    _tree_add(node["right"], cols, idx[~mask], out)


@dataclass(frozen=True)
class GbmModel:
    """Additive ensemble of regression trees over logits for two classes."""

    base_score: float
    trees: tuple
    feature_names: tuple[str, ...]
    feature_kinds: tuple[str, ...]
    schema_fingerprint: str
    config: GbmConfig | None = None
    training_loss: tuple[float, ...] = field(default=(), compare=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict_logit(self, rows: Sequence[Sequence[Cell]]) -> np.ndarray:
        for r in rows:
            if len(r) != self.n_features:
                raise ModelError(
                    f"schema mismatch: row has {len(r)} cells, model expects {self.n_features}"
                )
        cols = _encode_columns(rows, self.feature_kinds)
        out = np.full(len(rows), self.base_score, dtype=np.float64)
        idx = np.arange(len(rows))
        for tree in self.trees:
            _tree_add(tree, cols, idx, out)
        return out

    def predict_proba(self, rows: Sequence[Sequence[Cell]]) -> np.ndarray:
        """(n, 2) array of class probabilities; column 1 is the positive class."""
        p1 = expit(self.predict_logit(rows))
        return np.column_stack([1.0 - p1, p1])

    def feature_importance(self) -> dict[str, float]:
        """Total split gain per feature, normalized to sum to 1 when any split exists."""
        gains = np.zeros(self.n_features)

        def walk(node):
            if "feature" in node:
                gains[node["feature"]] += node["gain"]
                walk(node["left"])
                walk(node["right"])

        for tree in self.trees:
            walk(tree)
        total = gains.sum()
        if total > 0.0:
            gains = gains / total
        return {name: float(gains[j]) for j, name in enumerate(self.feature_names)}

    def to_json(self) -> dict:
        obj = {
            "version": 1,
            "base_score": self.base_score,
            "trees": list(self.trees),
            "feature_names": list(self.feature_names),
            "feature_kinds": list(self.feature_kinds),
            "schema_fingerprint": self.schema_fingerprint,
        }
        if self.config is not None:
            obj["config"] = self.config.to_json()
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "GbmModel":
        if obj.get("version") != 1:
            raise ModelError(f"unsupported model version {obj.get('version')!r}")
        cfg = GbmConfig(**obj["config"]) if "config" in obj else None
        return cls(
            base_score=float(obj["base_score"]),
            trees=tuple(obj["trees"]),
            feature_names=tuple(obj["feature_names"]),
            feature_kinds=tuple(obj["feature_kinds"]),
            schema_fingerprint=obj["schema_fingerprint"],
            config=cfg,
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "GbmModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def logistic_loss(y: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, 1e-15, 1.0 - 1e-15)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def train(dataset: Dataset, config: GbmConfig = GbmConfig()) -> GbmModel:
    """Fit an ensemble of config.n_trees trees by Newton boosting on logistic loss."""
    if dataset.labels is None:
        raise ModelError("dataset has no labels")
    y = dataset.label_array().astype(np.float64)
    if y.min() == y.max():
        raise ModelError("degenerate labels: both classes required")
    n = dataset.n_rows
    if n < 2 * config.min_samples_leaf:
        raise ModelError("too few rows for min_samples_leaf")

    kinds = tuple(s.kind for s in dataset.schema)
    domains = tuple(s.domain if s.kind != "numeric" else None for s in dataset.schema)
    cols = [dataset.column(j) for j in range(dataset.n_features)]

    pbar = float(np.clip(y.mean(), 1e-12, 1.0 - 1e-12))
    base = float(np.log(pbar / (1.0 - pbar)))
    F = np.full(n, base)
    trees = []
    losses = [logistic_loss(y, expit(F))]
    root_idx = np.arange(n)
    for _ in range(config.n_trees):
        p = expit(F)
        g = p - y
        h = p * (1.0 - p)
        tree, leaves = _grow_tree(cols, kinds, domains, g, h, root_idx, 0, config)
        for idx, value in leaves:
            F[idx] += value
        trees.append(tree)
        losses.append(logistic_loss(y, expit(F)))

    return GbmModel(
        base_score=base,
        trees=tuple(trees),
        feature_names=dataset.schema.names,
        feature_kinds=kinds,
        schema_fingerprint=dataset.schema.fingerprint(),
        config=config,
        training_loss=tuple(losses),
    )


def stratified_folds(labels: Sequence[int], folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified fold assignment; every row lands in exactly one fold."""
    if folds < 2:
        raise ModelError("folds must be >= 2")
    y = np.asarray(labels, dtype=np.int64)
    if folds > y.size:
        raise ModelError("more folds than rows")
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=np.int64)
    for cls in np.unique(y):
        members = np.nonzero(y == cls)[0]
        members = members[rng.permutation(members.size)]
        assignment[members] = np.arange(members.size) % folds
    return [np.nonzero(assignment == f)[0] for f in range(folds)]


def cross_validate(dataset: Dataset, config: GbmConfig = GbmConfig(), folds: int = 5) -> list[float]:
    """Per-fold held-out AUROC; each fold's model is trained on the remaining folds."""
    from .evaluation import auroc

    if dataset.labels is None:
        raise ModelError("dataset has no labels")
    fold_indices = stratified_folds(dataset.labels, folds, config.seed)
    y = dataset.label_array()
    for f, idx in enumerate(fold_indices):
        if idx.size == 0 or np.unique(y[idx]).size < 2:
            raise ModelError(f"fold {f} has a single class; reduce folds")
    scores = []
    for f, idx in enumerate(fold_indices):
        train_idx = np.concatenate([fold_indices[k] for k in range(folds) if k != f])
        model = train(dataset.subset(np.sort(train_idx)), config)
        rows = [dataset.rows[i] for i in idx]
        p = model.predict_proba(rows)[:, 1]
        scores.append(auroc(p, y[idx]))
    return scores
