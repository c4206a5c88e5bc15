"""Discrimination metrics and operating-point selection.

AUROC is the Mann-Whitney statistic P(score+ > score-) + 0.5 P(tie),
computed from average ranks. The confidence interval is a stratified
percentile bootstrap. The operating threshold maximizes Youden's
J = sensitivity + specificity - 1 over midpoints of adjacent distinct
scores plus {0, 1}, ties broken toward the smallest threshold.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import rankdata


class MetricError(ValueError):
    pass


def _check_classes(labels: np.ndarray) -> None:
    if labels.size == 0 or np.unique(labels).size < 2:
        raise MetricError("both classes must be present")


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape:
        raise MetricError("scores and labels must have equal length")
    _check_classes(labels)
    ranks = rankdata(scores)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def bootstrap_ci(
    scores: Sequence[float],
    labels: Sequence[int],
    n_boot: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile interval of AUROC over stratified resamples."""
    if n_boot < 100:
        raise MetricError("n_boot must be >= 100")
    if not (0.0 < level < 1.0):
        raise MetricError("level must be in (0, 1)")
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    _check_classes(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    # one child seed per resample keeps the result independent of evaluation order
    seeds = np.random.default_rng(seed).integers(0, 2**63 - 1, size=n_boot)
    stats = np.empty(n_boot)
    for b in range(n_boot):
        rng = np.random.default_rng(seeds[b])
        ps = pos[rng.integers(0, pos.size, pos.size)]
        ns = neg[rng.integers(0, neg.size, neg.size)]
        stats[b] = auroc(
            np.concatenate([ps, ns]),
            np.concatenate([np.ones(ps.size, dtype=np.int64), np.zeros(ns.size, dtype=np.int64)]),
        )
    alpha = (1.0 - level) / 2.0
    low, high = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(low), float(high)


def _confusion_at(scores, labels, threshold):
    pred = scores >= threshold
    tp = int(np.sum(pred & (labels == 1)))
    fn = int(np.sum(~pred & (labels == 1)))
    tn = int(np.sum(~pred & (labels == 0)))
    fp = int(np.sum(pred & (labels == 0)))
    sens = tp / (tp + fn) if tp + fn else 0.0
    spec = tn / (tn + fp) if tn + fp else 0.0
    return sens, spec


def youden_candidates(scores: np.ndarray) -> np.ndarray:
    uniq = np.unique(scores)
    mids = (uniq[:-1] + uniq[1:]) / 2.0
    return np.unique(np.concatenate([mids, [0.0, 1.0]]))


def youden_threshold(scores: Sequence[float], labels: Sequence[int]) -> tuple[float, float, float]:
    """(threshold, sensitivity, specificity) maximizing J; smallest threshold on ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    _check_classes(labels)
    best = None
    for t in youden_candidates(scores):
        sens, spec = _confusion_at(scores, labels, t)
        j = sens + spec - 1.0
        if best is None or j > best[0]:
            best = (j, float(t), sens, spec)
    return best[1], best[2], best[3]


def roc_points(scores: Sequence[float], labels: Sequence[int]) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) swept over descending distinct scores, from (0,0) to (1,1)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    _check_classes(labels)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    tps = np.cumsum(y)
    fps = np.cumsum(1 - y)
    last = np.nonzero(np.append(s[1:] != s[:-1], True))[0]
    pts = [(0.0, 0.0, float(s[0] + 1.0))]
    for i in last:
        pts.append((fps[i] / n_neg, tps[i] / n_pos, float(s[i])))
    return pts


@dataclass(frozen=True)
class EvalReport:
    auroc: float
    ci_low: float
    ci_high: float
    threshold: float
    sensitivity: float
    specificity: float
    roc_points: tuple[tuple[float, float, float], ...]

    def to_json(self) -> dict:
        return {
            "auroc": self.auroc,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "threshold": self.threshold,
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "roc_points": [list(p) for p in self.roc_points],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        return cls(
            auroc=obj["auroc"],
            ci_low=obj["ci_low"],
            ci_high=obj["ci_high"],
            threshold=obj["threshold"],
            sensitivity=obj["sensitivity"],
            specificity=obj["specificity"],
            roc_points=tuple(tuple(p) for p in obj["roc_points"]),
        )


def evaluate_scores(
    scores: Sequence[float],
    labels: Sequence[int],
    n_boot: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> EvalReport:
    a = auroc(scores, labels)
    low, high = bootstrap_ci(scores, labels, n_boot=n_boot, level=level, seed=seed)
    t, sens, spec = youden_threshold(scores, labels)
    return EvalReport(
        auroc=a,
        ci_low=low,
        ci_high=high,
        threshold=t,
        sensitivity=sens,
        specificity=spec,
        roc_points=tuple(roc_points(scores, labels)),
    )


def save_roc_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fpr", "tpr", "threshold"])
        for fpr, tpr, t in report.roc_points:
            writer.writerow([repr(float(fpr)), repr(float(tpr)), repr(float(t))])


def save_report_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
