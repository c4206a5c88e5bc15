"""Shared fixtures: random mixed-type schemas/instances and toy predictors."""

import numpy as np
import pytest

from whatif.schema import Dataset, FeatureSchema, FeatureSpec, infer_schema

CATS = ("a", "b", "c", "d")


def random_schema(rng, p_numeric=2, p_binary=3, p_categorical=2, actionable_all=True):
    feats = []
    for i in range(p_numeric):
        lo = float(rng.uniform(-5, 0))
        hi = lo + float(rng.uniform(0.5, 10))
        feats.append(FeatureSpec(f"num{i}", "numeric", (lo, hi), actionable=actionable_all))
    for i in range(p_binary):
        dom = (0, 1) if rng.random() < 0.5 else ("no", "yes")
        feats.append(FeatureSpec(f"bin{i}", "binary", dom, actionable=actionable_all))
    for i in range(p_categorical):
        k = int(rng.integers(3, len(CATS) + 1))
        feats.append(FeatureSpec(f"cat{i}", "categorical", CATS[:k], actionable=actionable_all))
    order = rng.permutation(len(feats))
    return FeatureSchema(tuple(feats[i] for i in order))


def random_instance(rng, schema):
    row = []
    for spec in schema:
        if spec.kind == "numeric":
            lo, hi = spec.domain
            row.append(float(rng.uniform(lo, hi)))
        else:
            row.append(spec.domain[int(rng.integers(0, len(spec.domain)))])
    return tuple(row)


def random_dataset(rng, n, schema, labeled=True):
    rows = tuple(random_instance(rng, schema) for _ in range(n))
    labels = tuple(int(rng.integers(0, 2)) for _ in range(n)) if labeled else None
    return Dataset(schema, rows, labels)


class LookupPredictor:
    """Positive-class probability read from a table keyed by selected features."""

    def __init__(self, table, indices, default=0.5):
        self.table = dict(table)
        self.indices = list(indices)
        self.default = default

    def predict_proba(self, rows):
        p1 = np.asarray(
            [self.table.get(tuple(r[j] for j in self.indices), self.default) for r in rows]
        )
        return np.column_stack([1.0 - p1, p1])


class LinearPredictor:
    """Sigmoid of a fixed linear score over numeric features plus binary bonuses."""

    def __init__(self, schema, weights=None, bias=0.0, binary_bonus=1.5):
        self.schema = schema
        self.bias = bias
        self.weights = weights
        self.binary_bonus = binary_bonus

    def predict_proba(self, rows):
        z = np.full(len(rows), self.bias)
        for j, spec in enumerate(self.schema):
            if spec.kind == "numeric":
                lo, hi = spec.domain
                scale = (hi - lo) or 1.0
                w = 1.0 if self.weights is None else self.weights.get(spec.name, 1.0)
                z += w * (np.asarray([float(r[j]) for r in rows]) - lo) / scale
            elif spec.kind == "binary":
                hit = np.asarray([r[j] == spec.domain[1] for r in rows], dtype=float)
                z += self.binary_bonus * hit
        from scipy.special import expit

        return np.column_stack([1.0 - expit(z), expit(z)])


def separable_dataset(n=500, seed=0, margin=0.15):
    """Two numeric features; label = indicator of x+y above 1 with a margin band removed."""
    rng = np.random.default_rng(seed)
    rows = []
    labels = []
    while len(rows) < n:
        x, y = rng.uniform(0, 1, 2)
        s = x + y
        if abs(s - 1.0) < margin:
            continue
        rows.append((float(x), float(y)))
        labels.append(int(s > 1.0))
    schema = infer_schema(["x", "y"], rows)
    return Dataset(schema, tuple(rows), tuple(labels))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
