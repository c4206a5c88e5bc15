"""Nearest-instance counterfactuals drawn from the training pool.

The pool is first restricted to rows that match the origin instance on
every fixed feature (exactly for binary/categorical cells, within the
shared numeric tolerance otherwise). Surviving rows are filtered by the
probability band and ranked by Gower proximity, with sparsity and then
row order breaking ties. Every returned candidate is a verbatim training
row.
"""

from __future__ import annotations

import numpy as np

from .cf_core import (
    EPSILON,
    CfQuery,
    Counterfactual,
    Predictor,
    build_counterfactual,
    changed_features,
    effective_fixed,
    predict_one,
)
from .gower import gower_to_many
from .schema import Dataset


def restrict_pool(dataset: Dataset, x0, fixed, epsilon: float = EPSILON) -> Dataset:
    """Rows agreeing with x0 on all fixed features; an empty result is valid."""
    if dataset.n_rows == 0:
        return dataset
    keep = np.ones(dataset.n_rows, dtype=bool)
    for j in fixed:
        col = dataset.column(j)
        if dataset.schema[j].kind == "numeric":
            keep &= np.abs(col - float(x0[j])) <= epsilon
        else:
            keep &= col == x0[j]
    return dataset.subset(np.nonzero(keep)[0])


def nice_search(query: CfQuery, f: Predictor, dataset: Dataset) -> list[Counterfactual]:
    """Top-k valid nearest neighbors; empty list when no row enters the band."""
    schema = dataset.schema
    fixed = effective_fixed(query, schema)
    pool = restrict_pool(dataset, query.x0, fixed)
    if pool.n_rows == 0:
        return []

    seen = set()
    rows = []
    for r in pool.rows:
        if r not in seen:
            seen.add(r)
            rows.append(r)

    p = np.asarray(f.predict_proba(rows))[:, query.target_class]
    in_band = (p >= query.p_min) & (p <= query.p_max)
    if not in_band.any():
        return []

    p0 = float(predict_one(f, query.x0)[query.target_class])
    dist = gower_to_many(query.x0, rows, schema)
    ranked = sorted(
        (i for i in np.nonzero(in_band)[0]),
        key=lambda i: (
            dist[i],
            len(changed_features(query.x0, rows[i], schema)),
            i,
        ),
    )
    return [
        build_counterfactual(rows[i], p[i], p0, query, schema, stage="nice")
        for i in ranked[: query.k]
    ]
