"""Gower distance for mixed numeric/binary/categorical instances.

Per feature: numeric contributes |a-b|/range (0 when the observed range is
0, capped at 1 so out-of-range query values cannot push the metric above
1); binary and categorical contribute a 0/1 mismatch indicator. The
distance is the mean contribution over all features.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .schema import Cell, FeatureSchema, SchemaError, _is_number


def gower_distance(a: Sequence[Cell], b: Sequence[Cell], schema: FeatureSchema) -> float:
    if len(a) != len(schema) or len(b) != len(schema):
        raise SchemaError("instance length does not match schema")
    total = 0.0
    for j, spec in enumerate(schema):
        if spec.kind == "numeric":
            if not (_is_number(a[j]) and _is_number(b[j])):
                raise SchemaError(f"non-numeric cell in numeric feature {spec.name!r}")
            rng = spec.numeric_range
            if rng > 0.0:
                total += min(abs(float(a[j]) - float(b[j])) / rng, 1.0)
        else:
            total += 0.0 if a[j] == b[j] else 1.0
    return total / len(schema)


def gower_to_many(x: Sequence[Cell], rows: Sequence[Sequence[Cell]], schema: FeatureSchema) -> np.ndarray:
    """Distances from one instance to each row; vectorized per column."""
    n = len(rows)
    if n == 0:
        return np.zeros(0)
    acc = np.zeros(n)
    for j, spec in enumerate(schema):
        if spec.kind == "numeric":
            col = np.asarray([r[j] for r in rows], dtype=np.float64)
            rng = spec.numeric_range
            if rng > 0.0:
                acc += np.minimum(np.abs(col - float(x[j])) / rng, 1.0)
        else:
            col = np.empty(n, dtype=object)
            col[:] = [r[j] for r in rows]
            acc += (col != x[j]).astype(np.float64)
    return acc / len(schema)
