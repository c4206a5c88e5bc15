"""Exhaustive enumeration over subsets of binary actionable features.

Every non-empty subset of the m binary actionable features is visited in
ascending bitmask order (bit i toggles the i-th binary feature by index),
each candidate is filtered by the probability band and scored, and the
top k survivors are returned. Feasible only while m <= m_max and
2^m - 1 <= 2^20; within that regime the top-1 is globally optimal for the
composite score over the binary subspace.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cf_core import (
    CfQuery,
    Counterfactual,
    Predictor,
    build_counterfactual,
    effective_fixed,
    predict_one,
)
from .schema import Cell, FeatureSchema, SchemaError

HARD_CAP_BITS = 20  # 2^m - 1 candidates must not exceed 2^20
BLOCK = 1024


class EnumerationInfeasible(Exception):
    """Raised when the binary subspace is empty or too large to enumerate."""


def _other(value: Cell, pair: Sequence[Cell]) -> Cell:
    a, b = pair
    if value == a:
        return b
    if value == b:
        return a
    raise SchemaError(f"value {value!r} outside binary domain {tuple(pair)!r}")


def schema_binary_values(schema: FeatureSchema) -> dict[int, tuple[Cell, Cell]]:
    return {j: (s.domain[0], s.domain[1]) for j, s in enumerate(schema) if s.kind == "binary"}


def toggle(x0: Sequence[Cell], subset: Sequence[int], schema: FeatureSchema) -> tuple[Cell, ...]:
    """Swap each feature in `subset` to the other element of its two-value domain."""
    out = list(x0)
    for j in subset:
        spec = schema[j]
        if spec.kind != "binary":
            raise SchemaError(f"feature {spec.name!r} is not binary")
        if not spec.actionable:
            raise SchemaError(f"feature {spec.name!r} is fixed")
        out[j] = _other(x0[j], spec.domain)
    return tuple(out)


@dataclass(frozen=True)
class EnumResult:
    candidates_evaluated: int
    valid: tuple[Counterfactual, ...]  # top k, ascending score with tie-breaks
    exhausted: bool


def _score_block(masks, features, toggled, query, f, p0):
    rows = []
    for mask in masks:
        row = list(query.x0)
        mbits = int(mask)
        while mbits:
            low = mbits & -mbits
            i = low.bit_length() - 1
            row[features[i]] = toggled[i]
            mbits ^= low
        rows.append(tuple(row))
    p = np.asarray(f.predict_proba(rows))[:, query.target_class]
    keep = (p >= query.p_min) & (p <= query.p_max)
    return [(int(masks[i]), rows[i], float(p[i])) for i in np.nonzero(keep)[0]]


def enumerate_toggles(
    query: CfQuery,
    f: Predictor,
    schema: FeatureSchema,
    binary_values: Mapping[int, tuple[Cell, Cell]] | None = None,
    threads: int = 1,
    time_budget_s: float | None = None,
) -> EnumResult:
    """Evaluate all 2^m - 1 toggle subsets and return the top k valid candidates.

    `binary_values` maps feature index -> observed two-value pair; by
    default it is derived from the schema's binary domains.
    """
    if binary_values is None:
        binary_values = schema_binary_values(schema)
    fixed = effective_fixed(query, schema)
    features = sorted(j for j in binary_values if j not in fixed)
    m = len(features)
    if m == 0:
        raise EnumerationInfeasible("no binary actionable features")
    if m > query.m_max:
        raise EnumerationInfeasible(f"m={m} exceeds m_max={query.m_max}")
    if m > HARD_CAP_BITS:
        raise EnumerationInfeasible(f"2^{m} - 1 exceeds 2^{HARD_CAP_BITS}")

    toggled = [_other(query.x0[j], binary_values[j]) for j in features]
    p0 = float(predict_one(f, query.x0)[query.target_class])
    total = (1 << m) - 1
    started = time.monotonic()

    blocks = [
        np.arange(lo, min(lo + BLOCK, total + 1), dtype=np.int64)
        for lo in range(1, total + 1, BLOCK)
    ]
    hits: list[tuple[int, tuple, float]] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_score_block, masks, features, toggled, query, f, p0)
                for masks in blocks
            ]
            for fut in futures:  # submission order keeps the merge deterministic
                hits.extend(fut.result())
    else:
        for masks in blocks:
            hits.extend(_score_block(masks, features, toggled, query, f, p0))
            if time_budget_s is not None and time.monotonic() - started > time_budget_s:
                raise EnumerationInfeasible("enumeration time budget exceeded")

    cfs = [
        build_counterfactual(row, p, p0, query, schema, stage="enumeration")
        for _, row, p in hits
    ]
    cfs.sort(key=Counterfactual.rank_key)
    return EnumResult(
        candidates_evaluated=total,
        valid=tuple(cfs[: query.k]),
        exhausted=True,
    )
