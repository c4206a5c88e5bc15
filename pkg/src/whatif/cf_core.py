"""Counterfactual problem definition shared by all search stages.

A query asks for up to k modified instances whose predicted target-class
probability lands in a closed band [p_min, p_max], touching only features
outside the fixed set. Candidates are scored by
alpha * |changed| - beta * |p_target(candidate) - p_target(origin)|,
lower being better, and validated against a single numeric tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .gower import gower_distance
from .schema import Cell, FeatureSchema, Row

EPSILON = 1e-8


class Predictor(Protocol):
    """Batch probability contract every search stage consumes."""

    def predict_proba(self, rows: Sequence[Sequence[Cell]]) -> np.ndarray: ...


def predict_one(f: Predictor, row: Sequence[Cell]) -> np.ndarray:
    return np.asarray(f.predict_proba([tuple(row)]))[0]


@dataclass(frozen=True)
class CfQuery:
    x0: Row
    target_class: int
    p_min: float
    p_max: float
    fixed: frozenset[int] = frozenset()
    k: int = 3
    alpha: float = 1.0
    beta: float = 1.0
    m_max: int = 16
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(self.x0))
        object.__setattr__(self, "fixed", frozenset(self.fixed))
        if not (0.0 <= self.p_min < self.p_max <= 1.0):
            raise ValueError("probability band requires 0 <= p_min < p_max <= 1")
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError("alpha and beta must be non-negative")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.m_max < 0:
            raise ValueError("m_max must be >= 0")


def effective_fixed(query: CfQuery, schema: FeatureSchema) -> frozenset[int]:
    """Query fixed set plus the schema's permanently non-actionable features."""
    bad = [j for j in query.fixed if j < 0 or j >= len(schema)]
    if bad:
        raise ValueError(f"fixed feature indices out of range: {sorted(bad)}")
    return query.fixed | schema.non_actionable()


def changed_features(
    x0: Sequence[Cell],
    candidate: Sequence[Cell],
    schema: FeatureSchema,
    epsilon: float = EPSILON,
) -> frozenset[int]:
    """Features where the candidate differs from the origin.

    Numeric cells differ only beyond epsilon; binary/categorical cells
    differ on any inequality. The same tolerance is used by validation so
    sub-epsilon numeric drift never counts as a change.
    """
    out = []
    for j, spec in enumerate(schema):
        if spec.kind == "numeric":
            if abs(float(candidate[j]) - float(x0[j])) > epsilon:
                out.append(j)
        elif candidate[j] != x0[j]:
            out.append(j)
    return frozenset(out)


def score_value(n_changed: int, p_candidate: float, p_origin: float, alpha: float, beta: float) -> float:
    return alpha * n_changed - beta * abs(p_candidate - p_origin)


def score(
    candidate: Sequence[Cell],
    query: CfQuery,
    f: Predictor,
    schema: FeatureSchema,
) -> float:
    """Composite sparsity/effect score of one candidate; lower is better."""
    schema.validate_instance(candidate)
    p0 = float(predict_one(f, query.x0)[query.target_class])
    pc = float(predict_one(f, candidate)[query.target_class])
    changed = changed_features(query.x0, candidate, schema)
    return score_value(len(changed), pc, p0, query.alpha, query.beta)


@dataclass(frozen=True)
class Violation:
    check: str  # fixed_modified | probability_outside_band
    message: str
    feature: int | None = None


def validate(
    candidate: Sequence[Cell],
    query: CfQuery,
    f: Predictor,
    schema: FeatureSchema,
    epsilon: float = EPSILON,
) -> list[Violation]:
    """All constraint violations of a candidate; empty list means valid.

    Checks: fixed features unchanged (numeric within epsilon, categorical
    exactly), predicted target probability inside the closed band, and no
    change outside the actionable set. The last check coincides with the
    first because the actionable set is the complement of the fixed set.
    """
    fixed = effective_fixed(query, schema)
    out = []
    changed = changed_features(query.x0, candidate, schema, epsilon)
    for j in sorted(changed & fixed):
        out.append(
            Violation(
                check="fixed_modified",
                feature=j,
                message=f"fixed feature {schema[j].name!r} modified",
            )
        )
    p = float(predict_one(f, candidate)[query.target_class])
    if not (query.p_min <= p <= query.p_max):
        out.append(
            Violation(
                check="probability_outside_band",
                message=f"target probability {p:.6f} outside [{query.p_min}, {query.p_max}]",
            )
        )
    return out


@dataclass(frozen=True)
class Counterfactual:
    x_prime: Row
    changed: frozenset[int]
    p_target: float
    score: float
    stage: str  # enumeration | nice | moc
    distance: float

    def rank_key(self):
        """Deterministic total order: score, sparsity, proximity, changed set."""
        return (self.score, len(self.changed), self.distance, tuple(sorted(self.changed)))


def build_counterfactual(
    candidate: Sequence[Cell],
    p_candidate: float,
    p_origin: float,
    query: CfQuery,
    schema: FeatureSchema,
    stage: str,
) -> Counterfactual:
    changed = changed_features(query.x0, candidate, schema)
    return Counterfactual(
        x_prime=tuple(candidate),
        changed=changed,
        p_target=float(p_candidate),
        score=score_value(len(changed), float(p_candidate), float(p_origin), query.alpha, query.beta),
        stage=stage,
        distance=gower_distance(query.x0, candidate, schema),
    )


def counterfactuals_to_json(
    cfs: Sequence[Counterfactual],
    schema: FeatureSchema,
    x0: Sequence[Cell],
    p_origin: float,
) -> list[dict]:
    """Shared export format: one entry per counterfactual with from/to changes."""
    out = []
    for cf in cfs:
        changes = [
            {
                "feature": schema[j].name,
                "from": x0[j],
                "to": cf.x_prime[j],
            }
            for j in sorted(cf.changed)
        ]
        out.append(
            {
                "stage": cf.stage,
                "score": cf.score,
                "p_origin": float(p_origin),
                "p_target": cf.p_target,
                "distance": cf.distance,
                "changes": changes,
            }
        )
    return out
