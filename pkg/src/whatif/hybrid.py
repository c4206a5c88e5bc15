"""Stage orchestration: exact enumeration, then NICE, then MOC.

The branch decision is a pure function of the binary actionable count m:
enumeration runs iff 0 < m <= m_max and 2^m - 1 <= 2^20. If enumeration
yields at least one valid candidate its top k are final; otherwise the
nearest-instance stage searches the fixed-feature-restricted training
pool, and only if that also comes back empty does the genetic stage run.
Every returned candidate is re-validated against the shared tolerance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

from .cf_core import (
    Counterfactual,
    CfQuery,
    Predictor,
    counterfactuals_to_json,
    effective_fixed,
    predict_one,
    validate,
)
from .cf_enum import HARD_CAP_BITS, EnumerationInfeasible, enumerate_toggles
from .cf_moc import MocConfig, moc_search
from .cf_nice import nice_search, restrict_pool
from .schema import Dataset, binary_feature_values


def branch_gate(m: int, m_max: int) -> bool:
    """True when the enumeration branch should be attempted."""
    return 0 < m <= m_max and m <= HARD_CAP_BITS


class _CountingPredictor:
    def __init__(self, f: Predictor):
        self._f = f
        self.calls = 0

    def predict_proba(self, rows):
        self.calls += len(rows)
        return self._f.predict_proba(rows)


@dataclass(frozen=True)
class HybridReport:
    stage_used: str  # enumeration | nice | moc | none
    m: int
    candidates_evaluated: int
    counterfactuals: tuple[Counterfactual, ...]
    timings: dict = field(default_factory=dict)  # seconds per stage actually run
    p_origin: float = float("nan")
    x0: tuple = ()

    def to_json(self, schema, include_timings: bool = True) -> dict:
        """Timings are wall-clock and may be excluded for byte-reproducible files."""
        out = {
            "stage_used": self.stage_used,
            "m": self.m,
            "candidates_evaluated": self.candidates_evaluated,
            "p_origin": self.p_origin,
            "counterfactuals": counterfactuals_to_json(
                self.counterfactuals, schema, self.x0, self.p_origin
            ),
        }
        if include_timings:
            out["timings"] = {k: v for k, v in self.timings.items()}
        return out


def generate(
    query: CfQuery,
    f: Predictor,
    dataset: Dataset,
    moc_config: MocConfig = MocConfig(),
    threads: int = 1,
    on_moc_generation=None,
) -> HybridReport:
    """Run the staged search for one query against an immutable model/dataset."""
    schema = dataset.schema
    schema.validate_instance(query.x0)
    fixed = effective_fixed(query, schema)
    pairs = binary_feature_values(dataset)
    binary_actionable = {j: v for j, v in pairs.items() if j not in fixed}
    m = len(binary_actionable)
    p_origin = float(predict_one(f, query.x0)[query.target_class])

    timings: dict[str, float] = {}
    evaluated = 0

    if branch_gate(m, query.m_max):
        counted = _CountingPredictor(f)
        t0 = time.perf_counter()
        try:
            result = enumerate_toggles(
                query, counted, schema, binary_values=binary_actionable, threads=threads
            )
        except EnumerationInfeasible:
            result = None
        timings["enumeration"] = time.perf_counter() - t0
        if result is not None:
            evaluated += result.candidates_evaluated
            if result.valid:
                return HybridReport(
                    stage_used="enumeration",
                    m=m,
                    candidates_evaluated=evaluated,
                    counterfactuals=_validated(result.valid, query, f, schema),
                    timings=timings,
                    p_origin=p_origin,
                    x0=tuple(query.x0),
                )

    pool = restrict_pool(dataset, query.x0, fixed)
    if pool.n_rows > 0:
        counted = _CountingPredictor(f)
        t0 = time.perf_counter()
        nice_cfs = nice_search(query, counted, dataset)
        timings["nice"] = time.perf_counter() - t0
        evaluated += counted.calls
        if nice_cfs:
            return HybridReport(
                stage_used="nice",
                m=m,
                candidates_evaluated=evaluated,
                counterfactuals=_validated(nice_cfs, query, f, schema),
                timings=timings,
                p_origin=p_origin,
                x0=tuple(query.x0),
            )

    counted = _CountingPredictor(f)
    t0 = time.perf_counter()
    moc_cfs = moc_search(query, counted, schema, config=moc_config, on_generation=on_moc_generation)
    timings["moc"] = time.perf_counter() - t0
    evaluated += counted.calls
    if moc_cfs:
        return HybridReport(
            stage_used="moc",
            m=m,
            candidates_evaluated=evaluated,
            counterfactuals=_validated(moc_cfs, query, f, schema),
            timings=timings,
            p_origin=p_origin,
            x0=tuple(query.x0),
        )

    return HybridReport(
        stage_used="none",
        m=m,
        candidates_evaluated=evaluated,
        counterfactuals=(),
        timings=timings,
        p_origin=p_origin,
        x0=tuple(query.x0),
    )


def _validated(
    cfs: Sequence[Counterfactual], query: CfQuery, f: Predictor, schema
) -> tuple[Counterfactual, ...]:
    for cf in cfs:
        violations = validate(cf.x_prime, query, f, schema)
        if violations:
            raise RuntimeError(
                f"stage {cf.stage!r} produced an invalid candidate: "
                + "; ".join(v.message for v in violations)
            )
    return tuple(cfs)
