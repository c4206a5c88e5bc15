"""Synthetic patient cohort with planted risk structure.

Replaces private clinical data for demos and tests: per-patient event
timelines (diagnoses, medications, labs) anchored at an infection index
date, a fixed-window featurizer that turns a timeline into one tabular
row, and greedy 1:ratio case-control matching on (age decade, sex, ECI
band, nearest index date). Outcome labels are drawn from a logistic model
over planted per-code coefficients so ground-truth recourse is known.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from .schema import Cell, Dataset, Row, infer_schema

DEFAULT_CODE_KINDS: dict[str, str] = {
    "HTN": "condition",
    "CKD": "condition",
    "DM": "condition",
    "CAD": "condition",
    "HFpEF": "condition",
    "loop-diuretic": "medication",
    "ACE-inhibitor": "medication",
    "creatinine": "lab",
    "A1c": "lab",
}

DEFAULT_AGGREGATIONS: dict[str, tuple[str, ...]] = {
    "condition": ("presence",),
    "medication": ("presence", "count"),
    "lab": ("presence", "count", "last_value"),
}

STATIC_NAMES = ("age", "sex", "eci")

_EPOCH = date(1970, 1, 1)
_INFECTION_FIRST = (date(2020, 3, 6) - _EPOCH).days
_INFECTION_LAST = (date(2022, 6, 7) - _EPOCH).days


@dataclass(frozen=True)
class TimelineEvent:
    offset: int  # days relative to index_date
    code: str
    value: float | None = None


@dataclass(frozen=True)
class EventTimeline:
    patient_id: str
    index_date: int  # days since epoch
    age: float
    sex: str
    eci: int
    events: tuple[TimelineEvent, ...] = ()

    def __post_init__(self):
        if self.eci < 0:
            raise ValueError("eci must be >= 0")
        ordered = tuple(sorted(self.events, key=lambda e: e.offset))
        object.__setattr__(self, "events", ordered)


@dataclass(frozen=True)
class WindowSpec:
    """Fixed windows relative to the index date, half-open [start, end)."""

    windows: tuple[tuple[int, int], ...] = ((-365, 0), (0, 180))
    aggregations: Mapping[str, tuple[str, ...]] = field(default_factory=lambda: dict(DEFAULT_AGGREGATIONS))
    codes: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_CODE_KINDS))

    def __post_init__(self):
        if not self.windows:
            raise ValueError("at least one window required")
        for start, end in self.windows:
            if start >= end:
                raise ValueError(f"window ({start}, {end}) must have start < end")
        for kind, aggs in self.aggregations.items():
            for a in aggs:
                if a not in ("presence", "count", "last_value"):
                    raise ValueError(f"unknown aggregation {a!r} for kind {kind!r}")


@dataclass(frozen=True)
class FeatureColumn:
    name: str
    code: str
    window: tuple[int, int]
    aggregation: str


def feature_columns(spec: WindowSpec) -> list[FeatureColumn]:
    """Event-feature columns in deterministic (code, window, aggregation) order."""
    cols = []
    for code in sorted(spec.codes):
        kind = spec.codes[code]
        for window in sorted(spec.windows):
            for agg in sorted(spec.aggregations.get(kind, ())):
                name = f"{code}__{window[0]}to{window[1]}__{agg}"
                cols.append(FeatureColumn(name, code, tuple(window), agg))
    return cols


def feature_names(spec: WindowSpec) -> list[str]:
    return [c.name for c in feature_columns(spec)] + list(STATIC_NAMES)


def featurize(timeline: EventTimeline, spec: WindowSpec) -> Row:
    """One tabular row per timeline: event aggregates then age, sex, eci."""
    cells: list[Cell] = []
    for col in feature_columns(spec):
        start, end = col.window
        hits = [e for e in timeline.events if e.code == col.code and start <= e.offset < end]
        if col.aggregation == "presence":
            cells.append(1 if hits else 0)
        elif col.aggregation == "count":
            cells.append(len(hits))
        else:
            valued = [e for e in hits if e.value is not None]
            cells.append(float(valued[-1].value) if valued else 0.0)
    cells.extend([float(timeline.age), timeline.sex, int(timeline.eci)])
    return tuple(cells)


def build_dataset(
    timelines: Sequence[EventTimeline],
    labels: Sequence[int] | None,
    spec: WindowSpec = WindowSpec(),
) -> Dataset:
    names = feature_names(spec)
    rows = [featurize(t, spec) for t in timelines]
    schema = infer_schema(names, rows)
    return Dataset(schema, tuple(rows), tuple(labels) if labels is not None else None)


# ---------------------------------------------------------------------------
# Generator


@dataclass(frozen=True)
class CohortConfig:
    n: int = 2744
    seed: int = 0
    intercept: float = -3.9
    planted: Mapping[str, float] = field(
        default_factory=lambda: {
            "HTN": 1.2,
            "CKD": 0.9,
            "DM": 0.8,
            "CAD": 0.5,
            "HFpEF": 0.6,
            "age": 0.02,
            "eci": 0.06,
        }
    )
    noise_sd: float = 0.3
    prevalence: Mapping[str, float] = field(
        default_factory=lambda: {
            "HTN": 0.55,
            "CKD": 0.30,
            "DM": 0.35,
            "CAD": 0.40,
            "HFpEF": 0.45,
        }
    )

    def __post_init__(self):
        if self.n < 20:
            raise ValueError("n must be >= 20")


def _pre_offsets(rng, count: int) -> list[int]:
    return sorted(int(o) for o in rng.integers(-365, 0, size=count))


def generate_cohort(config: CohortConfig = CohortConfig()) -> tuple[list[EventTimeline], list[int]]:
    """Sample timelines calibrated to the target cohort moments plus labels."""
    rng = np.random.default_rng(config.seed)
    timelines: list[EventTimeline] = []
    labels: list[int] = []
    for i in range(config.n):
        age = float(np.clip(rng.normal(70.1, 13.9), 18.0, 100.0))
        sex = "F" if rng.random() < 0.464 else "M"
        eci = int(max(0, round(rng.normal(6.19, 2.98))))
        index_date = int(rng.integers(_INFECTION_FIRST, _INFECTION_LAST + 1))

        present = {
            code: bool(rng.random() < p) for code, p in config.prevalence.items()
        }
        present["loop-diuretic"] = bool(rng.random() < (0.55 if present.get("HFpEF") else 0.20))
        present["ACE-inhibitor"] = bool(rng.random() < (0.60 if present.get("HTN") else 0.25))

        events: list[TimelineEvent] = []
        for code in ("HTN", "CKD", "DM", "CAD", "HFpEF", "loop-diuretic", "ACE-inhibitor"):
            if present.get(code):
                for off in _pre_offsets(rng, int(rng.integers(1, 4))):
                    events.append(TimelineEvent(off, code))
        # medications persisting past the index date
        for code in ("loop-diuretic", "ACE-inhibitor"):
            if present.get(code) and rng.random() < 0.6:
                for _ in range(int(rng.integers(1, 3))):
                    events.append(TimelineEvent(int(rng.integers(0, 180)), code))

        present["creatinine"] = bool(rng.random() < 0.9)
        if present["creatinine"]:
            base = 1.0 + (0.5 if present.get("CKD") else 0.0)
            for off in _pre_offsets(rng, int(rng.integers(1, 4))):
                v = float(max(0.4, base + rng.normal(0.0, 0.15)))
                events.append(TimelineEvent(off, "creatinine", round(v, 2)))
            if rng.random() < 0.5:
                for _ in range(int(rng.integers(1, 3))):
                    v = float(max(0.4, base + rng.normal(0.0, 0.15)))
                    events.append(TimelineEvent(int(rng.integers(0, 180)), "creatinine", round(v, 2)))
        present["A1c"] = bool(rng.random() < 0.65)
        if present["A1c"]:
            base = 5.8 + (2.2 if present.get("DM") else 0.0)
            for off in _pre_offsets(rng, int(rng.integers(1, 3))):
                v = float(np.clip(base + rng.normal(0.0, 0.4), 4.5, 14.0))
                events.append(TimelineEvent(off, "A1c", round(v, 2)))

        score = config.intercept
        for code, coef in config.planted.items():
            if code == "age":
                score += coef * (age - 70.0)
            elif code == "eci":
                score += coef * (eci - 6.0)
            elif present.get(code):
                score += coef
        score += rng.normal(0.0, config.noise_sd) if config.noise_sd > 0 else 0.0
        label = int(rng.random() < expit(score))

        timelines.append(
            EventTimeline(
                patient_id=f"p{i:05d}",
                index_date=index_date,
                age=round(age, 1),
                sex=sex,
                eci=eci,
                events=tuple(events),
            )
        )
        labels.append(label)
    return timelines, labels


# ---------------------------------------------------------------------------
# Matching


@dataclass(frozen=True)
class MatchResult:
    controls: tuple[EventTimeline, ...]
    matched: dict  # case patient_id -> tuple of control patient_ids
    under_matched: tuple  # (case patient_id, n_found) for cases short of `ratio`


def match_controls(
    cases: Sequence[EventTimeline],
    pool: Sequence[EventTimeline],
    ratio: int = 6,
    age_bin: int = 10,
    eci_band: int = 2,
) -> MatchResult:
    """Greedy without-replacement matching on (age bin, sex, ECI band).

    For each case in order, up to `ratio` pool members from the same
    stratum are taken, nearest index date first, pool order on ties.
    Shortfalls are reported, never fatal.
    """
    if ratio < 1:
        raise ValueError("ratio must be >= 1")

    def stratum(t: EventTimeline):
        return (int(t.age // age_bin), t.sex, int(t.eci // eci_band))

    buckets: dict = {}
    for pos, t in enumerate(pool):
        buckets.setdefault(stratum(t), []).append((pos, t))

    used: set[int] = set()
    controls: list[EventTimeline] = []
    matched: dict = {}
    under: list = []
    for case in cases:
        candidates = [
            (abs(t.index_date - case.index_date), pos, t)
            for pos, t in buckets.get(stratum(case), [])
            if pos not in used
        ]
        candidates.sort(key=lambda c: (c[0], c[1]))
        take = candidates[:ratio]
        for _, pos, t in take:
            used.add(pos)
            controls.append(t)
        matched[case.patient_id] = tuple(t.patient_id for _, _, t in take)
        if len(take) < ratio:
            under.append((case.patient_id, len(take)))
    return MatchResult(tuple(controls), matched, tuple(under))


# ---------------------------------------------------------------------------
# Timeline JSON-lines I/O


def timeline_to_json(t: EventTimeline) -> dict:
    events = []
    for e in t.events:
        entry = {"offset": e.offset, "code": e.code}
        if e.value is not None:
            entry["value"] = e.value
        events.append(entry)
    return {
        "patient_id": t.patient_id,
        "index_date": t.index_date,
        "static": {"age": t.age, "sex": t.sex, "eci": t.eci},
        "events": events,
    }


def timeline_from_json(obj: dict) -> EventTimeline:
    return EventTimeline(
        patient_id=obj["patient_id"],
        index_date=int(obj["index_date"]),
        age=float(obj["static"]["age"]),
        sex=str(obj["static"]["sex"]),
        eci=int(obj["static"]["eci"]),
        events=tuple(
            TimelineEvent(int(e["offset"]), str(e["code"]), e.get("value"))
            for e in obj.get("events", [])
        ),
    )


def save_timelines(timelines: Sequence[EventTimeline], path, labels: Sequence[int] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, t in enumerate(timelines):
            obj = timeline_to_json(t)
            if labels is not None:
                obj["label"] = int(labels[i])
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def load_timelines(path) -> tuple[list[EventTimeline], list[int] | None]:
    timelines = []
    labels = []
    have_labels = True
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            timelines.append(timeline_from_json(obj))
            if "label" in obj:
                labels.append(int(obj["label"]))
            else:
                have_labels = False
    return timelines, (labels if have_labels and labels else None)
