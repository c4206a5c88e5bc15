import numpy as np
import pytest
from scipy.special import expit

from whatif.cohort import (
    CohortConfig,
    EventTimeline,
    TimelineEvent,
    WindowSpec,
    build_dataset,
    feature_names,
    featurize,
    generate_cohort,
    load_timelines,
    match_controls,
    save_timelines,
)
from whatif.schema import identify_binary_features

SPEC = WindowSpec()


def timeline(events=(), age=70.0, sex="F", eci=6, pid="p0", index_date=18500):
    return EventTimeline(
        patient_id=pid, index_date=index_date, age=age, sex=sex, eci=eci, events=tuple(events)
    )


def cell(row, name):
    return row[feature_names(SPEC).index(name)]


class TestFeaturize:
    def test_empty_timeline_zeros_and_statics(self):
        row = featurize(timeline(), SPEC)
        names = feature_names(SPEC)
        for name, value in zip(names, row):
            if name == "age":
                assert value == 70.0
            elif name == "sex":
                assert value == "F"
            elif name == "eci":
                assert value == 6
            else:
                assert value == 0

    def test_single_diagnosis_presence_and_count(self):
        row = featurize(timeline([TimelineEvent(-30, "HTN")]), SPEC)
        assert cell(row, "HTN__-365to0__presence") == 1

    def test_counts_for_medications(self):
        evs = [TimelineEvent(-30, "loop-diuretic"), TimelineEvent(-10, "loop-diuretic")]
        row = featurize(timeline(evs), SPEC)
        assert cell(row, "loop-diuretic__-365to0__count") == 2
        assert cell(row, "loop-diuretic__-365to0__presence") == 1

    def test_last_value_takes_latest(self):
        evs = [TimelineEvent(-60, "creatinine", 1.3), TimelineEvent(-10, "creatinine", 1.8)]
        row = featurize(timeline(evs), SPEC)
        assert cell(row, "creatinine__-365to0__last_value") == pytest.approx(1.8)

    def test_window_half_open(self):
        # offset 0 belongs to the post window, offset -365 to the pre window
        evs = [TimelineEvent(0, "creatinine", 2.0), TimelineEvent(-365, "creatinine", 1.0)]
        row = featurize(timeline(evs), SPEC)
        assert cell(row, "creatinine__-365to0__presence") == 1
        assert cell(row, "creatinine__0to180__presence") == 1
        assert cell(row, "creatinine__-365to0__last_value") == pytest.approx(1.0)
        assert cell(row, "creatinine__0to180__last_value") == pytest.approx(2.0)

    def test_unknown_codes_ignored(self):
        row = featurize(timeline([TimelineEvent(-5, "mystery")]), SPEC)
        base = featurize(timeline(), SPEC)
        assert row == base

    def test_deterministic_column_order(self):
        names = feature_names(SPEC)
        event_names = names[: -len("age sex eci".split())]
        assert event_names == sorted(event_names)

    def test_windows_validated(self):
        with pytest.raises(ValueError):
            WindowSpec(windows=((10, 10),))
        with pytest.raises(ValueError):
            WindowSpec(windows=())


class TestGenerator:
    def test_moment_calibration_over_seeds(self):
        ages, females = [], []
        for seed in range(5):
            timelines, _ = generate_cohort(CohortConfig(n=2744, seed=seed))
            ages.append(np.mean([t.age for t in timelines]))
            females.append(np.mean([t.sex == "F" for t in timelines]))
        assert abs(np.mean(ages) - 70.1) < 1.5
        assert abs(np.mean(females) - 0.464) < 0.03

    def test_zero_coefficients_hit_base_rate(self):
        cfg = CohortConfig(n=2744, seed=3, intercept=-1.2, planted={}, noise_sd=0.0)
        _, labels = generate_cohort(cfg)
        rate = np.mean(labels)
        p = float(expit(-1.2))
        sigma = np.sqrt(p * (1 - p) / len(labels))
        assert abs(rate - p) <= 3 * sigma

    def test_planted_coefficient_creates_risk_gap(self):
        gaps = []
        for seed in range(10):
            cfg = CohortConfig(n=1000, seed=seed, planted={"HTN": 3.0}, intercept=-2.0)
            timelines, labels = generate_cohort(cfg)
            has = [y for t, y in zip(timelines, labels) if any(e.code == "HTN" for e in t.events)]
            not_has = [y for t, y in zip(timelines, labels) if not any(e.code == "HTN" for e in t.events)]
            gaps.append(np.mean(has) - np.mean(not_has))
        assert min(gaps) > 0.2

    def test_binary_set_nonempty_on_defaults(self):
        timelines, labels = generate_cohort(CohortConfig(n=300, seed=1))
        ds = build_dataset(timelines, labels)
        assert identify_binary_features(ds)

    def test_deterministic(self):
        a = generate_cohort(CohortConfig(n=50, seed=9))
        b = generate_cohort(CohortConfig(n=50, seed=9))
        assert a == b

    def test_minimum_size(self):
        with pytest.raises(ValueError):
            CohortConfig(n=5)


class TestMatching:
    def test_ratio_respected(self):
        timelines, labels = generate_cohort(CohortConfig(n=600, seed=2))
        cases = [t for t, y in zip(timelines, labels) if y == 1]
        pool = [t for t, y in zip(timelines, labels) if y == 0]
        result = match_controls(cases, pool, ratio=6)
        assert all(len(v) <= 6 for v in result.matched.values())

    def test_without_replacement(self):
        timelines, labels = generate_cohort(CohortConfig(n=600, seed=4))
        cases = [t for t, y in zip(timelines, labels) if y == 1]
        pool = [t for t, y in zip(timelines, labels) if y == 0]
        result = match_controls(cases, pool, ratio=6)
        ids = [t.patient_id for t in result.controls]
        assert len(ids) == len(set(ids))

    def test_self_duplicates_matched_first(self):
        cases = [timeline(pid="c0", age=71, sex="F", eci=6, index_date=18500)]
        pool = [
            timeline(pid="dup", age=71, sex="F", eci=6, index_date=18500),
            timeline(pid="far", age=71, sex="F", eci=6, index_date=18900),
        ]
        result = match_controls(cases, pool, ratio=1)
        assert result.matched["c0"] == ("dup",)

    def test_empty_pool_reports_all_undermatched(self):
        cases = [timeline(pid="c0"), timeline(pid="c1")]
        result = match_controls(cases, [], ratio=6)
        assert result.controls == ()
        assert {c for c, _ in result.under_matched} == {"c0", "c1"}

    def test_stratum_boundaries(self):
        # age 69 vs 70 straddle a decade boundary; eci 5 vs 6 straddle a band
        case = timeline(pid="c", age=69.0, eci=5)
        other_decade = timeline(pid="od", age=70.0, eci=5)
        other_band = timeline(pid="ob", age=69.0, eci=6)
        same = timeline(pid="s", age=65.0, eci=4)
        result = match_controls([case], [other_decade, other_band, same], ratio=3)
        assert result.matched["c"] == ("s",)


class TestTimelineIO:
    def test_jsonl_roundtrip(self, tmp_path):
        timelines, labels = generate_cohort(CohortConfig(n=30, seed=6))
        path = tmp_path / "t.jsonl"
        save_timelines(timelines, path, labels)
        again, again_labels = load_timelines(path)
        assert again == timelines
        assert again_labels == labels

    def test_eci_invariant(self):
        with pytest.raises(ValueError):
            timeline(eci=-1)

    def test_events_sorted_on_construction(self):
        t = timeline([TimelineEvent(-10, "HTN"), TimelineEvent(-200, "HTN")])
        offsets = [e.offset for e in t.events]
        assert offsets == sorted(offsets)
