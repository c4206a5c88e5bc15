import numpy as np
import pytest

from whatif.evaluation import (
    MetricError,
    auroc,
    bootstrap_ci,
    evaluate_scores,
    roc_points,
    save_roc_csv,
    youden_candidates,
    youden_threshold,
)


def pair_count_auroc(scores, labels):
    """Exhaustive positive/negative pair comparison."""
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = ties = 0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1
            elif p == n:
                ties += 1
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def brute_force_youden(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    best_j = -np.inf
    best_t = None
    for t in youden_candidates(scores):
        pred = scores >= t
        sens = np.sum(pred & (labels == 1)) / np.sum(labels == 1)
        spec = np.sum(~pred & (labels == 0)) / np.sum(labels == 0)
        if sens + spec - 1.0 > best_j:
            best_j = sens + spec - 1.0
            best_t = t
    return best_t, best_j


class TestAuroc:
    def test_perfect_ordering(self):
        # all 4 positive/negative pairs correctly ordered
        assert pair_count_auroc([0.2, 0.8, 0.4, 0.6], [0, 1, 0, 1]) == 1.0
        assert auroc([0.2, 0.8, 0.4, 0.6], [0, 1, 0, 1]) == 1.0

    def test_all_ties_half(self):
        assert auroc([0.5] * 6, [0, 1, 0, 1, 0, 1]) == pytest.approx(0.5)

    def test_sign_reversal_symmetry(self, rng):
        scores = rng.uniform(0, 1, 40)
        labels = rng.integers(0, 2, 40)
        labels[0], labels[1] = 0, 1
        a = auroc(scores, labels)
        assert auroc(-scores, labels) == pytest.approx(1.0 - a)

    def test_matches_pair_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(5, 60))
            scores = np.round(rng.uniform(0, 1, n), 2)  # induce ties
            labels = rng.integers(0, 2, n)
            labels[:2] = [0, 1]
            assert auroc(scores, labels) == pytest.approx(pair_count_auroc(scores, labels))

    def test_monotone_transform_invariance(self, rng):
        scores = rng.uniform(0, 1, 50)
        labels = rng.integers(0, 2, 50)
        labels[:2] = [0, 1]
        a = auroc(scores, labels)
        assert auroc(np.exp(3 * scores), labels) == pytest.approx(a)

    def test_single_class_errors(self):
        with pytest.raises(MetricError):
            auroc([0.1, 0.2], [1, 1])


class TestBootstrap:
    def test_perfect_separation_degenerate_interval(self):
        scores = [0.1, 0.2, 0.8, 0.9]
        labels = [0, 0, 1, 1]
        low, high = bootstrap_ci(scores, labels, n_boot=200, seed=0)
        assert (low, high) == (1.0, 1.0)

    def test_deterministic_given_seed(self, rng):
        scores = rng.uniform(0, 1, 60)
        labels = rng.integers(0, 2, 60)
        labels[:2] = [0, 1]
        assert bootstrap_ci(scores, labels, seed=9) == bootstrap_ci(scores, labels, seed=9)

    def test_duplication_shrinks_width(self):
        rng = np.random.default_rng(3)
        scores = np.concatenate([rng.normal(0.4, 0.15, 40), rng.normal(0.6, 0.15, 40)])
        labels = np.concatenate([np.zeros(40, int), np.ones(40, int)])
        widths_small, widths_big = [], []
        for seed in range(20):
            lo, hi = bootstrap_ci(scores, labels, n_boot=300, seed=seed)
            widths_small.append(hi - lo)
            lo, hi = bootstrap_ci(
                np.tile(scores, 2), np.tile(labels, 2), n_boot=300, seed=seed
            )
            widths_big.append(hi - lo)
        assert np.mean(widths_big) < np.mean(widths_small)

    def test_n_boot_floor(self):
        with pytest.raises(MetricError):
            bootstrap_ci([0.1, 0.9], [0, 1], n_boot=50)


class TestYouden:
    def test_separable_midpoint(self):
        scores = [0.1, 0.4, 0.6, 0.9]
        labels = [0, 0, 1, 1]
        t, sens, spec = youden_threshold(scores, labels)
        assert t == pytest.approx(0.5)
        assert sens == 1.0 and spec == 1.0

    def test_constant_scores_zero_j(self):
        t, sens, spec = youden_threshold([0.5] * 4, [0, 1, 0, 1])
        assert sens + spec - 1.0 == pytest.approx(0.0)

    def test_matches_brute_force(self, rng):
        for _ in range(100):
            n = int(rng.integers(4, 200))
            scores = np.round(rng.uniform(0, 1, n), 2)
            labels = rng.integers(0, 2, n)
            labels[:2] = [0, 1]
            t, sens, spec = youden_threshold(scores, labels)
            bt, bj = brute_force_youden(scores, labels)
            assert sens + spec - 1.0 == pytest.approx(bj, abs=1e-12)
            assert t == pytest.approx(bt)

    def test_tie_break_smallest_threshold(self):
        # every candidate threshold yields J = 0; smallest candidate is 0.0
        t, _, _ = youden_threshold([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1])
        assert t == 0.0


class TestRoc:
    def test_trace_and_monotone(self, rng):
        scores = rng.uniform(0, 1, 80)
        labels = rng.integers(0, 2, 80)
        labels[:2] = [0, 1]
        pts = roc_points(scores, labels)
        assert pts[0][:2] == (0.0, 0.0)
        assert pts[-1][:2] == (1.0, 1.0)
        fprs = [p[0] for p in pts]
        tprs = [p[1] for p in pts]
        assert all(a <= b for a, b in zip(fprs, fprs[1:]))
        assert all(a <= b for a, b in zip(tprs, tprs[1:]))

    def test_report_and_csv(self, tmp_path, rng):
        scores = rng.uniform(0, 1, 60)
        labels = rng.integers(0, 2, 60)
        labels[:2] = [0, 1]
        report = evaluate_scores(scores, labels, n_boot=200, seed=1)
        assert report.ci_low <= report.auroc <= report.ci_high
        path = tmp_path / "roc.csv"
        save_roc_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "fpr,tpr,threshold"
        assert len(lines) == len(report.roc_points) + 1
