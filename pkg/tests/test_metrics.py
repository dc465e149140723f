import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fedtsad.errors import UndefinedMetricError
from fedtsad.metrics import (MetricReport, auc_pr, best_f1_pointwise, composite_f1,
                             evaluate_scores, events_from_labels, ratio_report,
                             soft_labels, vus_pr, weighted_average_precision)


# ---------------------------------------------------------------------------
# brute-force oracles (deliberately naive, O(n^2))

def brute_best_f1(scores, labels):
    thetas = sorted(set(scores))
    f1s = []
    for theta in thetas:
        preds = np.asarray(scores) >= theta
        tp = int((preds & (labels == 1)).sum())
        fp = int((preds & (labels == 0)).sum())
        fn = int((~preds & (labels == 1)).sum())
        f1s.append(2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0)
    m = max(f1s)
    theta = min(t for t, f in zip(thetas, f1s) if f == m)
    return m, theta


def brute_average_precision(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    total = labels.sum()
    ap = 0.0
    prev_recall = 0.0
    for theta in sorted(set(scores), reverse=True):
        preds = scores >= theta
        tp = float((preds & (labels == 1)).sum())
        precision = tp / preds.sum()
        recall = tp / total
        ap += precision * (recall - prev_recall)
        prev_recall = recall
    return ap


def random_instance(rng, n_max=32):
    n = int(rng.integers(2, n_max + 1))
    labels = rng.integers(0, 2, size=n)
    if labels.sum() == 0:
        labels[int(rng.integers(0, n))] = 1
    # small integer grid forces plenty of tied scores
    scores = rng.integers(0, 6, size=n).astype(float) / 5.0
    return scores, labels


# ---------------------------------------------------------------------------


class TestEvents:
    def test_runs(self):
        assert events_from_labels(np.array([0, 1, 1, 0, 1])) == [(1, 3), (4, 5)]

    def test_empty(self):
        assert events_from_labels(np.zeros(4)) == []


class TestBestF1:
    def test_separable(self):
        f1, theta, p, r = best_f1_pointwise([.1, .2, .9, .8], [0, 0, 1, 1])
        assert f1 == 1.0 and theta == .8 and p == 1.0 and r == 1.0

    def test_sweep_case(self):
        f1, theta, _, _ = best_f1_pointwise([.9, .1, .8, .2], [0, 0, 1, 1])
        assert f1 == pytest.approx(0.8) and theta == pytest.approx(0.1)

    def test_all_positive_labels(self):
        scores = [0.3, 0.7, 0.5]
        f1, theta, _, _ = best_f1_pointwise(scores, [1, 1, 1])
        assert f1 == 1.0 and theta == min(scores)

    def test_no_positives_undefined(self):
        with pytest.raises(UndefinedMetricError):
            best_f1_pointwise([0.1, 0.2], [0, 0])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            scores, labels = random_instance(rng)
            f1, theta, _, _ = best_f1_pointwise(scores, labels)
            bf1, btheta = brute_best_f1(scores, labels)
            assert abs(f1 - bf1) < 1e-12
            assert theta == btheta


class TestCompositeF1:
    def test_partial_event_detection(self):
        # one point of a two-point event: precision 1, event recall 1
        val = composite_f1([0, 1, 0, 0], [0, 1, 1, 0], threshold=1)
        assert val == 1.0

    def test_single_point_events_collapse_to_pointwise(self):
        scores = np.array([.9, .1, .8, .2, .7])
        labels = np.array([1, 0, 0, 1, 0])
        for theta in np.unique(scores):
            preds = scores >= theta
            tp = int((preds & (labels == 1)).sum())
            fp = int((preds & (labels == 0)).sum())
            fn = int((~preds & (labels == 1)).sum())
            pointwise = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
            assert composite_f1(scores, labels, theta) == pytest.approx(pointwise)

    def test_perfect(self):
        assert composite_f1([0, 1, 1, 0], [0, 1, 1, 0], threshold=1) == 1.0

    def test_zero_predictions_convention(self):
        assert composite_f1([0, 0, 0], [0, 1, 0], threshold=1) == 0.0

    def test_boundaries_split_events(self):
        # one run across a series join is two events, one per series
        labels = np.array([1, 1, 1, 1])
        scores = np.array([1.0, 1.0, 0.0, 0.0])
        joined = composite_f1(scores, labels, 0.5, boundaries=[0, 2])
        # precision 1, event recall 1/2 -> f1c = 2/3
        assert joined == pytest.approx(2 / 3)


class TestAucPr:
    def test_perfect_ranking(self):
        assert auc_pr([.9, .8, .2, .1], [1, 1, 0, 0]) == 1.0

    def test_hand_stepped(self):
        assert auc_pr([.9, .8, .7], [1, 0, 1]) == pytest.approx(5 / 6, abs=1e-15)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            scores, labels = random_instance(rng)
            assert abs(auc_pr(scores, labels) - brute_average_precision(scores, labels)) < 1e-12


class TestSoftLabels:
    def test_decay_example(self):
        labels = np.zeros(10)
        labels[4:6] = 1  # event occupying indices 4 and 5
        soft = soft_labels(labels, ell=2)
        np.testing.assert_allclose(soft[[2, 3, 4, 5, 6, 7]], [1/3, 2/3, 1, 1, 2/3, 1/3])
        np.testing.assert_allclose(soft[[0, 1, 8, 9]], 0.0)

    def test_ell_zero_is_hard(self):
        labels = np.array([0, 1, 1, 0, 1, 0])
        np.testing.assert_array_equal(soft_labels(labels, 0), labels.astype(float))

    def test_overlap_takes_max(self):
        labels = np.array([1, 0, 0, 1])
        soft = soft_labels(labels, ell=3)
        np.testing.assert_allclose(soft, [1.0, 0.75, 0.75, 1.0])


class TestVusPr:
    def test_lmax_zero_equals_auc_pr(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            scores, labels = random_instance(rng)
            assert abs(vus_pr(scores, labels, lmax=0) - auc_pr(scores, labels)) < 1e-12

    def test_perfect_scorer_upper_bound(self):
        labels = np.zeros(40)
        labels[10:16] = 1
        scores = labels.astype(float)
        for lmax in (0, 3, 10):
            v = vus_pr(scores, labels, lmax=lmax)
            assert v <= 1.0 + 1e-12
            assert v >= auc_pr(scores, labels) - 1e-12

    def test_permutation_never_beats_perfect(self):
        rng = np.random.default_rng(21)
        labels = np.zeros(60)
        labels[20:30] = 1
        perfect = vus_pr(labels.astype(float), labels, lmax=5)
        worse = 0
        vals = []
        for _ in range(100):
            vals.append(vus_pr(rng.permutation(labels.astype(float)), labels, lmax=5))
        assert np.mean(vals) <= perfect
        assert max(vals) <= perfect + 1e-12


class TestMonotoneInvariance:
    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_strictly_increasing_transform(self, seed):
        rng = np.random.default_rng(seed)
        scores, labels = random_instance(rng)
        transformed = np.exp(3.0 * scores) + 1.0  # strictly increasing
        f1_a, _, _, _ = best_f1_pointwise(scores, labels)
        f1_b, _, _, _ = best_f1_pointwise(transformed, labels)
        assert f1_a == pytest.approx(f1_b, abs=1e-12)
        assert auc_pr(scores, labels) == pytest.approx(auc_pr(transformed, labels), abs=1e-12)
        assert vus_pr(scores, labels, 4) == pytest.approx(vus_pr(transformed, labels, 4), abs=1e-12)


class TestRatioReport:
    @staticmethod
    def rep(v):
        return MetricReport(v, v, v, v, 0.5)

    def test_identical_reports_give_unit_ratios(self):
        reports = {p: {("usad", "d1"): self.rep(0.4)} for p in ("cl", "fl", "hfl")}
        rows = ratio_report(reports)
        assert all(r.ratio == 1.0 for r in rows)

    def test_simple_arithmetic(self):
        reports = {"cl": {("m", "d"): self.rep(0.25)}, "fl": {("m", "d"): self.rep(0.5)}}
        rows = [r for r in ratio_report(reports) if r.paradigm == "fl"]
        assert all(r.ratio == pytest.approx(2.0) for r in rows)

    def test_cl_column_exactly_one(self):
        reports = {"cl": {("m", "d"): self.rep(0.123456)}, "fl": {("m", "d"): self.rep(0.3)}}
        assert all(r.ratio == 1.0 for r in ratio_report(reports) if r.paradigm == "cl")

    def test_zero_baseline_flagged(self):
        reports = {"cl": {("m", "d"): self.rep(0.0)}, "fl": {("m", "d"): self.rep(0.5)}}
        fl_rows = [r for r in ratio_report(reports) if r.paradigm == "fl"]
        assert all(r.ratio is None and r.note == "zero baseline" for r in fl_rows)

    def test_missing_pair_flagged(self):
        reports = {"cl": {("m", "d"): self.rep(0.5)}, "fl": {}}
        fl_rows = [r for r in ratio_report(reports) if r.paradigm == "fl"]
        assert all(r.ratio is None and r.note == "missing counterpart" for r in fl_rows)


class TestEvaluateScores:
    def test_report_fields(self):
        labels = np.zeros(30)
        labels[10:14] = 1
        scores = labels + np.linspace(0, 0.1, 30)
        rep = evaluate_scores(scores, labels, lmax=3, provenance={"seed": 1})
        assert rep.f1_pointwise == 1.0
        assert rep.f1_composite == 1.0
        assert rep.auc_pr == 1.0
        assert rep.provenance == {"seed": 1}

    def test_no_positives_reports_nulls(self):
        rep = evaluate_scores(np.arange(5.0), np.zeros(5))
        assert rep.f1_pointwise is None and rep.auc_pr is None and rep.vus_pr is None

    def test_duplication_preserves_metrics(self):
        rng = np.random.default_rng(1)
        labels = np.zeros(50)
        labels[20:26] = 1
        scores = labels * 2.0 + rng.normal(0, 0.4, 50)
        one = evaluate_scores(scores, labels, lmax=4)
        two = evaluate_scores(np.concatenate([scores, scores]),
                              np.concatenate([labels, labels]),
                              lmax=4, boundaries=[0, 50])
        assert two.f1_pointwise == pytest.approx(one.f1_pointwise, abs=1e-12)
        assert two.f1_composite == pytest.approx(one.f1_composite, abs=1e-12)
        assert two.auc_pr == pytest.approx(one.auc_pr, abs=1e-12)
        assert two.vus_pr == pytest.approx(one.vus_pr, abs=1e-12)
