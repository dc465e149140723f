"""Evaluation suite: point-wise F1, composite F1, AUC-PR, and VUS-PR.

All four metrics operate on per-timestep real scores aligned with binary
labels and depend only on the score ordering (invariant under strictly
increasing transforms). Undefined metrics (no positive labels) raise
:class:`UndefinedMetricError`; reporting layers record them as nulls,
never as zero.

When scores come from several independent series, pass ``boundaries``
(the start offset of each series in the concatenated arrays) so that
anomaly events and tolerance buffers never bleed across series joins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ShapeError, UndefinedMetricError


def events_from_labels(labels: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of consecutive positive labels as half-open [start, stop)."""
    lab = np.asarray(labels).astype(bool)
    if lab.ndim != 1:
        raise ShapeError("labels must be 1-D")
    padded = np.concatenate(([False], lab, [False]))
    d = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    stops = np.flatnonzero(d == -1)
    return list(zip(starts.tolist(), stops.tolist()))


def _check_pair(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or labels.ndim != 1 or scores.size != labels.size:
        raise ShapeError(f"scores/labels must be equal-length 1-D, got {scores.shape} vs {labels.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    return scores, labels.astype(bool)


def _segment_slices(n: int, boundaries: Sequence[int] | None) -> list[slice]:
    if boundaries is None:
        return [slice(0, n)]
    edges = sorted(set(int(b) for b in boundaries) | {0}) + [n]
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def best_f1_pointwise(scores, labels) -> tuple[float, float, float, float]:
    """Max F1 over thresholds drawn from the unique score values.

    Prediction rule is ``score >= threshold``. Returns
    (f1, threshold, precision, recall) with the lowest threshold among
    ties. No point-adjustment of any kind is applied.
    """
    scores, labels = _check_pair(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise UndefinedMetricError("point-wise F1 undefined without positive labels")
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    l_sorted = labels[order].astype(np.float64)
    # block ends: last index of each group of tied scores
    block_end = np.flatnonzero(np.diff(s_sorted) != 0)
    block_end = np.concatenate([block_end, [s_sorted.size - 1]])
    tp = np.cumsum(l_sorted)[block_end]
    pp = block_end + 1.0
    precision = tp / pp
    recall = tp / n_pos
    denom = pp + n_pos  # 2tp + fp + fn
    f1 = np.where(denom > 0, 2.0 * tp / denom, 0.0)
    best = float(f1.max())
    # lowest threshold achieving the max: last block in descending order
    idx = int(np.flatnonzero(f1 == best)[-1])
    return best, float(s_sorted[block_end[idx]]), float(precision[idx]), float(recall[idx])


def composite_f1(scores, labels, threshold: float,
                 boundaries: Sequence[int] | None = None) -> float:
    """Harmonic mean of point-wise precision and event-wise recall.

    An event counts as recalled if at least one of its points is
    predicted positive. Zero predicted positives yield 0 by convention.
    """
    scores, labels = _check_pair(scores, labels)
    preds = scores >= threshold
    events: list[tuple[int, int]] = []
    for sl in _segment_slices(labels.size, boundaries):
        events += [(sl.start + a, sl.start + b) for a, b in events_from_labels(labels[sl])]
    if not events:
        raise UndefinedMetricError("composite F1 undefined without events")
    n_pred = int(preds.sum())
    if n_pred == 0:
        return 0.0
    precision = float((preds & labels).sum()) / n_pred
    recalled = sum(1 for a, b in events if preds[a:b].any())
    event_recall = recalled / len(events)
    if precision + event_recall == 0.0:
        return 0.0
    return 2.0 * precision * event_recall / (precision + event_recall)


def weighted_average_precision(scores: np.ndarray, pos_mass: np.ndarray) -> float:
    """Average precision with fractional positive mass per point.

    True-positive and false-negative mass are fractional (a predicted
    point contributes its mass to TP, an unpredicted one to FN); only
    zero-mass points count as whole false positives. With binary mass
    this is classic average precision; with buffered soft labels a
    scorer that ranks buffer points immediately after event points keeps
    precision at 1 and attains the upper bound of 1.
    """
    scores = np.asarray(scores, dtype=np.float64)
    pos_mass = np.asarray(pos_mass, dtype=np.float64)
    total = pos_mass.sum()
    if total <= 0.0:
        raise UndefinedMetricError("average precision undefined without positive mass")
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    m_sorted = pos_mass[order]
    block_end = np.flatnonzero(np.diff(s_sorted) != 0)
    block_end = np.concatenate([block_end, [s_sorted.size - 1]])
    tp = np.cumsum(m_sorted)[block_end]
    fp = np.cumsum(m_sorted == 0.0)[block_end]
    precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
    recall = tp / total
    steps = np.diff(np.concatenate([[0.0], recall]))
    return float(np.sum(precision * steps))


def auc_pr(scores, labels) -> float:
    """Area under the precision-recall curve (average precision)."""
    scores, labels = _check_pair(scores, labels)
    if not labels.any():
        raise UndefinedMetricError("AUC-PR undefined without positive labels")
    return weighted_average_precision(scores, labels.astype(np.float64))


def soft_labels(labels: np.ndarray, ell: int) -> np.ndarray:
    """Tolerance-buffered labels: 1 inside events, linear decay outside.

    A point at distance dist from the nearest event carries mass
    max(0, 1 - dist/(ell+1)); overlapping buffers take the max
    (equivalently the nearest-event distance).
    """
    lab = np.asarray(labels).astype(bool)
    n = lab.size
    idx = np.flatnonzero(lab)
    if idx.size == 0:
        return np.zeros(n)
    pos = np.arange(n)
    j = np.searchsorted(idx, pos)
    right = np.where(j < idx.size, idx[np.minimum(j, idx.size - 1)] - pos, np.inf)
    left = np.where(j > 0, pos - idx[np.maximum(j - 1, 0)], np.inf)
    dist = np.minimum(left, right)
    soft = 1.0 - dist / (ell + 1.0)
    return np.where(np.isfinite(soft), np.clip(soft, 0.0, 1.0), 0.0)


def vus_pr(scores, labels, lmax: int = 10,
           boundaries: Sequence[int] | None = None) -> float:
    """Mean weighted average precision over tolerance buffers 0..lmax.

    Simplified volume-under-surface variant: for each buffer width the
    hard labels are softened by :func:`soft_labels` (per series segment)
    and scored with :func:`weighted_average_precision`; the volume is the
    uniform mean over buffer widths. ``lmax=0`` reduces exactly to
    :func:`auc_pr`.
    """
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    scores, labels = _check_pair(scores, labels)
    if not labels.any():
        raise UndefinedMetricError("VUS-PR undefined without positive labels")
    slices = _segment_slices(labels.size, boundaries)
    values = []
    for ell in range(lmax + 1):
        mass = np.empty(labels.size)
        for sl in slices:
            mass[sl] = soft_labels(labels[sl], ell)
        values.append(weighted_average_precision(scores, mass))
    return float(np.mean(values))


@dataclass
class MetricReport:
    """The four metric values plus the chosen threshold and provenance."""

    f1_pointwise: float | None
    f1_composite: float | None
    auc_pr: float | None
    vus_pr: float | None
    best_threshold: float | None = None
    provenance: dict = field(default_factory=dict)

    METRICS = ("f1_pointwise", "f1_composite", "auc_pr", "vus_pr")

    def value(self, metric: str) -> float | None:
        if metric not in self.METRICS:
            raise KeyError(metric)
        return getattr(self, metric)

    def as_items(self) -> list[tuple[str, float | None]]:
        return ([(m, self.value(m)) for m in self.METRICS]
                + [("best_threshold", self.best_threshold)])


def evaluate_scores(scores, labels, lmax: int = 10,
                    boundaries: Sequence[int] | None = None,
                    provenance: dict | None = None) -> MetricReport:
    """Compute the full four-metric report for one score series."""
    scores, labels = _check_pair(scores, labels)
    if not labels.any():
        return MetricReport(None, None, None, None, None, provenance or {})
    f1, threshold, _, _ = best_f1_pointwise(scores, labels)
    return MetricReport(
        f1_pointwise=f1,
        f1_composite=composite_f1(scores, labels, threshold, boundaries),
        auc_pr=auc_pr(scores, labels),
        vus_pr=vus_pr(scores, labels, lmax, boundaries),
        best_threshold=threshold,
        provenance=provenance or {},
    )


@dataclass(frozen=True)
class RatioRow:
    method: str
    dataset: str
    metric: str
    paradigm: str
    ratio: float | None
    note: str = ""


def ratio_report(reports: dict[str, dict[tuple[str, str], MetricReport]],
                 baseline: str = "cl") -> list[RatioRow]:
    """Relative performance vs the centralized baseline.

    ``reports`` maps paradigm -> {(method, dataset) -> MetricReport}.
    Every (method, dataset, metric) present in the baseline produces one
    row per paradigm with ratio = value / baseline value; the baseline's
    own column is exactly 1.0. Missing counterparts and zero baselines
    are flagged instead of silently dropped.
    """
    if baseline not in reports:
        raise KeyError(f"baseline paradigm '{baseline}' missing from reports")
    rows: list[RatioRow] = []
    base = reports[baseline]
    for (method, dataset), base_rep in sorted(base.items()):
        for metric in MetricReport.METRICS:
            base_val = base_rep.value(metric)
            for paradigm in sorted(reports):
                rep = reports[paradigm].get((method, dataset))
                if rep is None:
                    rows.append(RatioRow(method, dataset, metric, paradigm, None,
                                         "missing counterpart"))
                    continue
                val = rep.value(metric)
                if base_val is None or val is None:
                    rows.append(RatioRow(method, dataset, metric, paradigm, None,
                                         "undefined metric"))
                elif paradigm == baseline:
                    rows.append(RatioRow(method, dataset, metric, paradigm, 1.0))
                elif base_val == 0.0:
                    rows.append(RatioRow(method, dataset, metric, paradigm, None,
                                         "zero baseline"))
                else:
                    rows.append(RatioRow(method, dataset, metric, paradigm, val / base_val))
    return rows
