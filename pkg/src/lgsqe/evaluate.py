"""Scoring aggregation: confusion metrics, PR-AUC, histograms, filtering.

The positive class is "generated" (label 1); a sample with soft score
d >= t is predicted generated. Smaller scores indicate more realistic
samples, so quality filtering keeps the ascending-score prefix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

REPORT_VERSION = "1.0.0"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(scores: np.ndarray, labels: np.ndarray, threshold: float) -> ConfusionCounts:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise GeometryError("scores and labels must have identical shape")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    predicted = scores >= threshold
    actual = labels == 1
    return ConfusionCounts(
        tp=int(np.sum(predicted & actual)),
        fp=int(np.sum(predicted & ~actual)),
        tn=int(np.sum(~predicted & ~actual)),
        fn=int(np.sum(~predicted & actual)),
    )


def accuracy(counts: ConfusionCounts) -> float:
    return (counts.tp + counts.tn) / counts.total


def precision(counts: ConfusionCounts) -> float | None:
    """TP/(TP+FP); None when nothing was predicted positive."""
    denom = counts.tp + counts.fp
    return counts.tp / denom if denom else None


def recall(counts: ConfusionCounts) -> float | None:
    """TP/(TP+FN); None when no positives exist."""
    denom = counts.tp + counts.fn
    return counts.tp / denom if denom else None


def _pr_points(scores: np.ndarray, labels: np.ndarray) -> list[tuple[float, float]]:
    """(recall, precision) pairs swept over descending thresholds.

    Thresholds are the distinct score values plus {0, 1}. Points with an
    undefined precision are dropped; the first valid precision is extended
    flat to recall zero so the trapezoid covers [0, max recall].
    """
    thresholds = np.unique(np.concatenate([scores, [0.0, 1.0]]))[::-1]
    positives = int(np.sum(labels == 1))
    points: list[tuple[float, float]] = []
    for t in thresholds:
        predicted = scores >= t
        tp = int(np.sum(predicted & (labels == 1)))
        pp = int(predicted.sum())
        if pp == 0:
            continue
        points.append((tp / positives, tp / pp))
    if points:
        points.insert(0, (0.0, points[0][1]))
    return points


def pr_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Trapezoidal area under the precision-recall curve."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n1 = int(np.sum(labels == 1))
    if n1 == 0 or n1 == labels.size:
        raise ValueError("both classes must be present")
    points = _pr_points(scores, labels)
    area = 0.0
    for (r0, p0), (r1, p1) in zip(points[:-1], points[1:]):
        area += (r1 - r0) * (p1 + p0) / 2.0
    return area


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-statistic ROC-AUC (emitted for diagnostics, distinct from PR-AUC)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("both classes must be present")
    merged = np.concatenate([neg, pos])
    _, inverse, counts = np.unique(merged, return_inverse=True, return_counts=True)
    group_starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    midranks = (group_starts + (counts + 1) / 2.0)[inverse]
    u = midranks[neg.size :].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def score_histogram(scores: np.ndarray, provenance: np.ndarray, bins: int = 50) -> dict:
    """Uniform [0, 1] histogram with separate real/generated counts."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    scores = np.asarray(scores, dtype=np.float64)
    provenance = np.asarray(provenance)
    edges = np.linspace(0.0, 1.0, bins + 1)
    real_counts, _ = np.histogram(scores[provenance == 0], bins=edges)
    gen_counts, _ = np.histogram(scores[provenance == 1], bins=edges)
    return {
        "bin_edges": edges.tolist(),
        "real": real_counts.tolist(),
        "generated": gen_counts.tolist(),
    }


def filter_samples(sample_ids: np.ndarray, scores: np.ndarray, keep_fraction: float) -> np.ndarray:
    """Keep the floor(keep_fraction * n) ids with the smallest scores.

    Ties break by sample id; output is ordered by ascending score.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    sample_ids = np.asarray(sample_ids)
    scores = np.asarray(scores, dtype=np.float64)
    if sample_ids.shape != scores.shape:
        raise GeometryError("sample_ids and scores must have identical shape")
    keep = int(keep_fraction * sample_ids.size)
    order = np.lexsort((sample_ids, scores))
    return sample_ids[order[:keep]]


@dataclass(eq=False)
class EvaluationReport:
    """Model-level metrics plus score histograms and run metadata."""

    counts: ConfusionCounts
    accuracy: float
    precision: float | None
    recall: float | None
    pr_auc: float
    roc_auc: float
    threshold: float
    histogram: dict
    metadata: dict = field(default_factory=dict)
    version: str = REPORT_VERSION

    def to_dict(self) -> dict:
        return {
            "format_version": self.version,
            "counts": {"tp": self.counts.tp, "fp": self.counts.fp, "tn": self.counts.tn, "fn": self.counts.fn},
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "pr_auc": self.pr_auc,
            "roc_auc": self.roc_auc,
            "threshold": self.threshold,
            "histogram": self.histogram,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvaluationReport":
        counts = ConfusionCounts(**doc["counts"])
        return cls(
            counts=counts,
            accuracy=doc["accuracy"],
            precision=doc["precision"],
            recall=doc["recall"],
            pr_auc=doc["pr_auc"],
            roc_auc=doc["roc_auc"],
            threshold=doc["threshold"],
            histogram=doc["histogram"],
            metadata=doc.get("metadata", {}),
            version=doc["format_version"],
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def aggregate_report(
    scores: np.ndarray,
    labels: np.ndarray,
    threshold: float = 0.5,
    bins: int = 50,
    metadata: dict | None = None,
) -> EvaluationReport:
    """Assemble all metrics into one report; labels double as provenance."""
    counts = confusion(scores, labels, threshold)
    return EvaluationReport(
        counts=counts,
        accuracy=accuracy(counts),
        precision=precision(counts),
        recall=recall(counts),
        pr_auc=pr_auc(scores, labels),
        roc_auc=roc_auc(scores, labels),
        threshold=threshold,
        histogram=score_histogram(scores, labels, bins),
        metadata=metadata or {},
    )


def write_scores_csv(path, sample_ids, provenance, scores) -> None:
    """Rows of (sample_id, provenance, score) with scores at 6 decimals."""
    with open(path, "w", newline="") as fh:
        fh.write("sample_id,provenance,score\n")
        for sid, prov, score in zip(sample_ids, provenance, scores):
            fh.write(f"{sid},{prov},{score:.6f}\n")


def histogram_svg(histogram: dict, width: int = 640, height: int = 320) -> str:
    """Minimal two-series bar chart of the score histogram."""
    edges = histogram["bin_edges"]
    series = [("real", histogram["real"], "#4878cf"), ("generated", histogram["generated"], "#d65f5f")]
    peak = max(max(counts) if counts else 0 for _, counts, _ in series) or 1
    margin, plot_w, plot_h = 40, width - 60, height - 60
    bar_w = plot_w / (len(edges) - 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{margin + plot_h}" x2="{margin + plot_w}" y2="{margin + plot_h}" stroke="black"/>',
    ]
    for s_idx, (name, counts, color) in enumerate(series):
        for b_idx, count in enumerate(counts):
            bar_h = plot_h * count / peak
            x = margin + b_idx * bar_w + s_idx * bar_w / 2
            y = margin + plot_h - bar_h
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w / 2:.2f}" height="{bar_h:.2f}" '
                f'fill="{color}" fill-opacity="0.8"/>'
            )
        parts.append(
            f'<text x="{margin + plot_w - 100}" y="{margin / 2 + 12 * s_idx}" fill="{color}" '
            f'font-size="12">{name}</text>'
        )
    parts.append(f'<text x="{margin}" y="{height - 8}" font-size="12">soft score 0..1</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
