"""Imbalanced-classification metrics: confusion counts, precision/recall/F1
in per-class, macro and weighted forms, accuracy, and rank-based ROC-AUC.

Zero-denominator rates are reported as 0.0 with a degeneracy flag rather
than NaN, so a collapsed classifier still yields a complete report.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int
    threshold: float = 0.5

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    def as_table(self) -> str:
        w = max(len(str(v)) for v in (self.tn, self.fp, self.fn, self.tp))
        return (
            f"{'':>8} {'pred 0':>{w + 2}} {'pred 1':>{w + 2}}\n"
            f"{'true 0':>8} {self.tn:>{w + 2}} {self.fp:>{w + 2}}\n"
            f"{'true 1':>8} {self.fn:>{w + 2}} {self.tp:>{w + 2}}"
        )

    def to_dict(self) -> dict:
        return {"tn": self.tn, "fp": self.fp, "fn": self.fn, "tp": self.tp,
                "threshold": self.threshold}


def confusion(labels, probabilities, threshold: float = 0.5) -> ConfusionMatrix:
    """Count outcomes with the >= threshold decision rule."""
    labels = np.asarray(labels)
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if labels.shape != probabilities.shape:
        raise ValueError(
            f"length mismatch: {labels.shape} labels vs {probabilities.shape} scores"
        )
    pred = probabilities >= threshold
    pos = labels == 1
    return ConfusionMatrix(
        tn=int((~pos & ~pred).sum()),
        fp=int((~pos & pred).sum()),
        fn=int((pos & ~pred).sum()),
        tp=int((pos & pred).sum()),
        threshold=threshold,
    )


def _safe_div(num: float, den: float) -> tuple[float, bool]:
    if den == 0:
        return 0.0, True
    return num / den, False


@dataclass
class MetricsReport:
    confusion: ConfusionMatrix
    accuracy: float
    precision: dict                 # class label -> rate
    recall: dict
    f1: dict
    macro: dict                     # metric name -> rate
    weighted: dict
    roc_auc: float | None = None
    degenerate: bool = False
    model_id: str = ""
    config: dict = field(default_factory=dict)
    in_sample: bool = False

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "confusion": self.confusion.to_dict(),
            "accuracy": self.accuracy,
            "precision": {str(k): v for k, v in self.precision.items()},
            "recall": {str(k): v for k, v in self.recall.items()},
            "f1": {str(k): v for k, v in self.f1.items()},
            "macro": self.macro,
            "weighted": self.weighted,
            "roc_auc": self.roc_auc,
            "degenerate": self.degenerate,
            "in_sample": self.in_sample,
            "config": self.config,
        }


def prf1(cm: ConfusionMatrix) -> MetricsReport:
    """Per-class precision/recall/F1 plus accuracy and macro/weighted means."""
    support = {0: cm.tn + cm.fp, 1: cm.fn + cm.tp}
    degenerate = False
    precision, recall, f1 = {}, {}, {}
    for cls, tp_c, fp_c, fn_c in (
        (0, cm.tn, cm.fn, cm.fp),
        (1, cm.tp, cm.fp, cm.fn),
    ):
        p, d1 = _safe_div(tp_c, tp_c + fp_c)
        r, d2 = _safe_div(tp_c, tp_c + fn_c)
        f, d3 = _safe_div(2 * p * r, p + r)
        degenerate = degenerate or d1 or d2 or d3
        precision[cls], recall[cls], f1[cls] = p, r, f
    n = cm.total
    accuracy = (cm.tn + cm.tp) / n if n else 0.0
    macro = {
        "precision": (precision[0] + precision[1]) / 2,
        "recall": (recall[0] + recall[1]) / 2,
        "f1": (f1[0] + f1[1]) / 2,
    }
    weighted = {
        name: (support[0] * vals[0] + support[1] * vals[1]) / n if n else 0.0
        for name, vals in (("precision", precision), ("recall", recall), ("f1", f1))
    }
    return MetricsReport(
        confusion=cm,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        macro=macro,
        weighted=weighted,
        degenerate=degenerate,
    )


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank range."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(labels, scores) -> float:
    """Rank-statistic AUC: P(score+ > score-) + half the tie probability."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = _average_ranks(scores)
    rank_sum = ranks[labels == 1].sum()
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(labels, scores) -> np.ndarray:
    """(fpr, tpr) points from (0,0) to (1,1), one step per score threshold."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC curve needs both classes present")
    order = np.argsort(-scores, kind="stable")
    y = labels[order]
    s = scores[order]
    tp = np.cumsum(y == 1)
    fp = np.cumsum(y == 0)
    # keep only the last point of each tied-score block
    keep = np.append(s[1:] != s[:-1], True)
    points = np.column_stack([fp[keep] / n_neg, tp[keep] / n_pos])
    return np.vstack([[0.0, 0.0], points])


def trapezoid_auc(curve: np.ndarray) -> float:
    fpr, tpr = curve[:, 0], curve[:, 1]
    return float(0.5 * np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1])))


def evaluate_scores(labels, scores, threshold: float = 0.5, model_id: str = "",
                    config: dict | None = None, in_sample: bool = False) -> MetricsReport:
    """Full report for one model's scores on one labeled set."""
    report = prf1(confusion(labels, scores, threshold))
    try:
        report.roc_auc = roc_auc(labels, scores)
    except ValueError:
        report.roc_auc = None
    report.model_id = model_id
    report.config = config or {}
    report.in_sample = in_sample
    return report
