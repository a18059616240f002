"""Evaluation metrics: accuracy, rank-based AUC, scatter, class-mean distances."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .simplex import SimplexCenters


def closed_set_accuracy(predictions, truth) -> float:
    """Fraction of exact label matches; rejected samples count as errors."""
    predictions = np.asarray(predictions, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predictions.shape != truth.shape:
        raise ValueError("prediction/truth length mismatch")
    if predictions.size == 0:
        raise ValueError("cannot compute accuracy of an empty batch")
    return float(np.mean(predictions == truth))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their group's average rank."""
    uniq, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    high = np.cumsum(counts)
    avg = high - (counts - 1) / 2.0
    return avg[inverse]


def auc_roc(known_scores, unknown_scores) -> float:
    """P(unknown score > known score) with ties half-credited.

    Scores follow the convention higher = more unknown; unknown is the
    positive class.  Computed from average ranks, which equals brute-force
    pair counting exactly.
    """
    known = np.asarray(known_scores, dtype=np.float64).ravel()
    unknown = np.asarray(unknown_scores, dtype=np.float64).ravel()
    if known.size == 0 or unknown.size == 0:
        raise ValueError("both score sets must be nonempty")
    if not (np.all(np.isfinite(known)) and np.all(np.isfinite(unknown))):
        raise ValueError("scores must be finite")
    combined = np.concatenate([unknown, known])
    ranks = _average_ranks(combined)
    u_stat = ranks[: unknown.size].sum() - unknown.size * (unknown.size + 1) / 2.0
    return float(u_stat / (unknown.size * known.size))


def scatter_stats(features, labels, centers: SimplexCenters) -> np.ndarray:
    """Per-class mean squared distance to the own center.

    Returns one value per class; classes with no samples get nan rather
    than zero.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if np.any(labels < 0) or np.any(labels >= centers.num_classes):
        raise ValueError("labels out of range for the given centers")
    out = np.full(centers.num_classes, np.nan)
    sq = np.sum((features - centers.centers[labels]) ** 2, axis=1)
    for cls in range(centers.num_classes):
        mask = labels == cls
        if np.any(mask):
            out[cls] = sq[mask].mean()
    return out


def center_distance_matrix(features, labels) -> tuple[list[int], np.ndarray]:
    """Pairwise Euclidean distances between empirical class means.

    Returns (class_ids, matrix) where matrix[a, b] is the distance between
    the means of class_ids[a] and class_ids[b].  Classes without samples
    are excluded with a warning.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    all_ids = range(int(labels.max()) + 1) if labels.size else []
    ids, means = [], []
    for cls in all_ids:
        mask = labels == cls
        if not np.any(mask):
            warnings.warn(f"class {cls} has no samples; excluded from distance matrix",
                          stacklevel=2)
            continue
        ids.append(int(cls))
        means.append(features[mask].mean(axis=0))
    means = np.asarray(means)
    diff = means[:, None, :] - means[None, :, :]
    matrix = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(matrix, 0.0)
    return ids, matrix


@dataclass
class EvalReport:
    """Bundle of evaluation results, serializable as JSON.

    auc fields stay None for closed-set-only runs.  score_orientation
    records the AUC sign convention to keep downstream plots honest.
    """

    closed_accuracy: float
    auc: float | None = None
    per_trial_auc: list[float] | None = None
    auc_std: float | None = None
    per_trial_accuracy: list[float] | None = None
    accuracy_std: float | None = None
    per_class_scatter: list[float] | None = None
    center_distance_ids: list[int] | None = None
    center_distances: list[list[float]] | None = None
    score_orientation: str = "higher score = more unknown; unknown is positive class"
    extra: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        doc = {
            "closed_accuracy": self.closed_accuracy,
            "score_orientation": self.score_orientation,
        }
        if self.per_class_scatter is not None:
            doc["per_class_scatter"] = self.per_class_scatter
        if self.auc is not None:
            doc["auc"] = self.auc
            doc["auc_std"] = self.auc_std
            doc["per_trial_auc"] = self.per_trial_auc
        if self.per_trial_accuracy is not None:
            doc["per_trial_accuracy"] = self.per_trial_accuracy
            doc["accuracy_std"] = self.accuracy_std
        if self.center_distances is not None:
            doc["center_distance_ids"] = self.center_distance_ids
            doc["center_distances"] = self.center_distances
        doc.update(self.extra)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)
