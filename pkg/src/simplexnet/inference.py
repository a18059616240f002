"""Nearest-center classification and open-set scoring.

Because every center has the same norm, the Euclidean argmin and the cosine
argmax pick the same center for any nonzero feature; both paths are kept as
a cross-check and because the cosine path also works for non-simplex center
sets.  The unknown score is the minimum squared Euclidean distance to any
center: higher means more unknown.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simplex import SimplexCenters

# Sentinel label for rejected (presumed unknown) samples.
REJECT = -1


@dataclass(frozen=True)
class Prediction:
    label: int
    euclid_score: float  # min squared Euclidean distance to any center
    cosine_score: float  # max cosine similarity to any center (nan for zero features)


def nearest_center(features: np.ndarray, centers: SimplexCenters):
    """Vectorized labels and squared distances, one row per feature.

    Returns (labels, min_sq_distances); ties go to the smallest index.
    """
    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if f.shape[1] != centers.dim:
        raise ValueError(f"feature width {f.shape[1]} does not match center dim {centers.dim}")
    diff = f[:, None, :] - centers.centers[None, :, :]
    sq = np.sum(diff * diff, axis=2)
    labels = np.argmin(sq, axis=1)
    return labels.astype(np.int64), sq[np.arange(len(labels)), labels]


def cosine_similarities(features: np.ndarray, centers: SimplexCenters) -> np.ndarray:
    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    norms = np.linalg.norm(f, axis=1, keepdims=True)
    center_norms = np.linalg.norm(centers.centers, axis=1)
    return (f @ centers.centers.T) / (norms * center_norms[None, :])


def _best_cosine(feature: np.ndarray, centers: SimplexCenters):
    sims = cosine_similarities(feature, centers)[0]
    label = int(np.argmax(sims))
    return label, float(sims[label])


def predict_euclid(feature: np.ndarray, centers: SimplexCenters) -> Prediction:
    """Label = argmin_j ||f - s_j||^2, smallest index on ties."""
    labels, sq = nearest_center(feature, centers)
    feature = np.asarray(feature, dtype=np.float64)
    if np.linalg.norm(feature) > 0:
        _, cos = _best_cosine(feature, centers)
    else:
        cos = float("nan")
    return Prediction(label=int(labels[0]), euclid_score=float(sq[0]), cosine_score=cos)


def predict_cosine(feature: np.ndarray, centers: SimplexCenters) -> Prediction:
    """Label = argmax_j cos(f, s_j), smallest index on ties.

    Undefined for zero-norm features (no direction to compare).
    """
    feature = np.asarray(feature, dtype=np.float64)
    if np.linalg.norm(feature) == 0.0:
        raise ValueError("cosine prediction undefined for a zero-norm feature")
    label, cos = _best_cosine(feature, centers)
    _, sq = nearest_center(feature, centers)
    return Prediction(label=label, euclid_score=float(sq[0]), cosine_score=cos)


def open_set_score(feature: np.ndarray, centers: SimplexCenters) -> float:
    """Min squared distance to any center; higher means more unknown."""
    _, sq = nearest_center(feature, centers)
    return float(sq[0])


def open_set_scores(features: np.ndarray, centers: SimplexCenters) -> np.ndarray:
    """Vectorized open_set_score over feature rows."""
    _, sq = nearest_center(features, centers)
    return sq


def classify_with_rejection(
    feature: np.ndarray, centers: SimplexCenters, threshold: float
) -> Prediction:
    """Nearest-center label, or REJECT when the unknown score exceeds threshold."""
    if threshold < 0:
        raise ValueError("rejection threshold must be nonnegative")
    pred = predict_euclid(feature, centers)
    if pred.euclid_score > threshold:
        return Prediction(
            label=REJECT, euclid_score=pred.euclid_score, cosine_score=pred.cosine_score
        )
    return pred
