"""Loss functions over fixed simplex centers, with analytic feature gradients.

All losses treat the centers as constants; only the features carry
gradients.  Four variants:

  * dsc            -- mean squared distance of each sample to its own center.
                      No hyperparameters.
  * dsc_background -- dsc plus a hinge term pushing background samples at
                      least `m` (squared-distance units) farther from each
                      known center than the known samples sit.
  * hinge          -- per-sample squared distance hinged at threshold `m`;
                      samples already within sqrt(m) of their center are
                      left alone.
  * fixed_softmax  -- cross entropy with logits <s_j, f>; the classifier
                      weights are the centers themselves, biases zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simplex import SimplexCenters

LOSS_KINDS = ("dsc", "dsc_background", "hinge", "fixed_softmax")


@dataclass
class FeatureBatch:
    """A minibatch of features with integer labels.

    background, when present, is a block of unlabeled feature rows drawn
    from classes disjoint from the known ones; it is only legal with the
    dsc_background loss.
    """

    features: np.ndarray
    labels: np.ndarray
    background: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError(
                f"labels shape {self.labels.shape} does not match "
                f"{self.features.shape[0]} feature rows"
            )
        if self.background is not None:
            self.background = np.asarray(self.background, dtype=np.float64)
            if self.background.ndim != 2 or self.background.shape[1] != self.features.shape[1]:
                raise ValueError(
                    f"background shape {self.background.shape} incompatible with "
                    f"feature width {self.features.shape[1]}"
                )


@dataclass(frozen=True)
class LossSpec:
    """Which loss to run plus its hyperparameters.

    m and lam may be left None for dsc_background; the trainer then derives
    the defaults m = u/2 and lam = 1/(2*batch_size^2).  Both thresholds are
    in squared-distance units.
    """

    kind: str = "dsc"
    m: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}, expected one of {LOSS_KINDS}")
        if self.kind in ("dsc", "fixed_softmax"):
            if self.m is not None or self.lam is not None:
                raise ValueError(f"loss kind {self.kind!r} takes no hyperparameters")
        if self.kind == "hinge":
            if self.m is None or self.m < 0:
                raise ValueError("hinge loss needs a margin m >= 0")
            if self.lam is not None:
                raise ValueError("hinge loss takes no lam")
        if self.kind == "dsc_background":
            if self.m is not None and self.m < 0:
                raise ValueError("margin m must be nonnegative")
            if self.lam is not None and self.lam < 0:
                raise ValueError("lam must be nonnegative")

    def with_defaults(self, radius: float, batch_size: int) -> "LossSpec":
        """Fill unset dsc_background hyperparameters from their defaults."""
        if self.kind != "dsc_background":
            return self
        m = self.m if self.m is not None else radius / 2.0
        lam = self.lam if self.lam is not None else 1.0 / (2.0 * batch_size**2)
        return LossSpec(kind=self.kind, m=m, lam=lam)


@dataclass
class LossOutput:
    value: float
    feature_grad: np.ndarray
    background_grad: np.ndarray | None = None


def _check_labels(batch: FeatureBatch, centers: SimplexCenters) -> None:
    if batch.features.shape[1] != centers.dim:
        raise ValueError(
            f"feature width {batch.features.shape[1]} does not match "
            f"center dim {centers.dim}"
        )
    bad = (batch.labels < 0) | (batch.labels >= centers.num_classes)
    if np.any(bad):
        raise ValueError(
            f"invalid labels {np.unique(batch.labels[bad])} for "
            f"{centers.num_classes} classes"
        )


def _sq_residuals(batch: FeatureBatch, centers: SimplexCenters):
    """Per-sample residuals f_i - s_{y_i} and their squared norms."""
    resid = batch.features - centers.centers[batch.labels]
    return resid, np.sum(resid * resid, axis=1)


def dsc_loss(batch: FeatureBatch, centers: SimplexCenters) -> LossOutput:
    """Mean squared distance to the own-class center.

    value = (1/n) sum_i ||f_i - s_{y_i}||^2
    grad_i = (2/n) (f_i - s_{y_i})
    """
    if batch.background is not None:
        raise ValueError("dsc loss takes no background block")
    _check_labels(batch, centers)
    resid, sq = _sq_residuals(batch, centers)
    n = batch.features.shape[0]
    return LossOutput(value=float(sq.mean()), feature_grad=(2.0 / n) * resid)


def dsc_background_loss(
    batch: FeatureBatch, centers: SimplexCenters, spec: LossSpec
) -> LossOutput:
    """dsc plus a hinge pushing background samples away from known centers.

    value = (1/n) sum_i ||f_i - s_{y_i}||^2
            + lam * sum_i sum_k max(0, m + ||f_i - s_{y_i}||^2 - ||f_k - s_{y_i}||^2)

    The double sum runs over the batch's known samples i and background
    samples k.  Inactive hinge terms contribute zero gradient; the
    subgradient exactly at the hinge point is taken as zero.
    """
    if spec.kind != "dsc_background":
        raise ValueError(f"spec kind {spec.kind!r} is not dsc_background")
    if spec.m is None or spec.lam is None:
        raise ValueError("dsc_background needs concrete m and lam (see with_defaults)")
    if batch.background is None:
        raise ValueError("dsc_background loss requires a background block")
    _check_labels(batch, centers)

    resid, sq = _sq_residuals(batch, centers)
    n = batch.features.shape[0]
    bg = batch.background

    # bg_sq[i, k] = ||f_k - s_{y_i}||^2
    s_y = centers.centers[batch.labels]
    bg_diff = bg[None, :, :] - s_y[:, None, :]
    bg_sq = np.sum(bg_diff * bg_diff, axis=2)

    margin = spec.m + sq[:, None] - bg_sq
    active = margin > 0.0

    value = float(sq.mean() + spec.lam * np.sum(margin[active]))

    # d/df_i: dsc term + 2*lam*(#active k) * (f_i - s_{y_i})
    active_per_i = active.sum(axis=1)
    feature_grad = (2.0 / n + 2.0 * spec.lam * active_per_i)[:, None] * resid
    # d/df_k: -2*lam * sum_{i active} (f_k - s_{y_i})
    background_grad = -2.0 * spec.lam * np.einsum("ik,ikd->kd", active.astype(np.float64), bg_diff)

    return LossOutput(value=value, feature_grad=feature_grad, background_grad=background_grad)


def hinge_loss(batch: FeatureBatch, centers: SimplexCenters, spec: LossSpec) -> LossOutput:
    """Squared center distance hinged at m: max(0, ||f_i - s_{y_i}||^2 - m).

    Samples already within squared distance m of their center receive no
    gradient, so each class settles into a ball of radius sqrt(m).
    """
    if spec.kind != "hinge":
        raise ValueError(f"spec kind {spec.kind!r} is not hinge")
    if batch.background is not None:
        raise ValueError("hinge loss takes no background block")
    _check_labels(batch, centers)
    resid, sq = _sq_residuals(batch, centers)
    n = batch.features.shape[0]
    active = sq > spec.m
    value = float(np.sum(sq[active] - spec.m) / n)
    feature_grad = (2.0 / n) * resid * active[:, None]
    return LossOutput(value=value, feature_grad=feature_grad)


def fixed_softmax_loss(batch: FeatureBatch, centers: SimplexCenters) -> LossOutput:
    """Cross entropy with the centers as fixed classifier weights, zero bias.

    Logits z_ij = <s_j, f_i> are max-subtracted before exponentiation for
    overflow safety.  grad_i = (1/n) sum_j (p_ij - [j == y_i]) s_j.
    """
    if batch.background is not None:
        raise ValueError("fixed_softmax loss takes no background block")
    _check_labels(batch, centers)
    f, y = batch.features, batch.labels
    n = f.shape[0]
    s = centers.centers

    logits = f @ s.T
    shifted = logits - logits.max(axis=1, keepdims=True)
    expz = np.exp(shifted)
    denom = expz.sum(axis=1)
    logp_y = shifted[np.arange(n), y] - np.log(denom)
    value = float(-logp_y.mean())

    probs = expz / denom[:, None]
    probs[np.arange(n), y] -= 1.0
    feature_grad = (probs @ s) / n
    return LossOutput(value=value, feature_grad=feature_grad)


def evaluate_loss(
    batch: FeatureBatch, centers: SimplexCenters, spec: LossSpec
) -> LossOutput:
    """Dispatch on spec.kind."""
    if spec.kind == "dsc":
        return dsc_loss(batch, centers)
    if spec.kind == "dsc_background":
        return dsc_background_loss(batch, centers, spec)
    if spec.kind == "hinge":
        return hinge_loss(batch, centers, spec)
    if spec.kind == "fixed_softmax":
        return fixed_softmax_loss(batch, centers)
    raise ValueError(f"unknown loss kind {spec.kind!r}")
