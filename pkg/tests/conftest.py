"""Shared oracles and fixtures: finite differences, brute-force AUC, blobs."""

import numpy as np
import pytest

from simplexnet import FeatureBatch, LabeledDataset, blob_anchors, gen_blobs


def central_diff_feature_grad(loss_fn, features, step=1e-5):
    """Finite-difference d(value)/d(features) for loss_fn(features) -> value.

    Central differences; independent of any analytic gradient path.
    """
    grad = np.zeros_like(features, dtype=np.float64)
    for idx in np.ndindex(features.shape):
        plus = features.copy()
        minus = features.copy()
        plus[idx] += step
        minus[idx] -= step
        grad[idx] = (loss_fn(plus) - loss_fn(minus)) / (2.0 * step)
    return grad


def max_rel_error(analytic, numeric, floor=1e-10):
    """Worst-case elementwise relative error with a small absolute floor."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))


def brute_force_auc(known_scores, unknown_scores):
    """O(n*m) pair counting: wins 1, ties 1/2, with unknown as positive."""
    wins = 0.0
    for u in unknown_scores:
        for k in known_scores:
            if u > k:
                wins += 1.0
            elif u == k:
                wins += 0.5
    return wins / (len(known_scores) * len(unknown_scores))


def numerical_rank(matrix, rel_threshold=1e-8):
    """Rank via singular values above rel_threshold * sigma_max."""
    sigma = np.linalg.svd(matrix, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > rel_threshold * sigma[0]))


def random_orthogonal(dim, seed):
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def fd_param_grads(model, inputs, probe, step=1e-5):
    """Central finite differences of J = sum(forward(inputs) * probe)."""
    grads = []
    for p in model.params():
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + step
            plus = float(np.sum(model.forward(inputs) * probe))
            p[idx] = orig - step
            minus = float(np.sum(model.forward(inputs) * probe))
            p[idx] = orig
            g[idx] = (plus - minus) / (2.0 * step)
        grads.append(g)
    return grads


def assert_backward_matches_fd(model, inputs, seed, tol=1e-5):
    rng = np.random.default_rng(seed)
    probe = rng.standard_normal(model.forward(inputs).shape)
    model.forward(inputs)
    model.backward(probe)
    analytic = [g.copy() for g in model.grads()]
    numeric = fd_param_grads(model, inputs, probe)
    for a, nmr in zip(analytic, numeric):
        assert max_rel_error(a, nmr) < tol


def make_clean_inputs(model, n, in_dim, seed, min_preact=1e-3):
    """Random inputs whose ReLU preactivations stay off the kink."""
    for attempt in range(50):
        rng = np.random.default_rng(seed + attempt)
        x = rng.standard_normal((n, in_dim))
        h = x
        clean = True
        for layer in model.layers:
            if layer.kind == "relu" and np.min(np.abs(h)) < min_preact:
                clean = False
                break
            h = layer.forward(h)
        if clean:
            return x
    raise AssertionError("could not find kink-free inputs")


@pytest.fixture
def blob_2class_2d():
    """Two separable Gaussian classes in 2-D, the basic trainer fixture."""
    return gen_blobs(num_classes=2, dim=2, samples_per_class=60, spread=1.0, seed=11)


def make_feature_batch(n, d, num_classes, seed, background_k=0, scale=1.0):
    rng = np.random.default_rng(seed)
    features = scale * rng.standard_normal((n, d))
    labels = rng.integers(0, num_classes, size=n)
    background = scale * rng.standard_normal((background_k, d)) if background_k else None
    return FeatureBatch(features, labels, background=background)
