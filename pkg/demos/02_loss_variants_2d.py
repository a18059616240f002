"""How the loss choice shapes the learned 2-D embedding.

Trains the same small network on a 3-class blob fixture with each loss and
writes one embedding CSV per variant (feature_x, feature_y, label) so the
three panels can be plotted side by side: the plain squared-distance loss
collapses each class onto its center, the hinged variant leaves spherical
clouds of radius sqrt(m), and the fixed-weight softmax separates classes by
angle but lets them spread.
"""

import os

import numpy as np

from simplexnet import (
    LossSpec,
    TrainConfig,
    build_centers,
    build_mlp,
    closed_set_accuracy,
    init_parameters,
    nearest_center,
    scatter_stats,
    train,
)
from simplexnet.data import train_test_blobs

OUT_DIR = os.path.join(os.path.dirname(__file__), "out")


def run_variant(spec, train_ds, test_ds, centers):
    model = init_parameters(build_mlp([2, 32, 2]), seed=4)
    config = TrainConfig(epochs=150, batch_size=32, optimizer="adam", lr=0.02,
                         seed=6, loss=spec)
    model, _ = train(model, train_ds, centers, config)
    feats = model.forward(test_ds.samples)
    scatter = np.nanmean(scatter_stats(feats, test_ds.labels, centers))
    preds, _ = nearest_center(feats, centers)
    accuracy = closed_set_accuracy(preds, test_ds.labels)
    return feats, scatter, accuracy


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    train_ds, test_ds = train_test_blobs(3, 2, 150, 75, 1.0, seed=21)
    centers = build_centers(3, 2, 5.0)  # small radius suits a 2-D picture

    variants = [
        ("dsc", LossSpec("dsc")),
        ("hinge_m4", LossSpec("hinge", m=4.0)),
        ("fixed_softmax", LossSpec("fixed_softmax")),
    ]
    print(f"{'variant':<15s} {'mean scatter':>12s} {'accuracy':>9s}")
    for name, spec in variants:
        feats, scatter, accuracy = run_variant(spec, train_ds, test_ds, centers)
        path = os.path.join(OUT_DIR, f"embedding_{name}.csv")
        rows = np.concatenate([feats, test_ds.labels[:, None].astype(float)], axis=1)
        np.savetxt(path, rows, delimiter=",", header="x,y,label", comments="")
        print(f"{name:<15s} {scatter:12.4f} {accuracy:9.4f}   -> {path}")

    print("\ncenters (plot these as anchors):")
    print(np.round(centers.centers, 4))


if __name__ == "__main__":
    main()
