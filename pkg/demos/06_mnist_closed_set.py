"""Closed-set digit classification from IDX files.

Needs the four standard MNIST IDX files (uncompressed) in the directory
passed as the first argument, or in ./data/mnist.  Trains the
784-256-128-9 network with the plain squared-distance loss at u=64 and
reports nearest-center test accuracy.  Without the files it falls back to
the bundled 8x8 digits, round-tripped through the package's own IDX writer,
so the same pipeline still runs end to end.
"""

import os
import sys
import tempfile

import numpy as np

from simplexnet import (
    LossSpec,
    TrainConfig,
    build_centers,
    build_mlp,
    closed_set_accuracy,
    init_parameters,
    load_idx,
    nearest_center,
    train,
    write_idx,
)

MNIST_FILES = (
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
)


def load_mnist(data_dir):
    train_ds = load_idx(os.path.join(data_dir, MNIST_FILES[0]),
                        os.path.join(data_dir, MNIST_FILES[1]))
    test_ds = load_idx(os.path.join(data_dir, MNIST_FILES[2]),
                       os.path.join(data_dir, MNIST_FILES[3]))
    return train_ds, test_ds, dict(epochs=20, lr=1e-3)


def load_small_digits():
    from sklearn.datasets import load_digits

    digits = load_digits()
    order = np.random.default_rng(0).permutation(len(digits.target))
    tmp = tempfile.mkdtemp()
    paths = {}
    for tag, idx in (("train", order[:1500]), ("test", order[1500:])):
        ip, lp = os.path.join(tmp, f"{tag}-img"), os.path.join(tmp, f"{tag}-lab")
        write_idx(digits.images[idx].astype(np.uint8),
                  digits.target[idx].astype(np.uint8), ip, lp)
        paths[tag] = (ip, lp)
    return load_idx(*paths["train"]), load_idx(*paths["test"]), dict(epochs=30, lr=0.01)


def main():
    data_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join("data", "mnist")
    if all(os.path.exists(os.path.join(data_dir, f)) for f in MNIST_FILES):
        print(f"using MNIST IDX files from {data_dir}")
        train_ds, test_ds, knobs = load_mnist(data_dir)
    else:
        print(f"no MNIST IDX files under {data_dir}; using the bundled 8x8 digits")
        train_ds, test_ds, knobs = load_small_digits()

    print(f"train {train_ds.samples.shape}, test {test_ds.samples.shape}")
    model = init_parameters(build_mlp([train_ds.dim, 256, 128, 9]), seed=0)
    centers = build_centers(10, 9, 64.0)
    config = TrainConfig(epochs=knobs["epochs"], batch_size=128, optimizer="adam",
                         lr=knobs["lr"], seed=1, loss=LossSpec("dsc"))
    model, log = train(model, train_ds, centers, config)
    print(f"final mean within-class squared distance: {log.final().mean_sqdist:.1f}")

    preds, _ = nearest_center(model.forward(test_ds.samples), centers)
    print(f"test accuracy: {closed_set_accuracy(preds, test_ds.labels):.4f}")


if __name__ == "__main__":
    main()
