"""Minimal feedforward network with hand-rolled reverse-mode gradients.

Dense layers, ReLU, and a dimension-raising block (two dense layers with
ReLU activations) that lifts d-dimensional features to C-1 dimensions when
the class count outgrows the feature width.  Everything is float64 numpy;
with a fixed seed and a single BLAS thread the forward/backward passes are
bitwise reproducible.
"""

from __future__ import annotations

import json
import os
import tempfile
import warnings

import numpy as np


class DenseLayer:
    """Affine map x @ weight + bias, weight shape (in_dim, out_dim)."""

    kind = "dense"

    def __init__(self, in_dim: int, out_dim: int):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.weight = np.zeros((self.in_dim, self.out_dim))
        self.bias = np.zeros(self.out_dim)
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)
        self._input = None

    def descriptor(self) -> dict:
        return {"kind": "dense", "in": self.in_dim, "out": self.out_dim}

    def init(self, rng: np.random.Generator) -> None:
        # zero-mean, variance 1/fan_in
        self.weight = rng.standard_normal((self.in_dim, self.out_dim)) / np.sqrt(self.in_dim)
        self.bias = np.zeros(self.out_dim)

    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def grads(self) -> list[np.ndarray]:
        return [self.grad_weight, self.grad_bias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._input = x
        return x @ self.weight + self.bias

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._input is None:
            raise RuntimeError("backward called before forward on dense layer")
        self.grad_weight = self._input.T @ grad_out
        self.grad_bias = grad_out.sum(axis=0)
        return grad_out @ self.weight.T


class ReluLayer:
    kind = "relu"

    def __init__(self):
        self._mask = None

    def descriptor(self) -> dict:
        return {"kind": "relu"}

    def init(self, rng: np.random.Generator) -> None:
        pass

    def params(self) -> list[np.ndarray]:
        return []

    def grads(self) -> list[np.ndarray]:
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise RuntimeError("backward called before forward on relu layer")
        return grad_out * self._mask


class DamBlock:
    """Dimension augmentation: dense(d -> C-1), ReLU, dense(C-1 -> C-1), ReLU.

    The nonlinearities are what actually raise the attainable feature rank;
    with `activations=False` the block collapses to a single affine map and
    cannot exceed the input dimension (ablation switch).
    """

    kind = "dam"

    def __init__(self, in_dim: int, target_dim: int, activations: bool = True):
        self.in_dim = int(in_dim)
        self.out_dim = int(target_dim)
        self.activations = bool(activations)
        self.fc1 = DenseLayer(self.in_dim, self.out_dim)
        self.fc2 = DenseLayer(self.out_dim, self.out_dim)
        self._relu1 = ReluLayer()
        self._relu2 = ReluLayer()

    def descriptor(self) -> dict:
        return {
            "kind": "dam",
            "in": self.in_dim,
            "out": self.out_dim,
            "activations": self.activations,
        }

    def init(self, rng: np.random.Generator) -> None:
        self.fc1.init(rng)
        self.fc2.init(rng)

    def params(self) -> list[np.ndarray]:
        return self.fc1.params() + self.fc2.params()

    def grads(self) -> list[np.ndarray]:
        return self.fc1.grads() + self.fc2.grads()

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = self.fc1.forward(x)
        if self.activations:
            h = self._relu1.forward(h)
        h = self.fc2.forward(h)
        if self.activations:
            h = self._relu2.forward(h)
        return h

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        g = grad_out
        if self.activations:
            g = self._relu2.backward(g)
        g = self.fc2.backward(g)
        if self.activations:
            g = self._relu1.backward(g)
        return self.fc1.backward(g)


_LAYER_KINDS = {"dense": DenseLayer, "relu": ReluLayer, "dam": DamBlock}


class NetworkModel:
    """An ordered stack of layers with cached forward state for backward."""

    def __init__(self, layers: list, seed: int = 0):
        self.layers = list(layers)
        self.seed = int(seed)
        self._forwarded = False
        self._check_chain()

    def _check_chain(self):
        width = None
        for i, layer in enumerate(self.layers):
            if hasattr(layer, "in_dim"):
                if width is not None and layer.in_dim != width:
                    raise ValueError(
                        f"layer {i} ({layer.kind}) expects input width "
                        f"{layer.in_dim} but gets {width}"
                    )
                width = layer.out_dim

    @property
    def in_dim(self) -> int | None:
        for layer in self.layers:
            if hasattr(layer, "in_dim"):
                return layer.in_dim
        return None

    @property
    def out_dim(self) -> int | None:
        width = None
        for layer in self.layers:
            if hasattr(layer, "out_dim"):
                width = layer.out_dim
        return width

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads()]

    def forward(self, inputs: np.ndarray) -> np.ndarray:
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"inputs must be 2-D, got shape {x.shape}")
        if self.in_dim is not None and x.shape[1] != self.in_dim:
            raise ValueError(
                f"layer 0 ({self.layers[0].kind}) expects input width "
                f"{self.in_dim}, got {x.shape[1]}"
            )
        for i, layer in enumerate(self.layers):
            try:
                x = layer.forward(x)
            except ValueError as exc:
                raise ValueError(f"layer {i} ({layer.kind}): {exc}") from exc
        self._forwarded = True
        return x

    def backward(self, output_grad: np.ndarray) -> np.ndarray:
        """Propagate d(loss)/d(output) back; returns d(loss)/d(input).

        Parameter gradients land in each layer's grad arrays (see grads()).
        """
        if not self._forwarded:
            raise RuntimeError("backward called before forward")
        g = np.asarray(output_grad, dtype=np.float64)
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g


def build_mlp(widths: list[int], seed: int = 0) -> NetworkModel:
    """Dense/ReLU stack: dense(w0,w1), relu, ..., dense(w_{k-1}, w_k).

    No activation after the final layer; the last width is the feature
    dimension the centers live in.  Parameters start at zero; call
    init_parameters before use.
    """
    if len(widths) < 2:
        raise ValueError("need at least input and output widths")
    layers: list = []
    for i in range(len(widths) - 1):
        layers.append(DenseLayer(widths[i], widths[i + 1]))
        if i < len(widths) - 2:
            layers.append(ReluLayer())
    return NetworkModel(layers, seed=seed)


def init_parameters(model: NetworkModel, seed: int) -> NetworkModel:
    """Reinitialize all dense weights (normal, std 1/sqrt(fan_in)), biases zero.

    A single generator seeded with `seed` is threaded through the layers in
    order, so the same seed always reproduces the same parameters bitwise.
    """
    rng = np.random.default_rng(seed)
    for layer in model.layers:
        layer.init(rng)
    model.seed = int(seed)
    return model


def attach_dam(model: NetworkModel, num_classes: int, activations: bool = True) -> NetworkModel:
    """Append a dimension augmentation block mapping out_dim -> C-1.

    Intended for num_classes - 1 > current output width; attaching anyway
    is allowed but pointless, so it warns.  Reinitialize parameters after
    attaching.
    """
    width = model.out_dim
    if width is None:
        raise ValueError("model has no sized layers to attach onto")
    target = int(num_classes) - 1
    if target <= width:
        warnings.warn(
            f"dimension augmentation is unnecessary: target width {target} "
            f"does not exceed current width {width}",
            stacklevel=2,
        )
    model.layers.append(DamBlock(width, target, activations=activations))
    model._check_chain()
    return model


CHECKPOINT_FORMAT_VERSION = 1


def save_checkpoint(model: NetworkModel, path: str) -> None:
    """Write the model as JSON; floats round-trip value-exact."""
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "layers": [layer.descriptor() for layer in model.layers],
        "seed": model.seed,
        "params": [
            np.concatenate([p.ravel() for p in layer.params()]).tolist()
            if layer.params()
            else []
            for layer in model.layers
        ],
    }
    tmp_fd, tmp_path = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)) or ".")
    try:
        with os.fdopen(tmp_fd, "w") as fh:
            json.dump(doc, fh)
            fh.write("\n")
        os.replace(tmp_path, path)
    except BaseException:
        os.unlink(tmp_path)
        raise


def _layer_from_descriptor(desc: dict):
    kind = desc.get("kind")
    if kind == "dense":
        return DenseLayer(desc["in"], desc["out"])
    if kind == "relu":
        return ReluLayer()
    if kind == "dam":
        return DamBlock(desc["in"], desc["out"], activations=desc.get("activations", True))
    raise ValueError(f"unknown layer kind {kind!r} in checkpoint")


def load_checkpoint(path: str) -> NetworkModel:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or doc.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format in {path}")
    try:
        layers = [_layer_from_descriptor(d) for d in doc["layers"]]
        model = NetworkModel(layers, seed=doc["seed"])
        for layer, flat in zip(layers, doc["params"], strict=True):
            shapes = [p.shape for p in layer.params()]
            sizes = [int(np.prod(s)) for s in shapes]
            if sum(sizes) != len(flat):
                raise ValueError(
                    f"parameter count mismatch for {layer.kind} layer: "
                    f"expected {sum(sizes)}, got {len(flat)}"
                )
            flat_arr = np.asarray(flat, dtype=np.float64)
            offset = 0
            new_params = []
            for shape, size in zip(shapes, sizes):
                new_params.append(flat_arr[offset : offset + size].reshape(shape))
                offset += size
            if layer.kind == "dense":
                layer.weight, layer.bias = new_params
            elif layer.kind == "dam":
                layer.fc1.weight, layer.fc1.bias, layer.fc2.weight, layer.fc2.bias = new_params
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed checkpoint {path}: {exc}") from exc
    return model
