"""Minibatch training loop for a network against fixed simplex centers."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, background_stream
from .losses import FeatureBatch, LossSpec, evaluate_loss
from .network import NetworkModel
from .simplex import SimplexCenters


class DivergedError(RuntimeError):
    """Training produced a non-finite loss; fail loudly rather than clip."""

    def __init__(self, epoch: int, step: int, value: float):
        self.epoch = epoch
        self.step = step
        super().__init__(f"non-finite loss {value} at epoch {epoch}, step {step}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int
    optimizer: str = "sgd"
    lr: float = 0.05
    momentum: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    loss: LossSpec = field(default_factory=LossSpec)
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        # lr = 0 is allowed as an explicit null update; negative is not.
        if self.lr < 0:
            raise ValueError("lr must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    mean_sqdist: float
    wall_time: float


@dataclass
class TrainLog:
    records: list[EpochRecord] = field(default_factory=list)

    def final(self) -> EpochRecord:
        return self.records[-1]


class Sgd:
    """Plain SGD with optional classical momentum."""

    def __init__(self, lr: float, momentum: float = 0.0):
        self.lr = lr
        self.momentum = momentum
        self._velocity: list[np.ndarray] | None = None

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if len(params) != len(grads):
            raise ValueError("params/grads length mismatch")
        if self._velocity is None:
            self._velocity = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, self._velocity):
            if p.shape != g.shape:
                raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
            v *= self.momentum
            v += g
            p -= self.lr * v


class Adam:
    """Adam with bias correction."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None
        self._t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if len(params) != len(grads):
            raise ValueError("params/grads length mismatch")
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self._t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1**self._t
        bias2 = 1.0 - b2**self._t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            if p.shape != g.shape:
                raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return Sgd(config.lr, config.momentum)
    return Adam(config.lr, config.beta1, config.beta2, config.eps)


def train(
    model: NetworkModel,
    data: LabeledDataset,
    centers: SimplexCenters,
    config: TrainConfig,
    background: np.ndarray | None = None,
    epoch_callback=None,
) -> tuple[NetworkModel, TrainLog]:
    """Run epochs * ceil(n/batch) optimizer steps; return (model, log).

    Each step forwards a batch (stacked with an equal-sized background batch
    for the dsc_background loss), evaluates the loss on the resulting
    features, backpropagates, and updates the parameters in place.  The
    per-epoch shuffle uses seed XOR epoch, so a fixed config reproduces the
    exact trajectory.  `epoch_callback(model, record)`, when given, runs
    after every epoch (used for periodic checkpointing).
    """
    n = data.samples.shape[0]
    if config.batch_size > n:
        raise ValueError(f"batch_size {config.batch_size} exceeds dataset size {n}")
    if np.any(data.labels >= centers.num_classes) or np.any(data.labels < 0):
        raise ValueError("dataset labels exceed the number of class centers")
    if model.out_dim is not None and model.out_dim != centers.dim:
        raise ValueError(
            f"model output width {model.out_dim} does not match center dim {centers.dim}"
        )
    spec = config.loss.with_defaults(centers.radius, config.batch_size)
    if spec.kind == "dsc_background":
        if background is None:
            raise ValueError("dsc_background loss requires a background source")
        bg_iter = background_stream(background, config.batch_size, seed=config.seed)
    elif background is not None:
        raise ValueError(f"loss kind {spec.kind!r} takes no background source")

    optimizer = make_optimizer(config)
    log = TrainLog()
    steps = (n + config.batch_size - 1) // config.batch_size

    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        if config.shuffle:
            order = np.random.default_rng(config.seed ^ epoch).permutation(n)
        else:
            order = np.arange(n)

        loss_sum = 0.0
        sqdist_sum = 0.0
        for step in range(steps):
            idx = order[step * config.batch_size : (step + 1) * config.batch_size]
            x = data.samples[idx]
            y = data.labels[idx]

            if spec.kind == "dsc_background":
                bg_x = next(bg_iter)[: len(idx)]
                feats = model.forward(np.concatenate([x, bg_x]))
                batch = FeatureBatch(feats[: len(idx)], y, background=feats[len(idx) :])
            else:
                feats = model.forward(x)
                batch = FeatureBatch(feats, y)

            out = evaluate_loss(batch, centers, spec)
            if not np.isfinite(out.value):
                raise DivergedError(epoch, step, out.value)
            loss_sum += out.value * len(idx)
            resid = batch.features - centers.centers[y]
            sqdist_sum += float(np.sum(resid * resid))

            if spec.kind == "dsc_background":
                grad = np.concatenate([out.feature_grad, out.background_grad])
            else:
                grad = out.feature_grad
            model.backward(grad)
            optimizer.step(model.params(), model.grads())

        record = EpochRecord(
            epoch=epoch,
            mean_loss=loss_sum / n,
            mean_sqdist=sqdist_sum / n,
            wall_time=time.perf_counter() - t0,
        )
        log.records.append(record)
        if epoch_callback is not None:
            epoch_callback(model, record)

    return model, log
