"""Seeded SGD training: MSE loss, shuffled mini-batches, fixed epoch count.

Targets are z-scored with training statistics by default (predictions are
mapped back to the original scale), which stabilizes optimization without
touching correlation metrics.  The final short batch of an epoch trains
like any other.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import Tensor, mse_loss
from .errors import ConfigError
from .network import ModelConfig, ResGeneNet, build
from .tensorize import SnpLayout, to_image2d, to_tensor3d


@dataclass(frozen=True)
class TrainConfig:
    """Optimization protocol knobs."""

    batch_size: int = 32
    lr: float = 0.001
    momentum: float = 0.0
    epochs: int = 100
    seed: int = 0
    standardize_targets: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.lr < 0:
            raise ConfigError(f"learning rate must be >= 0, got {self.lr}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")


def sgd_step(params, grads, lr: float, momentum: float, velocity) -> None:
    """One SGD update in place: v <- momentum*v + g; w <- w - lr*v.

    ``velocity`` is a list of arrays matching ``params`` that carries the
    momentum state between calls (all zeros initially).
    """
    for w, g, v in zip(params, grads, velocity):
        if momentum != 0.0:
            v *= momentum
            v += g
        else:
            v[...] = g
        w -= lr * v


@dataclass
class FoldTrainResult:
    """Outcome of training on one fold's rows."""

    loss_trace: list[float]
    target_mean: float
    target_std: float
    standardized: bool
    warning: str | None = None


def train_fold(net: ResGeneNet, inputs: np.ndarray, targets: np.ndarray,
               config: TrainConfig) -> FoldTrainResult:
    """Train ``net`` in place on (n, C, S, S) inputs and length-n targets.

    Each epoch shuffles rows with the seeded generator, then runs forward,
    MSE backward, and an SGD step per mini-batch.  Returns the per-epoch
    sample-weighted mean losses plus the target scaling in effect.
    """
    n = len(targets)
    if n == 0:
        raise ConfigError("cannot train on an empty fold")
    x_all = np.asarray(inputs, dtype=net.dtype)
    y_all = np.asarray(targets, dtype=np.float64)

    warning = None
    mean, std = 0.0, 1.0
    standardized = False
    if config.standardize_targets:
        std_raw = float(y_all.std())
        if std_raw == 0.0:
            warning = "zero target variance in fold; standardization skipped"
        else:
            mean, std = float(y_all.mean()), std_raw
            standardized = True
    y_scaled = ((y_all - mean) / std).astype(net.dtype)

    shuffle_rng = np.random.default_rng([config.seed, 0])
    dropout_rng = np.random.default_rng([config.seed, 1])
    params = net.params()
    velocity = [np.zeros_like(p.data) for p in params]

    trace: list[float] = []
    for _ in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            xb = Tensor(x_all[idx])
            yb = Tensor(y_scaled[idx])
            preds = net.forward(xb, training=True, rng=dropout_rng)
            loss = mse_loss(preds, yb)
            net.zero_grad()
            loss.backward()
            grads = [p.grad for p in params]
            sgd_step([p.data for p in params], grads, config.lr,
                     config.momentum, velocity)
            total += float(loss.data) * len(idx)
        trace.append(total / n)

    return FoldTrainResult(
        loss_trace=trace, target_mean=mean, target_std=std,
        standardized=standardized, warning=warning,
    )


@dataclass
class TrainedRegressor:
    """Eval-mode predictor that undoes target standardization."""

    net: ResGeneNet
    layout: SnpLayout
    target_mean: float
    target_std: float
    loss_trace: list[float] = field(default_factory=list)
    eval_batch: int = 128

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        x = rows_to_batch(rows, self.layout, self.net.dtype)
        preds = []
        for start in range(0, len(x), self.eval_batch):
            out = self.net.forward(Tensor(x[start:start + self.eval_batch]),
                                   training=False)
            preds.append(out.data[:, 0])
        raw = np.concatenate(preds) if preds else np.zeros(0)
        return raw.astype(np.float64) * self.target_std + self.target_mean


def rows_to_batch(rows: np.ndarray, layout: SnpLayout, dtype) -> np.ndarray:
    """Stack encoded SNP rows into a (n, C, S, S) batch via the layout."""
    rows = np.asarray(rows)
    out = np.empty((rows.shape[0], layout.channels, layout.side, layout.side),
                   dtype=dtype)
    for i, row in enumerate(rows):
        if layout.mode == "tensor3d":
            out[i] = to_tensor3d(row, layout, dtype=dtype)
        else:
            out[i] = to_image2d(row, layout, dtype=dtype)[None]
    return out


@dataclass(frozen=True)
class ResGeneModelSpec:
    """Cross-validation plug-in: fit a residual network on encoded rows.

    Calling the spec with a training split returns an eval-mode predictor
    on the original target scale.  The fold seed feeds both the weight
    init and the shuffle/dropout streams, so folds are independent and
    reproducible.
    """

    model_config: ModelConfig
    train_config: TrainConfig
    layout: SnpLayout

    def __call__(self, x_rows: np.ndarray, y: np.ndarray,
                 fold_seed: int) -> TrainedRegressor:
        net = build(self._fold_model_config(fold_seed))
        batch = rows_to_batch(x_rows, self.layout, net.dtype)
        fold_train = self._fold_train_config(fold_seed)
        result = train_fold(net, batch, y, fold_train)
        return TrainedRegressor(
            net=net, layout=self.layout,
            target_mean=result.target_mean, target_std=result.target_std,
            loss_trace=result.loss_trace,
        )

    def _fold_model_config(self, fold_seed: int) -> ModelConfig:
        mixed = int(np.random.SeedSequence(
            [self.model_config.init_seed, fold_seed]).generate_state(1)[0])
        return replace(self.model_config, init_seed=mixed)

    def _fold_train_config(self, fold_seed: int) -> TrainConfig:
        mixed = int(np.random.SeedSequence(
            [self.train_config.seed, fold_seed]).generate_state(1)[0])
        return replace(self.train_config, seed=mixed)
