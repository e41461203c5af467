"""Residual regression networks over SNP images and tensors.

The backbone is an 18-layer residual network: a stem convolution, four
stages of two basic blocks (3x3 conv - BN - relu - 3x3 conv - BN plus a
shortcut), global average pooling, dropout, and a single-output linear
head.  One channel and a square side realize the image variant; C > 1
channels realize the tensor variant.  For sides below 33 the stem runs at
stride 1 with the entry max-pool disabled so the downsampling chain never
collapses a tiny input.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as F
from .autodiff import Tensor
from .errors import ConfigError

SMALL_INPUT_SIDE = 33  # below this the stem keeps stride 1 and skips max-pool


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; shapes of all weights follow from these."""

    input_channels: int = 1
    input_side: int = 16
    stem_kernel: int = 3
    stem_stride: int | None = None      # None: 1 for small inputs, else 2
    use_maxpool: bool | None = None     # None: off for small inputs, else on
    stage_widths: tuple[int, ...] = (64, 128, 256, 512)
    blocks_per_stage: tuple[int, ...] = (2, 2, 2, 2)
    dropout: float = 0.0
    init_seed: int = 0
    dtype: str = "float64"

    def resolved(self) -> "ModelConfig":
        """Fill the small-input defaults for stem stride and max-pool."""
        small = self.input_side < SMALL_INPUT_SIDE
        stride = self.stem_stride if self.stem_stride is not None else (1 if small else 2)
        pool = self.use_maxpool if self.use_maxpool is not None else not small
        return replace(self, stem_stride=stride, use_maxpool=pool)


def _conv_out(extent: int, kernel: int, stride: int, padding: int) -> int:
    return (extent + 2 * padding - kernel) // stride + 1


def _spatial_chain(cfg: ModelConfig) -> list[int]:
    """Spatial side after the stem, optional pool, and each stage."""
    sizes = [_conv_out(cfg.input_side, cfg.stem_kernel, cfg.stem_stride,
                       cfg.stem_kernel // 2)]
    if cfg.use_maxpool:
        if sizes[-1] < 3:
            sizes.append(0)
            return sizes
        sizes.append((sizes[-1] - 3) // 2 + 1)
    for stage in range(len(cfg.stage_widths)):
        stride = 1 if stage == 0 else 2
        sizes.append(_conv_out(sizes[-1], 3, stride, 1))
    return sizes


def _validate_side(cfg: ModelConfig) -> None:
    if min(_spatial_chain(cfg)) >= 1:
        return
    probe = cfg
    side = cfg.input_side
    while True:
        side += 1
        probe = replace(cfg, input_side=side)
        if min(_spatial_chain(probe)) >= 1:
            break
    raise ConfigError(
        f"input side {cfg.input_side} collapses to zero spatial size; "
        f"minimum side for this configuration is {side}"
    )


class Conv2dLayer:
    """Convolution with fan-in-scaled normal init (relu gain), no bias."""

    def __init__(self, in_ch, out_ch, kernel, stride, padding, rng, dtype):
        std = np.sqrt(2.0 / (in_ch * kernel * kernel))
        w = rng.normal(0.0, std, size=(out_ch, in_ch, kernel, kernel))
        self.weight = Tensor(w.astype(dtype), requires_grad=True)
        self.stride = stride
        self.padding = padding

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, stride=self.stride, padding=self.padding)

    def named_params(self, prefix):
        yield f"{prefix}.weight", self.weight


class BatchNorm2dLayer:
    def __init__(self, channels, dtype, momentum=0.1, eps=1e-5):
        self.gamma = Tensor(np.ones(channels, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(channels, dtype=dtype), requires_grad=True)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.momentum = momentum
        self.eps = eps

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return F.batchnorm2d(
            x, self.gamma, self.beta,
            running_mean=self.running_mean, running_var=self.running_var,
            training=training, momentum=self.momentum, eps=self.eps,
        )

    def named_params(self, prefix):
        yield f"{prefix}.gamma", self.gamma
        yield f"{prefix}.beta", self.beta

    def named_buffers(self, prefix):
        yield f"{prefix}.running_mean", self.running_mean
        yield f"{prefix}.running_var", self.running_var


class LinearLayer:
    def __init__(self, in_features, out_features, rng, dtype, init_std):
        w = rng.normal(0.0, init_std, size=(in_features, out_features))
        self.weight = Tensor(w.astype(dtype), requires_grad=True)
        self.bias = Tensor(np.zeros(out_features, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)

    def named_params(self, prefix):
        yield f"{prefix}.weight", self.weight
        yield f"{prefix}.bias", self.bias


class BasicBlock:
    """Two 3x3 convolutions with a shortcut; stride 2 blocks project it 1x1."""

    def __init__(self, in_ch, out_ch, stride, rng, dtype):
        self.conv1 = Conv2dLayer(in_ch, out_ch, 3, stride, 1, rng, dtype)
        self.bn1 = BatchNorm2dLayer(out_ch, dtype)
        self.conv2 = Conv2dLayer(out_ch, out_ch, 3, 1, 1, rng, dtype)
        self.bn2 = BatchNorm2dLayer(out_ch, dtype)
        if stride != 1 or in_ch != out_ch:
            self.proj = Conv2dLayer(in_ch, out_ch, 1, stride, 0, rng, dtype)
            self.proj_bn = BatchNorm2dLayer(out_ch, dtype)
        else:
            self.proj = None
            self.proj_bn = None

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        branch = F.relu(self.bn1(self.conv1(x), training))
        branch = self.bn2(self.conv2(branch), training)
        shortcut = x if self.proj is None else self.proj_bn(self.proj(x), training)
        return F.relu(F.add(branch, shortcut))

    def named_params(self, prefix):
        yield from self.conv1.named_params(f"{prefix}.conv1")
        yield from self.bn1.named_params(f"{prefix}.bn1")
        yield from self.conv2.named_params(f"{prefix}.conv2")
        yield from self.bn2.named_params(f"{prefix}.bn2")
        if self.proj is not None:
            yield from self.proj.named_params(f"{prefix}.proj")
            yield from self.proj_bn.named_params(f"{prefix}.proj_bn")

    def named_buffers(self, prefix):
        yield from self.bn1.named_buffers(f"{prefix}.bn1")
        yield from self.bn2.named_buffers(f"{prefix}.bn2")
        if self.proj_bn is not None:
            yield from self.proj_bn.named_buffers(f"{prefix}.proj_bn")


class ResGeneNet:
    """Built network: parameters plus the forward plan."""

    def __init__(self, config: ModelConfig):
        cfg = config.resolved()
        _validate_side(cfg)
        self.config = cfg
        dtype = np.dtype(cfg.dtype)
        rng = np.random.default_rng(cfg.init_seed)

        width0 = cfg.stage_widths[0]
        self.stem_conv = Conv2dLayer(
            cfg.input_channels, width0, cfg.stem_kernel, cfg.stem_stride,
            cfg.stem_kernel // 2, rng, dtype,
        )
        self.stem_bn = BatchNorm2dLayer(width0, dtype)

        self.stages: list[list[BasicBlock]] = []
        in_ch = width0
        for stage_idx, (width, blocks) in enumerate(
                zip(cfg.stage_widths, cfg.blocks_per_stage)):
            stage = []
            for block_idx in range(blocks):
                stride = 2 if (stage_idx > 0 and block_idx == 0) else 1
                stage.append(BasicBlock(in_ch, width, stride, rng, dtype))
                in_ch = width
            self.stages.append(stage)

        self.head = LinearLayer(in_ch, 1, rng, dtype, init_std=0.01)

    @property
    def dtype(self):
        return np.dtype(self.config.dtype)

    def forward(self, x: Tensor, training: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        cfg = self.config
        h = F.relu(self.stem_bn(self.stem_conv(x), training))
        if cfg.use_maxpool:
            h = F.maxpool2d(h, 3, 2)
        for stage in self.stages:
            for block in stage:
                h = block(h, training)
        h = F.global_avgpool(h)
        h = F.dropout(h, cfg.dropout, training=training, rng=rng)
        return self.head(h)

    def named_params(self):
        yield from self.stem_conv.named_params("stem.conv")
        yield from self.stem_bn.named_params("stem.bn")
        for i, stage in enumerate(self.stages, start=1):
            for j, block in enumerate(stage, start=1):
                yield from block.named_params(f"stage{i}.block{j}")
        yield from self.head.named_params("head.fc")

    def named_buffers(self):
        yield from self.stem_bn.named_buffers("stem.bn")
        for i, stage in enumerate(self.stages, start=1):
            for j, block in enumerate(stage, start=1):
                yield from block.named_buffers(f"stage{i}.block{j}")

    def params(self) -> list[Tensor]:
        return [t for _, t in self.named_params()]

    def zero_grad(self) -> None:
        for p in self.params():
            p.grad = None

    def state_items(self):
        """Parameters then buffers, as (name, ndarray) pairs for checkpoints."""
        for name, t in self.named_params():
            yield name, t.data
        yield from self.named_buffers()

    def load_state_items(self, items) -> None:
        tensors = dict(self.named_params())
        buffers = dict(self.named_buffers())
        for name, arr in items:
            if name in tensors:
                target = tensors[name].data
            elif name in buffers:
                target = buffers[name]
            else:
                raise ConfigError(f"checkpoint names unknown tensor {name!r}")
            if tuple(arr.shape) != tuple(target.shape):
                raise ConfigError(
                    f"checkpoint shape {arr.shape} != model shape "
                    f"{target.shape} for {name!r}"
                )
            target[...] = arr.astype(target.dtype)


def build(config: ModelConfig) -> ResGeneNet:
    """Construct the network; equal seeds give bit-identical parameters."""
    return ResGeneNet(config)


def predict(net: ResGeneNet, batch: np.ndarray, mode: str = "eval",
            rng: np.random.Generator | None = None) -> np.ndarray:
    """Run a (N, C, S, S) batch through the network; returns (N, 1).

    Eval mode is deterministic and dropout-free.  Train mode uses batch
    statistics and live dropout (a generator is then required if the
    configured rate is nonzero).
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    batch = np.asarray(batch, dtype=net.dtype)
    expected = (net.config.input_channels, net.config.input_side,
                net.config.input_side)
    if batch.ndim != 4 or batch.shape[1:] != expected:
        raise ValueError(
            f"batch shape {batch.shape} does not match (N, {expected[0]}, "
            f"{expected[1]}, {expected[2]})"
        )
    out = net.forward(Tensor(batch), training=(mode == "train"), rng=rng)
    return out.data


def _param_shapes(config: ModelConfig):
    """Closed-form (name, shape) walk mirroring the builder, no allocation."""
    cfg = config.resolved()
    k = cfg.stem_kernel
    width0 = cfg.stage_widths[0]
    yield "stem.conv.weight", (width0, cfg.input_channels, k, k)
    yield "stem.bn.gamma", (width0,)
    yield "stem.bn.beta", (width0,)
    in_ch = width0
    for stage_idx, (width, blocks) in enumerate(
            zip(cfg.stage_widths, cfg.blocks_per_stage)):
        for block_idx in range(blocks):
            stride = 2 if (stage_idx > 0 and block_idx == 0) else 1
            prefix = f"stage{stage_idx + 1}.block{block_idx + 1}"
            yield f"{prefix}.conv1.weight", (width, in_ch, 3, 3)
            yield f"{prefix}.bn1.gamma", (width,)
            yield f"{prefix}.bn1.beta", (width,)
            yield f"{prefix}.conv2.weight", (width, width, 3, 3)
            yield f"{prefix}.bn2.gamma", (width,)
            yield f"{prefix}.bn2.beta", (width,)
            if stride != 1 or in_ch != width:
                yield f"{prefix}.proj.weight", (width, in_ch, 1, 1)
                yield f"{prefix}.proj_bn.gamma", (width,)
                yield f"{prefix}.proj_bn.beta", (width,)
            in_ch = width
    yield "head.fc.weight", (in_ch, 1)
    yield "head.fc.bias", (1,)


def param_count(config: ModelConfig) -> int:
    """Number of trainable parameters implied by the configuration."""
    total = 0
    for _, shape in _param_shapes(config):
        total += int(np.prod(shape))
    return total
