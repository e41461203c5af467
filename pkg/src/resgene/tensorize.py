"""Reshape encoded SNP sequences into square images or C-channel tensors.

A length-d sequence either fills one S x S grid row-major (image mode) or
is cut into C contiguous segments of S*S values, one per channel (tensor
mode).  The segment layout places sequence positions i and i + S*S at the
same spatial location of adjacent channels, so a single k x k kernel that
spans all channels reads SNPs that sat S*S apart in the original sequence.
Tail cells beyond d are padded with the missing-value code.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import LayoutError

IMAGE_2D = "image2d"
TENSOR_3D = "tensor3d"

_BLOB_MAGIC = b"RGTN"


@dataclass(frozen=True)
class SnpLayout:
    """Placement of a length-d sequence into a (channels, side, side) grid."""

    d: int
    mode: str
    channels: int
    side: int
    pad_count: int
    pad_value: float = -1.0
    fill_order: str = "row_major_contiguous"

    def __post_init__(self):
        if self.mode not in (IMAGE_2D, TENSOR_3D):
            raise LayoutError(f"unknown layout mode {self.mode!r}")
        if self.mode == IMAGE_2D and self.channels != 1:
            raise LayoutError("image2d layouts are single-channel")
        capacity = self.side * self.side * self.channels
        if capacity < self.d or self.pad_count != capacity - self.d:
            raise LayoutError(
                f"inconsistent layout: side={self.side} channels={self.channels} "
                f"d={self.d} pad_count={self.pad_count}"
            )

    @property
    def capacity(self) -> int:
        return self.side * self.side * self.channels


def _ceil_sqrt(num: int, den: int) -> int:
    """Smallest s >= 1 with s*s*den >= num, computed in exact integers."""
    s = math.isqrt((num + den - 1) // den)
    if s * s * den < num:
        s += 1
    return max(s, 1)


def plan_layout(d: int, mode: str = IMAGE_2D, channels: int = 1,
                pad_value: float = -1.0) -> SnpLayout:
    """Choose the minimal square side for d SNPs in the requested mode.

    Image mode uses side ceil(sqrt(d)); tensor mode uses ceil(sqrt(d / C)).
    The ceiling guarantees no SNP is discarded; the remainder of the grid
    is padding.

    Raises
    ------
    LayoutError
        For d < 1, channels < 1, channels > d, or an image2d request with
        channels != 1.
    """
    if d < 1:
        raise LayoutError(f"SNP count must be positive, got {d}")
    if channels < 1:
        raise LayoutError(f"channel count must be positive, got {channels}")
    if channels > d:
        raise LayoutError(f"channels ({channels}) exceed SNP count ({d})")
    if mode == IMAGE_2D:
        if channels != 1:
            raise LayoutError("image2d requires channels=1")
        side = _ceil_sqrt(d, 1)
    elif mode == TENSOR_3D:
        side = _ceil_sqrt(d, channels)
    else:
        raise LayoutError(f"unknown layout mode {mode!r}")
    pad = side * side * channels - d
    return SnpLayout(d=d, mode=mode, channels=channels, side=side,
                     pad_count=pad, pad_value=pad_value)


def _padded(seq, layout: SnpLayout, dtype) -> np.ndarray:
    arr = np.asarray(seq, dtype=dtype).ravel()
    if arr.size != layout.d:
        raise LayoutError(f"sequence length {arr.size} != layout d {layout.d}")
    if layout.pad_count == 0:
        return arr
    out = np.full(layout.capacity, layout.pad_value, dtype=dtype)
    out[: layout.d] = arr
    return out


def to_image2d(seq, layout: SnpLayout, dtype=np.float64) -> np.ndarray:
    """Fill an S x S grid row-major from the sequence; tail cells are padding."""
    if layout.mode != IMAGE_2D:
        raise LayoutError(f"layout mode is {layout.mode!r}, expected {IMAGE_2D!r}")
    return _padded(seq, layout, dtype).reshape(layout.side, layout.side)


def to_tensor3d(seq, layout: SnpLayout, dtype=np.float64) -> np.ndarray:
    """Split the sequence into C contiguous segments, one per channel.

    Segment c (S*S values) fills channel c row-major, so the result is the
    padded sequence reshaped to (C, S, S).
    """
    if layout.mode != TENSOR_3D:
        raise LayoutError(f"layout mode is {layout.mode!r}, expected {TENSOR_3D!r}")
    return _padded(seq, layout, dtype).reshape(
        layout.channels, layout.side, layout.side
    )


def from_grid(grid: np.ndarray, layout: SnpLayout) -> np.ndarray:
    """Read back the original sequence from a grid (drops pad positions)."""
    return np.asarray(grid).ravel()[: layout.d]


@dataclass(frozen=True)
class CoverageEstimate:
    """Stacked-layer counts needed for one output unit to see every SNP."""

    kernel: int
    layers_2d: float
    layers_tensor: float

    @property
    def ratio(self) -> float:
        return self.layers_2d / self.layers_tensor


def coverage(d: int, kernel: int, channels: int = 1) -> CoverageEstimate:
    """Estimate full-coverage layer counts for both representations.

    With a k x k kernel, a square image of side sqrt(d) needs about
    sqrt(d)/k stacked layers before one unit depends on the whole input;
    the C-channel tensor of side sqrt(d/C) needs sqrt(d/C)/k.  Their ratio
    is sqrt(C) independent of d and k.
    """
    if d < 1 or kernel < 1 or channels < 1:
        raise LayoutError("d, kernel, and channels must all be >= 1")
    layers_2d = math.sqrt(d) / kernel
    layers_t = math.sqrt(d / channels) / kernel
    return CoverageEstimate(kernel=kernel, layers_2d=layers_2d, layers_tensor=layers_t)


def dump_tensor_blob(path, tensor: np.ndarray) -> None:
    """Write a (C, S, S) tensor as the binary blob format.

    Layout: 16-byte header (magic ``RGTN`` then little-endian u32 C, S, S)
    followed by C*S*S little-endian float32 values in C order.
    """
    arr = np.asarray(tensor, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise LayoutError(f"expected a (C, S, S) tensor, got shape {arr.shape}")
    c, s, _ = arr.shape
    with open(path, "wb") as fh:
        fh.write(_BLOB_MAGIC)
        fh.write(struct.pack("<III", c, s, s))
        fh.write(arr.astype("<f4").tobytes(order="C"))


def load_tensor_blob(path) -> np.ndarray:
    """Read a tensor blob back into a (C, S, S) float32 array."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != _BLOB_MAGIC:
            raise LayoutError(f"{path}: not a tensor blob (bad magic)")
        c, s1, s2 = struct.unpack("<III", header[4:])
        if s1 != s2:
            raise LayoutError(f"{path}: non-square sides {s1} x {s2}")
        payload = fh.read()
    expected = c * s1 * s2 * 4
    if len(payload) != expected:
        raise LayoutError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(c, s1, s2).copy()
