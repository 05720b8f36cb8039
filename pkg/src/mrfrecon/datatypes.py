"""Core array-backed domain types shared by the whole package.

Conventions used throughout:

* images are ``(height, width)`` numpy arrays;
* a TSMI is ``(height, width, channels)`` float64, channels being the
  dimension-reduced temporal axis;
* k-space sample coordinates are integer ``(kx, ky)`` pairs on the
  unshifted FFT grid, so DC is ``(0, 0)``;
* k-space data is ``(frames, samples)`` complex128.

Instances are treated as immutable after construction and are safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TSMI:
    """Time-series of magnetisation images, compressed to ``channels``."""

    values: np.ndarray  # (H, W, t) float64

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"TSMI values must be (H, W, t), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("TSMI values must be finite")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class SamplingMask:
    """Per-frame k-space sample locations on a Cartesian grid."""

    grid: tuple[int, int]  # (width, height)
    indices: np.ndarray  # (frames, samples, 2) int64, columns (kx, ky)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "grid", (int(self.grid[0]), int(self.grid[1])))
        if idx.ndim != 3 or idx.shape[2] != 2:
            raise ValueError(f"mask indices must be (T, m, 2), got {idx.shape}")

    @property
    def frames(self) -> int:
        return self.indices.shape[0]

    @property
    def samples_per_frame(self) -> int:
        return self.indices.shape[1]

    def validate(self) -> None:
        """Assert the typed invariants (on-grid, unique within frame)."""
        w, h = self.grid
        idx = self.indices
        if idx.min() < 0 or idx[:, :, 0].max() >= w or idx[:, :, 1].max() >= h:
            raise ValueError("mask contains off-grid indices")
        flat = idx[:, :, 1].astype(np.int64) * w + idx[:, :, 0]
        for k in range(self.frames):
            if np.unique(flat[k]).size != self.samples_per_frame:
                raise ValueError(f"mask frame {k} contains duplicate indices")


@dataclass(frozen=True)
class KSpaceData:
    """Subsampled Fourier measurements tied to their sampling mask."""

    values: np.ndarray  # (frames, samples) complex128
    mask: SamplingMask

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.complex128)
        object.__setattr__(self, "values", arr)
        if arr.shape != (self.mask.frames, self.mask.samples_per_frame):
            raise ValueError(
                f"k-space values {arr.shape} do not match mask "
                f"({self.mask.frames}, {self.mask.samples_per_frame})"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("k-space values must be finite")

    @property
    def frames(self) -> int:
        return self.mask.frames

    @property
    def samples_per_frame(self) -> int:
        return self.mask.samples_per_frame


@dataclass(frozen=True)
class TissueMaps:
    """Per-voxel T1/T2 (seconds), proton density, and foreground mask."""

    t1: np.ndarray
    t2: np.ndarray
    pd: np.ndarray
    mask: np.ndarray  # bool, True on foreground

    def __post_init__(self):
        t1 = np.asarray(self.t1, dtype=np.float64)
        t2 = np.asarray(self.t2, dtype=np.float64)
        pd = np.asarray(self.pd, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        for name, arr in (("t1", t1), ("t2", t2), ("pd", pd), ("mask", mask)):
            if arr.shape != t1.shape or arr.ndim != 2:
                raise ValueError(f"tissue map '{name}' has shape {arr.shape}")
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)
        object.__setattr__(self, "pd", pd)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, int]:
        return self.t1.shape

    def validate(self) -> None:
        fg = self.mask
        if np.any(self.t1[fg] <= 0) or np.any(self.t2[fg] <= 0):
            raise ValueError("foreground T1/T2 must be positive")
        if np.any(self.t2[fg] > self.t1[fg]):
            raise ValueError("foreground requires t2 <= t1")
        if np.any(self.pd[fg] < 0):
            raise ValueError("foreground PD must be non-negative")
        bg = ~fg
        if np.any(self.t1[bg] != 0) or np.any(self.t2[bg] != 0) or np.any(self.pd[bg] != 0):
            raise ValueError("background pixels must be zero")

    def stack(self) -> np.ndarray:
        """Stack maps as a (4, H, W) tensor: t1, t2, pd, mask."""
        return np.stack([self.t1, self.t2, self.pd, self.mask.astype(np.float64)])

    @classmethod
    def from_stack(cls, stacked: np.ndarray) -> "TissueMaps":
        if stacked.ndim != 3 or stacked.shape[0] != 4:
            raise ValueError(f"expected (4, H, W) stack, got {stacked.shape}")
        return cls(stacked[0], stacked[1], stacked[2], stacked[3] > 0.5)
