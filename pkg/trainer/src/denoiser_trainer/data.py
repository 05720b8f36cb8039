"""Training patches from simulated magnetisation image series.

Reads (H, W, t) QMRT volumes produced by the reconstruction package's
simulate command, optionally resizes them (scale augmentation), cuts
overlapping patches on a fixed stride, augments with flips/rotations,
and normalises each patch to [0, 1]. Noise is added later, per training
step, so one clean patch serves many noise levels.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import qmrt


def load_volumes(directory) -> list[np.ndarray]:
    """All gt_tsmi.qmrt files under ``directory`` (recursive), (H, W, t)."""
    paths = sorted(Path(directory).rglob("gt_tsmi.qmrt"))
    if not paths:
        raise FileNotFoundError(f"no gt_tsmi.qmrt volumes under {directory}")
    return [qmrt.load(p).astype(np.float32) for p in paths]


def resize_volume(vol: np.ndarray, scale: float) -> np.ndarray:
    """Bilinear spatial resize by ``scale`` (channels preserved)."""
    h, w, _ = vol.shape
    nh, nw = max(8, int(round(h * scale))), max(8, int(round(w * scale)))
    ys = np.linspace(0, h - 1, nh)
    xs = np.linspace(0, w - 1, nw)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    top = vol[y0][:, x0] * (1 - wx) + vol[y0][:, x1] * wx
    bot = vol[y1][:, x0] * (1 - wx) + vol[y1][:, x1] * wx
    return (top * (1 - wy) + bot * wy).astype(np.float32)


def patch_grid_count(size: int, patch: int, stride: int) -> int:
    """Patches along one axis: floor((size - patch) / stride) + 1."""
    if size < patch:
        return 0
    return (size - patch) // stride + 1


def extract_patches(vol: np.ndarray, patch: int, stride: int) -> np.ndarray:
    """(N, patch, patch, t) patches on the stride grid; error if too small."""
    h, w, t = vol.shape
    ny = patch_grid_count(h, patch, stride)
    nx = patch_grid_count(w, patch, stride)
    if ny == 0 or nx == 0:
        raise ValueError(f"volume {h}x{w} smaller than patch {patch}")
    out = np.empty((ny * nx, patch, patch, t), dtype=np.float32)
    i = 0
    for iy in range(ny):
        for ix in range(nx):
            y, x = iy * stride, ix * stride
            out[i] = vol[y : y + patch, x : x + patch]
            i += 1
    return out


def augment_patches(
    patches: np.ndarray, flips: bool = True, rotations: bool = True
) -> np.ndarray:
    """Deterministic augmentation: axis flips and 90-degree rotations."""
    variants = [patches]
    if flips:
        variants.append(patches[:, ::-1])
        variants.append(patches[:, :, ::-1])
    if rotations:
        variants.append(np.rot90(patches, k=1, axes=(1, 2)))
    return np.ascontiguousarray(np.concatenate(variants, axis=0))


def normalize_patches(patches: np.ndarray) -> np.ndarray:
    """Per-patch affine map to [0, 1]; constant patches map to zero."""
    flat = patches.reshape(patches.shape[0], -1)
    lo = flat.min(axis=1)[:, None, None, None]
    hi = flat.max(axis=1)[:, None, None, None]
    span = np.where(hi > lo, hi - lo, 1.0)
    return ((patches - lo) / span).astype(np.float32)


def build_patch_set(
    volumes: list[np.ndarray],
    patch: int = 128,
    stride: int = 17,
    flips: bool = True,
    rotations: bool = True,
    resize_scales: tuple[float, ...] = (1.0, 0.7, 1.3),
    seed: int = 0,
) -> np.ndarray:
    """Clean normalised patches pooled over volumes and resize scales."""
    del seed  # extraction is deterministic; kept for config symmetry
    pools = []
    for vol in volumes:
        for scale in resize_scales:
            resized = vol if scale == 1.0 else resize_volume(vol, scale)
            if min(resized.shape[:2]) < patch:
                continue
            pools.append(extract_patches(resized, patch, stride))
    if not pools:
        raise ValueError("no volume is large enough for the patch size")
    patches = np.concatenate(pools, axis=0)
    patches = augment_patches(patches, flips=flips, rotations=rotations)
    return normalize_patches(patches)
