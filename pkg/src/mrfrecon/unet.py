"""Portable CNN weight archives and their numpy inference engine.

An archive is a directory: ``manifest.txt`` ("key = value" lines
describing a residual U-Net and listing its parameter tensors in
execution order, plus an integrity hash) and one QMRT file per
parameter. Convolution weights follow the (C_out, C_in, kH, kW) layout;
transposed convolutions use (C_in, C_out, kH, kW). All convolutions are
bias-free.

The network: a head convolution; per scale, ``blocks`` residual blocks
(two 3x3 convolutions with an activation between, identity skip) then a
2x strided-convolution downsample; a mirrored upsampling path with
transposed convolutions and additive skip connections; a tail
convolution back to the image channels. Inference runs in float32.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensorio import read_tensor, write_tensor

MANIFEST_NAME = "manifest.txt"
ARCHIVE_FORMAT = "qmrt-weights-v1"


class ArchiveError(ValueError):
    """Raised for missing, malformed, or inconsistent weight archives."""


@dataclass(frozen=True)
class ArchitectureSpec:
    """Residual U-Net hyperparameters stored in the manifest."""

    channels: tuple[int, ...]  # per scale, coarsest last
    blocks_per_scale: int
    in_channels: int  # image channels + 1 noise-map channel
    out_channels: int
    activation: str = "relu"

    @property
    def scales(self) -> int:
        return len(self.channels)

    def layer_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Layer names with expected tensor shapes, in execution order."""
        ch = self.channels
        b = self.blocks_per_scale
        layers: list[tuple[str, tuple[int, ...]]] = [
            ("head", (ch[0], self.in_channels, 3, 3))
        ]
        for s in range(self.scales - 1):
            for i in range(b):
                layers.append((f"enc{s}.b{i}.c1", (ch[s], ch[s], 3, 3)))
                layers.append((f"enc{s}.b{i}.c2", (ch[s], ch[s], 3, 3)))
            layers.append((f"down{s}", (ch[s + 1], ch[s], 2, 2)))
        for i in range(b):
            layers.append((f"body.b{i}.c1", (ch[-1], ch[-1], 3, 3)))
            layers.append((f"body.b{i}.c2", (ch[-1], ch[-1], 3, 3)))
        for s in range(self.scales - 2, -1, -1):
            layers.append((f"up{s}", (ch[s + 1], ch[s], 2, 2)))
            for i in range(b):
                layers.append((f"dec{s}.b{i}.c1", (ch[s], ch[s], 3, 3)))
                layers.append((f"dec{s}.b{i}.c2", (ch[s], ch[s], 3, 3)))
        layers.append(("tail", (self.out_channels, ch[0], 3, 3)))
        return layers


@dataclass(frozen=True)
class WeightArchive:
    """Loaded archive: architecture plus named float32 tensors."""

    arch: ArchitectureSpec
    tensors: dict[str, np.ndarray]
    sha256: str


def _parse_manifest(path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for ln, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ArchiveError(f"{path}:{ln}: expected 'key = value'")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def _archive_hash(directory: Path, layer_names: list[str]) -> str:
    digest = hashlib.sha256()
    for name in layer_names:
        digest.update((directory / f"{name}.qmrt").read_bytes())
    return digest.hexdigest()


def load_weight_archive(directory: str | os.PathLike) -> WeightArchive:
    """Load and fully validate an archive before any inference."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ArchiveError(f"missing manifest: {manifest_path}")
    entries = _parse_manifest(manifest_path)

    if entries.get("format") != ARCHIVE_FORMAT:
        raise ArchiveError(f"{manifest_path}: unknown format {entries.get('format')!r}")
    try:
        arch = ArchitectureSpec(
            channels=tuple(int(c) for c in entries["channels"].split(",")),
            blocks_per_scale=int(entries["blocks_per_scale"]),
            in_channels=int(entries["in_channels"]),
            out_channels=int(entries["out_channels"]),
            activation=entries.get("activation", "relu"),
        )
    except KeyError as exc:
        raise ArchiveError(f"{manifest_path}: missing key {exc}") from exc
    if arch.activation != "relu":
        raise ArchiveError(f"unsupported activation {arch.activation!r}")
    if arch.in_channels != arch.out_channels + 1:
        raise ArchiveError(
            f"in_channels ({arch.in_channels}) must be out_channels + 1 "
            f"({arch.out_channels} + noise map)"
        )

    expected = arch.layer_shapes()
    listed = [s.strip() for s in entries.get("layers", "").split(",") if s.strip()]
    if listed != [name for name, _ in expected]:
        raise ArchiveError(f"{manifest_path}: layer list does not match architecture")

    tensors: dict[str, np.ndarray] = {}
    for name, shape in expected:
        tensor_path = directory / f"{name}.qmrt"
        if not tensor_path.is_file():
            raise ArchiveError(f"missing tensor for layer {name!r}: {tensor_path}")
        arr = read_tensor(tensor_path)
        if arr.shape != shape:
            raise ArchiveError(
                f"layer {name!r}: expected shape {shape}, file has {arr.shape}"
            )
        tensors[name] = arr.astype(np.float32)

    actual_hash = _archive_hash(directory, [name for name, _ in expected])
    declared = entries.get("sha256", "")
    if declared and declared != actual_hash:
        raise ArchiveError(f"{manifest_path}: integrity hash mismatch")
    return WeightArchive(arch, tensors, actual_hash)


def save_weight_archive(
    directory: str | os.PathLike,
    arch: ArchitectureSpec,
    tensors: dict[str, np.ndarray],
) -> None:
    """Write an archive (manifest + one QMRT file per parameter)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    expected = arch.layer_shapes()
    for name, shape in expected:
        if name not in tensors:
            raise ArchiveError(f"missing tensor for layer {name!r}")
        arr = np.asarray(tensors[name], dtype=np.float32)
        if arr.shape != shape:
            raise ArchiveError(
                f"layer {name!r}: expected shape {shape}, got {arr.shape}"
            )
        write_tensor(arr, directory / f"{name}.qmrt")
    digest = _archive_hash(directory, [name for name, _ in expected])
    lines = [
        f"format = {ARCHIVE_FORMAT}",
        "architecture = residual-unet",
        f"scales = {arch.scales}",
        f"channels = {','.join(str(c) for c in arch.channels)}",
        f"blocks_per_scale = {arch.blocks_per_scale}",
        f"in_channels = {arch.in_channels}",
        f"out_channels = {arch.out_channels}",
        f"activation = {arch.activation}",
        f"layers = {','.join(name for name, _ in expected)}",
        f"sha256 = {digest}",
    ]
    (directory / MANIFEST_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _conv3x3(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """3x3 cross-correlation, zero padding 1, stride 1. x is (H, W, Ci)."""
    h, wd, ci = x.shape
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    win = sliding_window_view(xp, (3, 3), axis=(0, 1))  # (H, W, Ci, 3, 3)
    cols = win.reshape(h * wd, ci * 9)
    wmat = w.transpose(1, 2, 3, 0).reshape(ci * 9, w.shape[0])
    return (cols @ wmat).reshape(h, wd, w.shape[0])


def _conv2x2_down(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """2x2 convolution with stride 2 (halves H and W)."""
    h, wd, ci = x.shape
    h2, w2 = h // 2, wd // 2
    blocks = (
        x[: h2 * 2, : w2 * 2]
        .reshape(h2, 2, w2, 2, ci)
        .transpose(0, 2, 4, 1, 3)
        .reshape(h2 * w2, ci * 4)
    )
    wmat = w.transpose(1, 2, 3, 0).reshape(ci * 4, w.shape[0])
    return (blocks @ wmat).reshape(h2, w2, w.shape[0])


def _conv2x2_up(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """2x2 transposed convolution with stride 2 (doubles H and W)."""
    h, wd, _ = x.shape
    co = w.shape[1]
    tmp = np.tensordot(x, w, axes=([2], [0]))  # (H, W, Co, 2, 2)
    return tmp.transpose(0, 3, 1, 4, 2).reshape(2 * h, 2 * wd, co)


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _res_block(x: np.ndarray, w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    return x + _conv3x3(_relu(_conv3x3(x, w1)), w2)


def cnn_infer(archive: WeightArchive, x_norm: np.ndarray, sigma: float) -> np.ndarray:
    """Run the archived network on a [0,1] volume with noise level sigma.

    Spatial dims not divisible by 2^(scales-1) are reflect-padded and
    cropped back. Returns float32 of the input's shape.
    """
    arch = archive.arch
    x = np.asarray(x_norm, dtype=np.float32)
    if x.ndim != 3 or x.shape[2] != arch.out_channels:
        raise ValueError(
            f"input must be (H, W, {arch.out_channels}), got {x.shape}"
        )
    h, w = x.shape[:2]
    align = 2 ** (arch.scales - 1)
    pad_h = (-h) % align
    pad_w = (-w) % align
    if pad_h or pad_w:
        x = np.pad(x, ((0, pad_h), (0, pad_w), (0, 0)), mode="symmetric")

    sigma_map = np.full(x.shape[:2] + (1,), sigma, dtype=np.float32)
    x = np.concatenate([x, sigma_map], axis=2)

    ten = archive.tensors
    b = arch.blocks_per_scale
    x = _conv3x3(x, ten["head"])
    skips: list[np.ndarray] = []
    for s in range(arch.scales - 1):
        for i in range(b):
            x = _res_block(x, ten[f"enc{s}.b{i}.c1"], ten[f"enc{s}.b{i}.c2"])
        skips.append(x)
        x = _conv2x2_down(x, ten[f"down{s}"])
    for i in range(b):
        x = _res_block(x, ten[f"body.b{i}.c1"], ten[f"body.b{i}.c2"])
    for s in range(arch.scales - 2, -1, -1):
        x = _conv2x2_up(x, ten[f"up{s}"]) + skips[s]
        for i in range(b):
            x = _res_block(x, ten[f"dec{s}.b{i}.c1"], ten[f"dec{s}.b{i}.c2"])
    x = _conv3x3(x, ten["tail"])
    return x[:h, :w]
