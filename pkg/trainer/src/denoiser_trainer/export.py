"""Portable weight-archive writing and the cross-package parity fixture.

Archive layout (the contract with the inference side): a directory with
``manifest.txt`` ("key = value" lines: architecture hyperparameters, the
layer list in execution order, a sha256 over the tensor files) and one
float32 QMRT file per parameter tensor.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import torch

from . import qmrt
from .model import DenoiserNet

ARCHIVE_FORMAT = "qmrt-weights-v1"


def layer_order(model: DenoiserNet) -> list[str]:
    names = ["head"]
    b = model.blocks_per_scale
    scales = len(model.channels)
    for s in range(scales - 1):
        for i in range(b):
            names += [f"enc{s}.b{i}.c1", f"enc{s}.b{i}.c2"]
        names.append(f"down{s}")
    for i in range(b):
        names += [f"body.b{i}.c1", f"body.b{i}.c2"]
    for s in range(scales - 2, -1, -1):
        names.append(f"up{s}")
        for i in range(b):
            names += [f"dec{s}.b{i}.c1", f"dec{s}.b{i}.c2"]
    names.append("tail")
    return names


def save_archive(model: DenoiserNet, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tensors = model.archive_tensors()
    order = layer_order(model)
    digest = hashlib.sha256()
    for name in order:
        arr = tensors[name].detach().cpu().numpy().astype(np.float32)
        path = directory / f"{name}.qmrt"
        qmrt.save(arr, path)
        digest.update(path.read_bytes())
    lines = [
        f"format = {ARCHIVE_FORMAT}",
        "architecture = residual-unet",
        f"scales = {len(model.channels)}",
        f"channels = {','.join(str(c) for c in model.channels)}",
        f"blocks_per_scale = {model.blocks_per_scale}",
        f"in_channels = {model.image_channels + 1}",
        f"out_channels = {model.image_channels}",
        "activation = relu",
        f"layers = {','.join(order)}",
        f"sha256 = {digest.hexdigest()}",
    ]
    (directory / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_archive_into(model: DenoiserNet, directory) -> None:
    directory = Path(directory)
    tensors = {
        name: qmrt.load(directory / f"{name}.qmrt") for name in layer_order(model)
    }
    model.load_archive_tensors(tensors)


def export_parity_fixture(
    model: DenoiserNet, directory, sigma: float = 1e-2,
    size: tuple[int, int] = (32, 48), seed: int = 42,
) -> None:
    """Fixed (input, expected output) pair for the inference parity test.

    The input is a seeded random [0,1] volume; the expected output comes
    from this package's own forward pass in eval mode, so the consumer
    can verify its independent engine against it.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    h, w = size
    x = rng.uniform(0.0, 1.0, (h, w, model.image_channels)).astype(np.float32)
    model.eval()
    with torch.no_grad():
        inp = torch.from_numpy(x).permute(2, 0, 1)[None]
        out = model(inp, torch.tensor([sigma], dtype=torch.float32))
    expected = out[0].permute(1, 2, 0).numpy().astype(np.float32)
    qmrt.save(x, directory / "input.qmrt")
    qmrt.save(expected, directory / "expected_output.qmrt")
    (directory / "fixture.txt").write_text(
        f"sigma = {sigma}\nseed = {seed}\n", encoding="utf-8"
    )
