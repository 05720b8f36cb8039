"""Training loop and portable-archive export.

AWGN denoiser training: per step, sample a noise level per patch
(log-uniform over the configured range, or a single fixed level), add
Gaussian noise to the clean [0,1] patches, and minimise the L1 distance
between the network output and the clean patch. Adam with the learning
rate halved on a step schedule, batch size and patch geometry per the
config.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import torch

from .data import build_patch_set, load_volumes
from .export import save_archive
from .model import DenoiserNet


@dataclass
class TrainConfig:
    patch_size: int = 128
    stride: int = 17
    noise_range: tuple[float, float] = (1e-4, 1.0)  # log-uniform sigma
    fixed_sigma: float | None = None  # single-level variant when set
    epochs: int = 50
    batch_size: int = 16
    lr: float = 1e-4
    lr_halve_every: int = 100_000  # steps
    channels: tuple[int, ...] = (32, 64, 128)
    blocks_per_scale: int = 2
    flips: bool = True
    rotations: bool = True
    resize_scales: tuple[float, ...] = (1.0, 0.7, 1.3)
    val_fraction: float = 0.05
    seed: int = 0

    def __post_init__(self):
        scales = len(self.channels)
        if self.patch_size % 2 ** (scales - 1):
            raise ValueError(
                f"patch_size {self.patch_size} not divisible by 2^{scales - 1}"
            )
        if self.fixed_sigma is not None and self.fixed_sigma < 0:
            raise ValueError("fixed_sigma must be >= 0")


@dataclass
class TrainResult:
    steps: int
    train_loss: float
    val_loss: float
    seconds: float
    history: list[tuple[int, float]] = field(default_factory=list)


def _sample_sigma(cfg: TrainConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.fixed_sigma is not None:
        return np.full(n, cfg.fixed_sigma, dtype=np.float32)
    lo, hi = math.log10(cfg.noise_range[0]), math.log10(cfg.noise_range[1])
    return (10.0 ** rng.uniform(lo, hi, n)).astype(np.float32)


def validation_loss(
    model: DenoiserNet, patches: np.ndarray, sigma: float, seed: int = 1234
) -> float:
    """L1 loss on a fixed noisy version of the given patches."""
    rng = np.random.default_rng(seed)
    noisy = patches + sigma * rng.standard_normal(patches.shape).astype(np.float32)
    model.eval()
    losses = []
    with torch.no_grad():
        for i in range(0, len(patches), 16):
            clean_t = torch.from_numpy(patches[i : i + 16]).permute(0, 3, 1, 2)
            noisy_t = torch.from_numpy(noisy[i : i + 16]).permute(0, 3, 1, 2)
            sig = torch.full((clean_t.shape[0],), sigma)
            out = model(noisy_t, sig)
            losses.append(float(torch.mean(torch.abs(out - clean_t))))
    return float(np.mean(losses))


def train(
    tsmi_dir,
    cfg: TrainConfig,
    out_dir,
    log=print,
) -> TrainResult:
    """Train on the volumes under ``tsmi_dir`` and export the archive."""
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    t0 = time.perf_counter()

    volumes = load_volumes(tsmi_dir)
    patches = build_patch_set(
        volumes,
        patch=cfg.patch_size,
        stride=cfg.stride,
        flips=cfg.flips,
        rotations=cfg.rotations,
        resize_scales=cfg.resize_scales,
    )
    n_val = max(1, int(len(patches) * cfg.val_fraction))
    order = rng.permutation(len(patches))
    val = patches[order[:n_val]]
    trainset = patches[order[n_val:]]
    image_channels = patches.shape[3]
    log(f"patches: {len(trainset)} train / {len(val)} val, "
        f"{cfg.patch_size}x{cfg.patch_size}x{image_channels}")

    model = DenoiserNet(cfg.channels, cfg.blocks_per_scale, image_channels)
    n_params = sum(p.numel() for p in model.parameters())
    log(f"model: scales={len(cfg.channels)} channels={cfg.channels} "
        f"({n_params} parameters)")
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    step = 0
    history: list[tuple[int, float]] = []
    running = 0.0
    last_log = 0.0
    for epoch in range(cfg.epochs):
        model.train()
        order = rng.permutation(len(trainset))
        for start in range(0, len(trainset) - cfg.batch_size + 1, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            clean = trainset[idx]
            sigma = _sample_sigma(cfg, len(idx), rng)
            noise = rng.standard_normal(clean.shape).astype(np.float32)
            noisy = clean + sigma[:, None, None, None] * noise

            clean_t = torch.from_numpy(clean).permute(0, 3, 1, 2)
            noisy_t = torch.from_numpy(noisy).permute(0, 3, 1, 2)
            out = model(noisy_t, torch.from_numpy(sigma))
            loss = torch.mean(torch.abs(out - clean_t))
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged at step {step} (loss={loss.item()})"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            step += 1
            running = 0.98 * running + 0.02 * float(loss) if step > 1 else float(loss)
            if step % cfg.lr_halve_every == 0:
                for group in opt.param_groups:
                    group["lr"] *= 0.5
                log(f"step {step}: lr halved to {opt.param_groups[0]['lr']:.2e}")
            if time.perf_counter() - last_log > 30:
                log(f"epoch {epoch + 1}/{cfg.epochs} step {step}: "
                    f"l1 {running:.5f} ({time.perf_counter() - t0:.0f}s)")
                last_log = time.perf_counter()
        history.append((step, running))

    val_sigma = cfg.fixed_sigma if cfg.fixed_sigma is not None else 1e-2
    val_loss = validation_loss(model, val, val_sigma)
    log(f"validation l1 at sigma={val_sigma}: {val_loss:.5f}")

    out_dir = Path(out_dir)
    save_archive(model, out_dir / "weights")
    meta = asdict(cfg) | {
        "steps": step,
        "train_loss": running,
        "val_loss": val_loss,
        "val_sigma": val_sigma,
    }
    (out_dir / "training.json").write_text(json.dumps(meta, indent=2))
    np.save(out_dir / "val_patches.npy", val)
    log(f"archive exported to {out_dir / 'weights'}")
    return TrainResult(step, running, val_loss, time.perf_counter() - t0, history)
