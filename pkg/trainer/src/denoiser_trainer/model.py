"""Residual U-Net denoiser (bias-free, noise-map conditioned).

The architecture mirrors the inference engine on the reconstruction
side layer for layer: head conv, per-scale residual blocks (two 3x3
convs, ReLU between, identity skip), 2x strided-conv downsampling, a
mirrored transposed-conv path with additive skips, tail conv. The input
is the noisy multichannel image with a constant noise-level map
appended; every convolution is bias-free.
"""

from __future__ import annotations

import torch
import torch.nn as nn


class ResBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.c1 = nn.Conv2d(channels, channels, 3, padding=1, bias=False)
        self.c2 = nn.Conv2d(channels, channels, 3, padding=1, bias=False)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        return x + self.c2(self.act(self.c1(x)))


class DenoiserNet(nn.Module):
    """channels: per-scale widths, coarsest last; in = image channels + 1."""

    def __init__(
        self,
        channels: tuple[int, ...] = (32, 64, 128),
        blocks_per_scale: int = 2,
        image_channels: int = 10,
    ):
        super().__init__()
        self.channels = tuple(channels)
        self.blocks_per_scale = blocks_per_scale
        self.image_channels = image_channels
        ch = self.channels
        b = blocks_per_scale

        self.head = nn.Conv2d(image_channels + 1, ch[0], 3, padding=1, bias=False)
        self.enc = nn.ModuleList(
            nn.ModuleList(ResBlock(ch[s]) for _ in range(b))
            for s in range(len(ch) - 1)
        )
        self.down = nn.ModuleList(
            nn.Conv2d(ch[s], ch[s + 1], 2, stride=2, bias=False)
            for s in range(len(ch) - 1)
        )
        self.body = nn.ModuleList(ResBlock(ch[-1]) for _ in range(b))
        self.up = nn.ModuleList(
            nn.ConvTranspose2d(ch[s + 1], ch[s], 2, stride=2, bias=False)
            for s in range(len(ch) - 1)
        )
        self.dec = nn.ModuleList(
            nn.ModuleList(ResBlock(ch[s]) for _ in range(b))
            for s in range(len(ch) - 1)
        )
        self.tail = nn.Conv2d(ch[0], image_channels, 3, padding=1, bias=False)
        self.apply(self._init)

    @staticmethod
    def _init(module):
        if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d)):
            nn.init.kaiming_uniform_(module.weight, nonlinearity="relu")

    def forward(self, noisy: torch.Tensor, sigma: torch.Tensor) -> torch.Tensor:
        """noisy: (B, t, H, W); sigma: (B,) noise levels in [0,1] units."""
        sigma_map = sigma.view(-1, 1, 1, 1).expand(-1, 1, *noisy.shape[2:])
        x = self.head(torch.cat([noisy, sigma_map], dim=1))
        skips = []
        for s, blocks in enumerate(self.enc):
            for block in blocks:
                x = block(x)
            skips.append(x)
            x = self.down[s](x)
        for block in self.body:
            x = block(x)
        for s in range(len(self.enc) - 1, -1, -1):
            x = self.up[s](x) + skips[s]
            for block in self.dec[s]:
                x = block(x)
        return self.tail(x)

    def archive_tensors(self) -> dict[str, torch.Tensor]:
        """Parameters keyed by the portable archive's layer names."""
        out = {"head": self.head.weight, "tail": self.tail.weight}
        for s, blocks in enumerate(self.enc):
            for i, block in enumerate(blocks):
                out[f"enc{s}.b{i}.c1"] = block.c1.weight
                out[f"enc{s}.b{i}.c2"] = block.c2.weight
            out[f"down{s}"] = self.down[s].weight
        for i, block in enumerate(self.body):
            out[f"body.b{i}.c1"] = block.c1.weight
            out[f"body.b{i}.c2"] = block.c2.weight
        for s in range(len(self.enc)):
            out[f"up{s}"] = self.up[s].weight
            for i, block in enumerate(self.dec[s]):
                out[f"dec{s}.b{i}.c1"] = block.c1.weight
                out[f"dec{s}.b{i}.c2"] = block.c2.weight
        return out

    def load_archive_tensors(self, tensors: dict) -> None:
        with torch.no_grad():
            for name, param in self.archive_tensors().items():
                param.copy_(torch.as_tensor(tensors[name]))
