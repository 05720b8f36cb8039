"""Trainer command line.

    mrf-denoiser-trainer train --tsmi-dir DATA --output OUT \
        [--epochs N] [--patch-size P] [--fixed-sigma S] [--seed N] \
        [--channels 32,64,128] [--blocks 2] [--batch-size 16]

    mrf-denoiser-trainer fixture --weights OUT/weights --output FIXDIR \
        [--sigma 0.01]

``train`` consumes gt_tsmi.qmrt volumes (produced by the reconstruction
CLI's simulate command over many seeds) and exports a weight archive.
``fixture`` re-exports the parity fixture for an existing archive.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .export import export_parity_fixture, load_archive_into
from .model import DenoiserNet
from .train import TrainConfig, train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mrf-denoiser-trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train")
    p.add_argument("--tsmi-dir", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patch-size", type=int, default=128)
    p.add_argument("--stride", type=int, default=17)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--fixed-sigma", type=float, default=None)
    p.add_argument("--channels", type=str, default="32,64,128")
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--lr-halve-every", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("fixture")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--sigma", type=float, default=1e-2)
    p.add_argument("--image-channels", type=int, default=10)

    args = parser.parse_args(argv)
    if args.command == "train":
        cfg = TrainConfig(
            patch_size=args.patch_size,
            stride=args.stride,
            epochs=args.epochs,
            batch_size=args.batch_size,
            fixed_sigma=args.fixed_sigma,
            channels=tuple(int(c) for c in args.channels.split(",")),
            blocks_per_scale=args.blocks,
            lr_halve_every=args.lr_halve_every,
            seed=args.seed,
        )
        args.output.mkdir(parents=True, exist_ok=True)
        result = train(args.tsmi_dir, cfg, args.output)
        print(f"done: {result.steps} steps, val l1 {result.val_loss:.5f}")
        export_parity_fixture(_reload(args.output / "weights"), args.output / "fixture")
        print(f"parity fixture -> {args.output / 'fixture'}")
    else:
        model = _reload(args.weights, args.image_channels)
        export_parity_fixture(model, args.output, sigma=args.sigma)
        print(f"parity fixture -> {args.output}")
    return 0


def _reload(weights_dir: Path, image_channels: int | None = None) -> DenoiserNet:
    manifest = {}
    for line in (weights_dir / "manifest.txt").read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            manifest[key.strip()] = value.strip()
    channels = tuple(int(c) for c in manifest["channels"].split(","))
    model = DenoiserNet(
        channels,
        int(manifest["blocks_per_scale"]),
        int(manifest["out_channels"]),
    )
    load_archive_into(model, weights_dir)
    return model


if __name__ == "__main__":
    sys.exit(main())
