"""The pluggable shrinkage operators, compared on the same noisy input.

Every denoiser maps a multichannel image series to one of the same
shape, so they are interchangeable inside the reconstruction loop. The
CNN variant needs a weight archive; this demo builds a throwaway
random-weight archive just to show the plumbing (a trained archive comes
from the trainer package, see frontend/README).

Run:  python3 demos/04_denoiser_plugins.py
"""

import tempfile

import numpy as np

from mrfrecon import (
    ArchitectureSpec,
    DenoiserSpec,
    denoise,
    load_weight_archive,
    save_weight_archive,
)

rng = np.random.default_rng(0)
clean = np.zeros((64, 64, 4))
clean[16:48, 16:48] = 1.0
clean[24:40, 24:40, :2] = 0.4
sigma = 5e-2
noisy = clean + sigma * rng.standard_normal(clean.shape)


def mse(x):
    return float(np.mean((x - clean) ** 2))


print(f"noisy input mse: {mse(noisy):.5f}\n")

specs = {
    "identity": DenoiserSpec(kind="identity"),
    "gaussian": DenoiserSpec(kind="gaussian", blur_sigma=1.0),
    "tv": DenoiserSpec(kind="tv", sigma=sigma, weight=1.5, tv_iters=40),
}
for name, spec in specs.items():
    out = denoise(spec, noisy)
    print(f"{name:>9}: mse {mse(out):.5f}")

# CNN plumbing: manifest-described residual U-Net, random float32 weights
arch = ArchitectureSpec(channels=(8, 16), blocks_per_scale=1,
                        in_channels=5, out_channels=4)
tensors = {
    name: (0.05 * rng.standard_normal(shape)).astype(np.float32)
    for name, shape in arch.layer_shapes()
}
with tempfile.TemporaryDirectory() as tmp:
    save_weight_archive(tmp, arch, tensors)
    archive = load_weight_archive(tmp)
    out = denoise(DenoiserSpec(kind="cnn", sigma=sigma, archive=archive), noisy)
    print(f"{'cnn':>9}: mse {mse(out):.5f}  (random weights, plumbing only)")
    print(f"\narchive hash: {archive.sha256[:16]}..., "
          f"{len(archive.tensors)} parameter tensors")
