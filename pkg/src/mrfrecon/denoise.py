"""Pluggable shrinkage operators for the iterative reconstruction.

A denoiser maps a TSMI to a TSMI of the same shape. Four kinds:
identity, per-channel Gaussian blur, per-channel isotropic TV via
Chambolle's dual projection, and a CNN run from a portable weight
archive. The CNN always operates in a [0,1]-normalised intensity frame
(whole volume), with the noise level appended as an extra channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import gaussian_filter

from .datatypes import TSMI
from .unet import WeightArchive, cnn_infer

DENOISER_KINDS = ("identity", "gaussian", "tv", "cnn")


@dataclass(frozen=True)
class DenoiserSpec:
    """Denoiser selection plus its operating noise level and settings.

    ``sigma`` is the AWGN level in [0,1]-normalised intensity units
    (the CNN's conditioning input; also scales the TV weight).
    """

    kind: str = "identity"
    sigma: float = 1e-2
    blur_sigma: float = 1.0  # gaussian kind: kernel std in pixels
    weight: float = 1.5  # tv kind: lambda_tv = weight * sigma
    tv_iters: int = 30
    archive: Optional[WeightArchive] = None

    def __post_init__(self):
        if self.kind not in DENOISER_KINDS:
            raise ValueError(f"unknown denoiser kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.kind == "cnn" and self.archive is None:
            raise ValueError("cnn denoiser requires a loaded weight archive")


@dataclass(frozen=True)
class NormState:
    """Affine record mapping a volume to [0,1] and back."""

    offset: float
    scale: float
    degenerate: bool  # zero dynamic range: normalisation was skipped


def normalize_range(x: np.ndarray) -> tuple[np.ndarray, NormState]:
    """Affinely map the whole volume to [0,1]; exact inverse recorded."""
    lo = float(np.min(x))
    hi = float(np.max(x))
    if hi <= lo:
        return x.copy(), NormState(0.0, 1.0, True)
    scale = hi - lo
    return (x - lo) / scale, NormState(lo, scale, False)


def denormalize_range(x_norm: np.ndarray, state: NormState) -> np.ndarray:
    if state.degenerate:
        return x_norm.copy()
    return x_norm * state.scale + state.offset


def gaussian_denoise(x: np.ndarray, blur_sigma: float) -> np.ndarray:
    """Per-channel convolution with a normalised Gaussian kernel."""
    return gaussian_filter(x, sigma=(blur_sigma, blur_sigma, 0.0), mode="nearest")


def tv_denoise_channel(img: np.ndarray, weight: float, iters: int) -> np.ndarray:
    """Isotropic TV proximal step, Chambolle's dual projection (tau=0.25)."""
    if weight <= 0:
        return img.copy()
    p = np.zeros((2,) + img.shape)
    tau = 0.25
    for _ in range(iters):
        # div p - img/weight, then its forward-difference gradient
        div_p = np.zeros_like(img)
        div_p[:-1] += p[0, :-1]
        div_p[1:] -= p[0, :-1]
        div_p[:, :-1] += p[1, :, :-1]
        div_p[:, 1:] -= p[1, :, :-1]
        u = div_p - img / weight
        gx = np.zeros_like(img)
        gy = np.zeros_like(img)
        gx[:-1] = u[1:] - u[:-1]
        gy[:, :-1] = u[:, 1:] - u[:, :-1]
        mag = np.sqrt(gx**2 + gy**2)
        denom = 1.0 + tau * mag
        p[0] = (p[0] + tau * gx) / denom
        p[1] = (p[1] + tau * gy) / denom
    div_p = np.zeros_like(img)
    div_p[:-1] += p[0, :-1]
    div_p[1:] -= p[0, :-1]
    div_p[:, :-1] += p[1, :, :-1]
    div_p[:, 1:] -= p[1, :, :-1]
    return img - weight * div_p


def tv_denoise(x: np.ndarray, weight: float, iters: int) -> np.ndarray:
    out = np.empty_like(x)
    for c in range(x.shape[2]):
        out[:, :, c] = tv_denoise_channel(x[:, :, c], weight, iters)
    return out


def total_variation(x: np.ndarray) -> float:
    """Channel-summed isotropic TV (forward differences)."""
    gx = np.diff(x, axis=0, append=x[-1:])
    gy = np.diff(x, axis=1, append=x[:, -1:])
    return float(np.sum(np.sqrt(gx**2 + gy**2)))


def denoise(spec: DenoiserSpec, x: TSMI | np.ndarray) -> np.ndarray:
    """Apply the configured denoiser; output shape equals input shape."""
    if isinstance(x, TSMI):
        x = x.values
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("denoiser input must be finite")

    if spec.kind == "identity":
        return x.copy()
    if spec.kind == "gaussian":
        return gaussian_denoise(x, spec.blur_sigma)
    if spec.kind == "tv":
        return tv_denoise(x, spec.weight * spec.sigma, spec.tv_iters)
    # cnn: run in the normalised intensity frame with the sigma map
    x_norm, state = normalize_range(x)
    out_norm = cnn_infer(spec.archive, x_norm, spec.sigma)
    return denormalize_range(out_norm.astype(np.float64), state)
