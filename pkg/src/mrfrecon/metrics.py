"""Image-quality metrics: PSNR, SSIM, masked MAE, and run evaluation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve

from .datatypes import TissueMaps, TSMI

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5


def psnr(ref: np.ndarray, test: np.ndarray, peak: float | None = None) -> float:
    """10*log10(peak^2 / MSE); +inf for identical images.

    The default peak is the reference's own maximum magnitude (images
    with signed values use the magnitude so the peak stays positive).
    """
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {test.shape}")
    if peak is None:
        peak = float(np.max(np.abs(ref)))
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak**2 / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    window = np.outer(g, g)
    return window / window.sum()


def ssim(ref: np.ndarray, test: np.ndarray, peak: float | None = None) -> float:
    """Mean local SSIM, 11x11 Gaussian window (std 1.5), valid region."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {test.shape}")
    if ref.ndim != 2:
        raise ValueError("ssim expects 2-D images")
    if min(ref.shape) < SSIM_WINDOW:
        raise ValueError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    if peak is None:
        peak = float(np.max(np.abs(ref)))
    if peak <= 0:
        raise ValueError("peak must be positive")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2

    win = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    half = SSIM_WINDOW // 2
    crop = (slice(half, -half), slice(half, -half))

    def filt(img):
        return convolve(img, win, mode="constant")[crop]

    mu_x = filt(ref)
    mu_y = filt(test)
    xx = filt(ref * ref) - mu_x**2
    yy = filt(test * test) - mu_y**2
    xy = filt(ref * test) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * xy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
    return float(np.mean(num / den))


def mae(
    ref: np.ndarray, test: np.ndarray, foreground_mask: np.ndarray | None = None
) -> float:
    """Mean absolute error over foreground pixels."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch {ref.shape} vs {test.shape}")
    if foreground_mask is None:
        foreground_mask = np.ones(ref.shape, dtype=bool)
    fg = np.asarray(foreground_mask, dtype=bool)
    if fg.shape != ref.shape:
        raise ValueError("mask shape mismatch")
    if not np.any(fg):
        raise ValueError("empty foreground mask")
    return float(np.mean(np.abs(ref[fg] - test[fg])))


@dataclass
class QuantityScores:
    psnr_db: float
    ssim: float
    mae: float


@dataclass
class EvalReport:
    """Per-quantity scores; TSMI values are channel averages."""

    tsmi: QuantityScores
    t1: QuantityScores
    t2: QuantityScores
    pd: QuantityScores
    metadata: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, QuantityScores]]:
        return [("tsmi", self.tsmi), ("t1", self.t1), ("t2", self.t2), ("pd", self.pd)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["quantity", "psnr_db", "ssim", "mae"])
            for name, score in self.rows():
                writer.writerow(
                    [name, f"{score.psnr_db:.6g}", f"{score.ssim:.6g}", f"{score.mae:.6g}"]
                )
            for key, value in sorted(self.metadata.items()):
                writer.writerow([f"# {key}", value, "", ""])

    def format_table(self) -> str:
        lines = [f"{'quantity':<10}{'psnr_db':>12}{'ssim':>10}{'mae':>14}"]
        for name, score in self.rows():
            lines.append(
                f"{name:<10}{score.psnr_db:>12.3f}{score.ssim:>10.4f}{score.mae:>14.6g}"
            )
        if self.metadata:
            lines.append("")
            for key, value in sorted(self.metadata.items()):
                lines.append(f"{key} = {value}")
        return "\n".join(lines)


def tsmi_channel_psnr(
    ref: TSMI, test: TSMI, peak: float | None = None
) -> list[float]:
    """Per-channel PSNR; by default each channel uses its own peak
    (the psnr default). Pass ``peak`` to share one across channels."""
    if ref.values.shape != test.values.shape:
        raise ValueError("TSMI shape mismatch")
    return [
        psnr(ref.values[:, :, c], test.values[:, :, c], peak)
        for c in range(ref.channels)
    ]


def evaluate_run(
    gt_maps: TissueMaps,
    gt_tsmi: TSMI,
    result_maps: TissueMaps,
    result_tsmi: TSMI,
    metadata: dict | None = None,
    shared_peak: bool = False,
) -> EvalReport:
    """Score a reconstruction: TSMI metrics averaged across channels
    (arithmetic mean of per-channel values), map metrics on foreground.

    Channel PSNR/SSIM use each channel's own reference peak by default;
    ``shared_peak=True`` shares the volume maximum instead.
    """
    peak = float(np.max(np.abs(gt_tsmi.values))) if shared_peak else None
    psnrs = tsmi_channel_psnr(gt_tsmi, result_tsmi, peak)
    ssims = [
        ssim(gt_tsmi.values[:, :, c], result_tsmi.values[:, :, c], peak)
        for c in range(gt_tsmi.channels)
    ]
    fg = gt_maps.mask
    maes = [
        mae(gt_tsmi.values[:, :, c], result_tsmi.values[:, :, c], fg)
        for c in range(gt_tsmi.channels)
    ]
    tsmi_scores = QuantityScores(
        float(np.mean(psnrs)), float(np.mean(ssims)), float(np.mean(maes))
    )

    def map_scores(ref: np.ndarray, test: np.ndarray) -> QuantityScores:
        peak_m = float(np.max(np.abs(ref)))
        return QuantityScores(
            psnr(ref, test, peak_m), ssim(ref, test, peak_m), mae(ref, test, fg)
        )

    return EvalReport(
        tsmi=tsmi_scores,
        t1=map_scores(gt_maps.t1, result_maps.t1),
        t2=map_scores(gt_maps.t2, result_maps.t2),
        pd=map_scores(gt_maps.pd, result_maps.pd),
        metadata=dict(metadata or {}),
    )
