"""Synthetic tissue phantoms and calibrated measurement noise.

Phantoms are stacks of rotated ellipses rasterised onto the pixel grid,
later regions overwriting earlier ones. Default values mimic brain
tissue classes and stay inside the dictionary's (T1, T2) box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .datatypes import KSpaceData, TissueMaps
from .dictionary import ParamGrid, T1_RANGE_S, T2_RANGE_S


@dataclass(frozen=True)
class EllipseRegion:
    """One tissue region: geometry in pixels, relaxation in seconds."""

    center: tuple[float, float]  # (cx, cy) pixels
    axes: tuple[float, float]  # semi-axes (ax, ay) pixels
    angle_deg: float
    t1_s: float
    t2_s: float
    pd: float


@dataclass(frozen=True)
class PhantomSpec:
    grid: tuple[int, int]  # (width, height)
    regions: tuple[EllipseRegion, ...]
    seed: int = 0


# (t1_s, t2_s) literature-typical values at 3T, inside the dictionary box
WHITE_MATTER = (0.78, 0.08)
GRAY_MATTER = (1.2, 0.11)
CSF = (4.0, 0.5)


def brain_phantom_spec(
    grid: tuple[int, int], seed: int = 0, jitter: float = 0.02
) -> PhantomSpec:
    """Brain-like default: GM head, WM interior, CSF ventricles, nuclei.

    ``jitter`` perturbs region geometry by the given relative amount
    (seeded), so different seeds give structurally similar but distinct
    phantoms for training-data generation.
    """
    w, h = grid
    cx, cy = w / 2.0, h / 2.0
    s = min(w, h)
    base = [
        EllipseRegion((cx, cy), (0.42 * s, 0.46 * s), 0.0, *GRAY_MATTER, 0.9),
        EllipseRegion((cx, cy), (0.34 * s, 0.38 * s), 0.0, *WHITE_MATTER, 0.8),
        EllipseRegion(
            (cx - 0.10 * s, cy - 0.05 * s), (0.05 * s, 0.14 * s), 15.0, *CSF, 1.0
        ),
        EllipseRegion(
            (cx + 0.10 * s, cy - 0.05 * s), (0.05 * s, 0.14 * s), -15.0, *CSF, 1.0
        ),
        EllipseRegion(
            (cx - 0.13 * s, cy + 0.18 * s), (0.07 * s, 0.05 * s), 30.0, *GRAY_MATTER, 0.95
        ),
        EllipseRegion(
            (cx + 0.13 * s, cy + 0.18 * s), (0.07 * s, 0.05 * s), -30.0, *GRAY_MATTER, 0.95
        ),
        EllipseRegion((cx, cy + 0.30 * s), (0.10 * s, 0.045 * s), 0.0, 1.8, 0.2, 0.7),
    ]
    if jitter > 0:
        rng = np.random.default_rng(seed)
        jittered = []
        for reg in base:
            f = lambda v: v * (1.0 + jitter * rng.uniform(-1, 1))
            jittered.append(
                replace(
                    reg,
                    center=(f(reg.center[0]), f(reg.center[1])),
                    axes=(f(reg.axes[0]), f(reg.axes[1])),
                    angle_deg=reg.angle_deg + 10.0 * jitter * rng.uniform(-1, 1) * 90.0,
                )
            )
        base = jittered
    return PhantomSpec((w, h), tuple(base), seed)


def make_phantom(spec: PhantomSpec) -> TissueMaps:
    """Rasterise the region stack; validates dictionary-range membership."""
    w, h = spec.grid
    t1 = np.zeros((h, w))
    t2 = np.zeros((h, w))
    pd = np.zeros((h, w))
    fg = np.zeros((h, w), dtype=bool)

    yy, xx = np.mgrid[0:h, 0:w]
    for i, reg in enumerate(spec.regions):
        if not (T1_RANGE_S[0] <= reg.t1_s <= T1_RANGE_S[1]):
            raise ValueError(f"region {i}: t1 {reg.t1_s} outside dictionary range")
        if not (T2_RANGE_S[0] <= reg.t2_s <= T2_RANGE_S[1]):
            raise ValueError(f"region {i}: t2 {reg.t2_s} outside dictionary range")
        if reg.t2_s > reg.t1_s:
            raise ValueError(f"region {i}: t2 > t1")
        if reg.pd < 0:
            raise ValueError(f"region {i}: negative PD")
        ang = math.radians(reg.angle_deg)
        dx = xx - reg.center[0]
        dy = yy - reg.center[1]
        xr = dx * math.cos(ang) + dy * math.sin(ang)
        yr = -dx * math.sin(ang) + dy * math.cos(ang)
        inside = (xr / reg.axes[0]) ** 2 + (yr / reg.axes[1]) ** 2 <= 1.0
        t1[inside] = reg.t1_s
        t2[inside] = reg.t2_s
        pd[inside] = reg.pd
        fg[inside] = True

    maps = TissueMaps(t1, t2, pd, fg)
    maps.validate()
    return maps


def snap_spec_to_grid(spec: PhantomSpec, grid: ParamGrid) -> PhantomSpec:
    """Snap region (t1, t2) to the nearest dictionary atom (log distance)."""
    log_atoms = np.log(grid.atoms)
    snapped = []
    for reg in spec.regions:
        d = np.hypot(
            log_atoms[:, 0] - math.log(reg.t1_s), log_atoms[:, 1] - math.log(reg.t2_s)
        )
        t1s, t2s = grid.atoms[int(np.argmin(d))]
        snapped.append(replace(reg, t1_s=float(t1s), t2_s=float(t2s)))
    return replace(spec, regions=tuple(snapped))


def add_measurement_noise(
    y: KSpaceData, snr_db: float, seed: int = 0
) -> KSpaceData:
    """Add circular complex AWGN at the requested SNR (dB), seeded.

    The per-sample standard deviation is chosen so the expected noise
    energy satisfies 10*log10(||y||^2 / E||w||^2) = snr_db. An infinite
    snr_db returns the data unchanged.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return y
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite or +inf")
    n = y.values.size
    signal_energy = float(np.sum(np.abs(y.values) ** 2))
    # negative exponent underflows (not overflows) for very large SNRs
    noise_energy = signal_energy * 10.0 ** (-snr_db / 10.0)
    per_sample_var = noise_energy / n
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(y.values.shape) + 1j * rng.standard_normal(y.values.shape)
    w *= math.sqrt(per_sample_var / 2.0)
    return KSpaceData(y.values + w, y.mask)
