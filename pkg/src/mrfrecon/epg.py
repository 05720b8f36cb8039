"""Fingerprint simulation for an inversion-prepared FISP train.

Signals are computed with the extended phase graph formalism: spin
configuration states (F+, F-, Z) evolve under RF rotations, T1/T2
relaxation split at the echo time, and one unit gradient-spoiling shift
of the F ladder per repetition. Pulses are applied about a fixed axis,
which keeps all states real for real initial magnetisation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .datatypes import TissueMaps, TSMI


@dataclass(frozen=True)
class SequenceParams:
    """Timing and flip-angle train of the acquisition."""

    repetitions: int
    flip_angles_deg: np.ndarray
    tr_s: float = 0.010
    te_s: float = 0.0018
    ti_s: float = 0.018

    def __post_init__(self):
        flips = np.asarray(self.flip_angles_deg, dtype=np.float64)
        object.__setattr__(self, "flip_angles_deg", flips)
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if flips.shape != (self.repetitions,):
            raise ValueError(
                f"need {self.repetitions} flip angles, got shape {flips.shape}"
            )
        if not (0 < self.te_s < self.tr_s):
            raise ValueError("require 0 < te_s < tr_s")
        if self.ti_s < 0:
            raise ValueError("ti_s must be >= 0")
        if np.any(flips <= 0) or np.any(flips > 180):
            raise ValueError("flip angles must lie in (0, 180] degrees")


def default_flip_schedule(repetitions: int) -> np.ndarray:
    """Deterministic smooth train: 10 + 50*|sin(pi*k/T)| degrees."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    k = np.arange(repetitions, dtype=np.float64)
    return 10.0 + 50.0 * np.abs(np.sin(np.pi * k / repetitions))


def load_flip_schedule(path: str | os.PathLike, repetitions: int) -> np.ndarray:
    """Read a flip-angle override file: one degree value per line, T lines."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) != repetitions:
        raise ValueError(
            f"{path}: expected {repetitions} flip angles, found {len(lines)}"
        )
    return np.array([float(ln) for ln in lines], dtype=np.float64)


def default_sequence(
    repetitions: int = 200,
    tr_s: float = 0.010,
    te_s: float = 0.0018,
    ti_s: float = 0.018,
    flip_file: str | os.PathLike | None = None,
) -> SequenceParams:
    if flip_file is not None:
        flips = load_flip_schedule(flip_file, repetitions)
    else:
        flips = default_flip_schedule(repetitions)
    return SequenceParams(repetitions, flips, tr_s=tr_s, te_s=te_s, ti_s=ti_s)


def _validate_relaxation(t1_s: np.ndarray, t2_s: np.ndarray) -> None:
    if np.any(t1_s <= 0) or np.any(t2_s <= 0):
        raise ValueError("T1 and T2 must be positive")
    if np.any(t2_s > t1_s):
        raise ValueError("require t2 <= t1")


def simulate_fingerprints(
    t1_s: np.ndarray,
    t2_s: np.ndarray,
    seq: SequenceParams,
    k_max: int | None = None,
) -> np.ndarray:
    """Simulate fingerprints for a batch of (T1, T2) pairs.

    Returns the (N, T) matrix of transverse-magnetisation magnitudes at
    the echo time of each repetition. The configuration-state ladder is
    truncated at ``k_max`` orders; the default keeps every reachable
    order (one shift per repetition caps them at T), which makes the
    simulation exact. Long-T2 tissues genuinely populate high orders, so
    aggressive truncation costs accuracy at the top of the T2 range.
    """
    t1 = np.atleast_1d(np.asarray(t1_s, dtype=np.float64))
    t2 = np.atleast_1d(np.asarray(t2_s, dtype=np.float64))
    if t1.shape != t2.shape or t1.ndim != 1:
        raise ValueError("t1_s and t2_s must be 1-D arrays of equal length")
    _validate_relaxation(t1, t2)

    n = t1.size
    reps = seq.repetitions
    if k_max is None:
        k_max = reps
    else:
        k_max = min(int(k_max), reps)
        if k_max < 1:
            raise ValueError("k_max must be >= 1")
    alphas = np.deg2rad(seq.flip_angles_deg)

    # Relaxation factors over the two intra-TR intervals.
    e1_te = np.exp(-seq.te_s / t1)
    e2_te = np.exp(-seq.te_s / t2)
    e1_rem = np.exp(-(seq.tr_s - seq.te_s) / t1)
    e2_rem = np.exp(-(seq.tr_s - seq.te_s) / t2)

    # Configuration states, ladder orders 0..k_max. Pulses about a
    # fixed transverse axis keep everything real.
    fp = np.zeros((k_max + 1, n))
    fm = np.zeros((k_max + 1, n))
    z = np.zeros((k_max + 1, n))
    # Perfect 180 inversion of equilibrium Z, then TI recovery.
    z[0] = 1.0 - 2.0 * np.exp(-seq.ti_s / t1)

    signal = np.empty((n, reps))
    for k in range(reps):
        a = alphas[k]
        c2, s2 = np.cos(a / 2.0) ** 2, np.sin(a / 2.0) ** 2
        ca, sa = np.cos(a), np.sin(a)

        fp_new = c2 * fp - s2 * fm + sa * z
        fm_new = -s2 * fp + c2 * fm + sa * z
        z_new = -0.5 * sa * (fp + fm) + ca * z
        fp, fm, z = fp_new, fm_new, z_new

        # Relax to the echo, read out, relax over the rest of the TR.
        fp *= e2_te
        fm *= e2_te
        z *= e1_te
        z[0] += 1.0 - e1_te
        signal[:, k] = np.abs(fp[0])
        fp *= e2_rem
        fm *= e2_rem
        z *= e1_rem
        z[0] += 1.0 - e1_rem

        # Unit gradient spoiling: shift the F ladder one order up.
        fp[1:] = fp[:-1]
        fm[:-1] = fm[1:]
        fm[-1] = 0.0
        fp[0] = fm[0]

    return signal


def simulate_fingerprint(
    t1_s: float, t2_s: float, seq: SequenceParams, k_max: int | None = None
) -> np.ndarray:
    """Single (T1, T2) fingerprint: length-T magnitude response."""
    return simulate_fingerprints(
        np.array([t1_s]), np.array([t2_s]), seq, k_max=k_max
    )[0]


def simulate_tsmi(
    maps: TissueMaps,
    seq: SequenceParams,
    basis: np.ndarray,
    k_max: int | None = None,
) -> TSMI:
    """Simulate a subspace-compressed TSMI from tissue maps.

    Each foreground voxel's full-length response PD * B(T1, T2) is
    projected onto the ``(T, t)`` basis; background voxels are zero.
    Distinct (T1, T2) pairs are simulated once and broadcast.
    """
    basis = np.asarray(basis, dtype=np.float64)
    if basis.ndim != 2 or basis.shape[0] != seq.repetitions:
        raise ValueError(
            f"basis temporal length {basis.shape} does not match "
            f"{seq.repetitions} repetitions"
        )
    h, w = maps.shape
    t_dim = basis.shape[1]
    out = np.zeros((h, w, t_dim))

    fg = maps.mask
    if not np.any(fg):
        return TSMI(out)

    pairs = np.stack([maps.t1[fg], maps.t2[fg]], axis=1)
    uniq, inverse = np.unique(pairs, axis=0, return_inverse=True)
    fps = simulate_fingerprints(uniq[:, 0], uniq[:, 1], seq, k_max=k_max)
    compressed = fps @ basis  # (n_unique, t)
    voxels = compressed[inverse] * maps.pd[fg][:, None]
    out[fg] = voxels
    return TSMI(out)
