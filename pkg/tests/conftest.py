"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from mrfrecon import SequenceParams, SubspaceBasis, default_sequence


def isochromat_fingerprint(
    t1_s: float, t2_s: float, seq: SequenceParams, n_spins: int = 2000
) -> np.ndarray:
    """Brute-force ensemble oracle for the fingerprint simulator.

    Simulates ``n_spins`` classical magnetisation vectors whose
    per-repetition gradient dephasing angles are spread uniformly over
    [0, 2pi), applies the same pulse train (rotations about y), and
    returns |mean transverse magnetisation| at each echo. Kept
    deliberately independent of the configuration-state implementation.
    """
    phis = 2.0 * np.pi * np.arange(n_spins) / n_spins
    cos_p, sin_p = np.cos(phis), np.sin(phis)

    mx = np.zeros(n_spins)
    my = np.zeros(n_spins)
    mz = np.full(n_spins, -1.0)  # perfect inversion of equilibrium

    def relax(tau):
        nonlocal mx, my, mz
        e1, e2 = np.exp(-tau / t1_s), np.exp(-tau / t2_s)
        mx = mx * e2
        my = my * e2
        mz = 1.0 + (mz - 1.0) * e1

    relax(seq.ti_s)
    out = np.empty(seq.repetitions)
    for k in range(seq.repetitions):
        a = np.deg2rad(seq.flip_angles_deg[k])
        ca, sa = np.cos(a), np.sin(a)
        mx, mz = ca * mx + sa * mz, -sa * mx + ca * mz
        relax(seq.te_s)
        out[k] = abs(np.mean(mx) + 1j * np.mean(my))
        relax(seq.tr_s - seq.te_s)
        mx, my = cos_p * mx - sin_p * my, sin_p * mx + cos_p * my
    return out


def random_orthonormal_basis(frames: int, dim: int, rng: np.random.Generator) -> SubspaceBasis:
    """Random (T, t) orthonormal basis for operator tests."""
    q, _ = np.linalg.qr(rng.standard_normal((frames, dim)))
    return SubspaceBasis(q[:, :dim], np.ones(dim))


@pytest.fixture(scope="session")
def paper_sequence() -> SequenceParams:
    """The acquisition defaults: T=200, TR=10 ms, TE=1.8 ms, TI=18 ms."""
    return default_sequence()


@pytest.fixture(scope="session")
def short_sequence() -> SequenceParams:
    return default_sequence(repetitions=40)
