"""Fingerprint dictionary: log-spaced (T1, T2) grid, PCA temporal
subspace, compression, and exhaustive per-voxel matching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datatypes import TissueMaps, TSMI
from .epg import SequenceParams, simulate_fingerprints

T1_RANGE_S = (0.01, 6.0)
T2_RANGE_S = (0.004, 0.6)

BACKGROUND_NORM_REL = 1e-8  # voxels below this fraction of the max norm


@dataclass(frozen=True)
class ParamGrid:
    """Log-spaced relaxation-time grid with the t2 <= t1 feasibility filter."""

    t1_values: np.ndarray
    t2_values: np.ndarray
    atoms: np.ndarray  # (N, 2) feasible (t1, t2) pairs, t1-major order

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal temporal basis (T x t) from the dictionary PCA."""

    basis: np.ndarray
    singular_values: np.ndarray

    @property
    def frames(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def validate(self, tol: float = 1e-10) -> None:
        gram = self.basis.T @ self.basis
        if np.max(np.abs(gram - np.eye(self.dim))) > tol:
            raise ValueError("basis columns are not orthonormal")


@dataclass(frozen=True)
class CompressedDictionary:
    """Subspace-compressed fingerprints with matching metadata."""

    atoms: np.ndarray  # (N, t)
    norms: np.ndarray  # (N,)
    grid: ParamGrid

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]


def build_grid(
    n_t1: int = 100,
    n_t2: int = 80,
    t1_range: tuple[float, float] = T1_RANGE_S,
    t2_range: tuple[float, float] = T2_RANGE_S,
) -> ParamGrid:
    """Log-spaced grid over the (T1, T2) box, keeping pairs with t2 <= t1."""
    if n_t1 < 2 or n_t2 < 2:
        raise ValueError("need at least 2 values per axis")
    t1 = np.geomspace(t1_range[0], t1_range[1], n_t1)
    t2 = np.geomspace(t2_range[0], t2_range[1], n_t2)
    t1g = np.repeat(t1, n_t2)
    t2g = np.tile(t2, n_t1)
    keep = t2g <= t1g
    atoms = np.stack([t1g[keep], t2g[keep]], axis=1)
    return ParamGrid(t1, t2, atoms)


def build_dictionary(
    grid: ParamGrid,
    seq: SequenceParams,
    k_max: int | None = None,
    chunk_size: int = 4096,
) -> np.ndarray:
    """Simulate every grid atom: (N_atoms, T) fingerprint matrix.

    Atoms are simulated in chunks so the configuration-state workspace
    stays small even for paper-scale dictionaries.
    """
    n = grid.n_atoms
    out = np.empty((n, seq.repetitions))
    for start in range(0, n, chunk_size):
        sl = slice(start, min(start + chunk_size, n))
        out[sl] = simulate_fingerprints(
            grid.atoms[sl, 0], grid.atoms[sl, 1], seq, k_max=k_max
        )
    return out


def compute_subspace(dict_full: np.ndarray, t: int) -> SubspaceBasis:
    """Top-t right singular vectors of the dictionary matrix.

    Sign convention: the first entry of each column whose magnitude
    exceeds a relative threshold is made positive, so persisted bases
    are reproducible across runs.
    """
    dict_full = np.asarray(dict_full, dtype=np.float64)
    n_atoms, frames = dict_full.shape
    if t > min(n_atoms, frames):
        raise ValueError(f"t={t} exceeds min(N_atoms={n_atoms}, T={frames})")
    _, s, vt = np.linalg.svd(dict_full, full_matrices=False)
    rank_tol = s[0] * max(n_atoms, frames) * np.finfo(np.float64).eps
    if s[t - 1] <= rank_tol:
        raise ValueError(f"dictionary rank < {t}; cannot build subspace")
    basis = vt[:t].T.copy()
    for c in range(t):
        col = basis[:, c]
        nz = np.nonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))[0]
        if nz.size and col[nz[0]] < 0:
            basis[:, c] = -col
    out = SubspaceBasis(basis, s)
    out.validate()
    return out


def compress(dict_full: np.ndarray, basis: SubspaceBasis, grid: ParamGrid) -> CompressedDictionary:
    """Project fingerprints onto the subspace and cache their norms."""
    atoms = np.asarray(dict_full, dtype=np.float64) @ basis.basis
    norms = np.linalg.norm(atoms, axis=1)
    if np.any(norms <= 0):
        raise ValueError("compressed dictionary contains zero-norm atoms")
    return CompressedDictionary(atoms, norms, grid)


def match(
    tsmi: TSMI,
    dictionary: CompressedDictionary,
    chunk_size: int = 2048,
) -> TissueMaps:
    """Exhaustive per-voxel dictionary matching.

    The best atom maximises the normalised inner product
    ``<x_v, a_i> / ||a_i||`` (ties resolved to the lowest index); PD is
    the signed least-squares scale ``<x_v, a_i*> / ||a_i*||^2``. Voxels
    whose norm falls below a relative threshold are background.
    """
    if tsmi.channels != dictionary.dim:
        raise ValueError(
            f"TSMI has {tsmi.channels} channels, dictionary {dictionary.dim}"
        )
    h, w, t = tsmi.values.shape
    x = tsmi.values.reshape(-1, t)
    n_vox = x.shape[0]

    voxel_norms = np.linalg.norm(x, axis=1)
    threshold = BACKGROUND_NORM_REL * (voxel_norms.max() if n_vox else 0.0)
    foreground = voxel_norms > threshold

    normalised = dictionary.atoms / dictionary.norms[:, None]  # (N, t)
    best_idx = np.zeros(n_vox, dtype=np.int64)
    best_score = np.zeros(n_vox)
    for start in range(0, n_vox, chunk_size):
        sl = slice(start, min(start + chunk_size, n_vox))
        scores = x[sl] @ normalised.T  # (chunk, N)
        best_idx[sl] = np.argmax(scores, axis=1)  # argmax takes lowest index on ties
        best_score[sl] = np.take_along_axis(
            scores, best_idx[sl][:, None], axis=1
        )[:, 0]

    t1 = np.where(foreground, dictionary.grid.atoms[best_idx, 0], 0.0)
    t2 = np.where(foreground, dictionary.grid.atoms[best_idx, 1], 0.0)
    pd = np.where(foreground, best_score / dictionary.norms[best_idx], 0.0)
    return TissueMaps(
        t1.reshape(h, w), t2.reshape(h, w), pd.reshape(h, w), foreground.reshape(h, w)
    )
