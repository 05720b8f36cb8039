"""Linear acquisition operator and conjugate-gradient data consistency.

The operator maps a real subspace image series x (H, W, t) to complex
k-space samples y (T, m): per frame, expand through the temporal basis,
apply a unitary 2-D FFT, and gather at the frame's sample locations.

Because the image series is real-valued while measurements are complex,
the operator is treated as a real-linear map: the k-space inner product
is Re<.,.> and the adjoint takes the real part after the inverse FFT.
That convention makes <Ax, y> = <x, A^H y> exact over the reals and the
normal equations symmetric positive definite, so conjugate gradients
apply directly.

A^H A has a fast form: gather-then-scatter is multiplication by the
frame's k-space indicator, so

    (A^H A x)_c' = Re sum_c IFFT( Phi[c',c] * FFT(x_c) ),

with Phi[c',c](q) = sum_k basis[k,c'] basis[k,c] 1[q in mask_k]
precomputed once per operator. This avoids the 2T per-frame FFTs that a
naive apply/adjoint pair would spend inside every CG iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .datatypes import KSpaceData, SamplingMask, TSMI
from .dictionary import SubspaceBasis

_FFT_CHUNK = 32  # frames per FFT batch, bounds peak memory


class ForwardOperator:
    """Subsampled spatiotemporal Fourier operator with temporal compression."""

    def __init__(self, mask: SamplingMask, basis: SubspaceBasis):
        if mask.frames != basis.frames:
            raise ValueError(
                f"mask has {mask.frames} frames, basis {basis.frames}"
            )
        basis.validate()
        mask.validate()  # duplicate indices would corrupt scatter/gather
        self.mask = mask
        self.basis = basis.basis  # (T, t)
        self.grid = mask.grid  # (W, H)
        self._kernel: np.ndarray | None = None

    @property
    def frames(self) -> int:
        return self.mask.frames

    @property
    def channels(self) -> int:
        return self.basis.shape[1]

    def _check_image(self, x: np.ndarray) -> np.ndarray:
        w, h = self.grid
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (h, w, self.channels):
            raise ValueError(
                f"image shape {x.shape} does not match (H={h}, W={w}, t={self.channels})"
            )
        return x

    def apply(self, x: TSMI | np.ndarray) -> KSpaceData:
        """y = A x (noiseless)."""
        if isinstance(x, TSMI):
            x = x.values
        x = self._check_image(x)
        w, h = self.grid
        t_frames, m = self.frames, self.mask.samples_per_frame
        flat = x.reshape(-1, self.channels)  # (H*W, t)
        out = np.empty((t_frames, m), dtype=np.complex128)
        for k0 in range(0, t_frames, _FFT_CHUNK):
            k1 = min(k0 + _FFT_CHUNK, t_frames)
            imgs = (flat @ self.basis[k0:k1].T).T.reshape(k1 - k0, h, w)
            spectra = scipy.fft.fft2(imgs, norm="ortho", workers=-1)
            idx = self.mask.indices[k0:k1]
            out[k0:k1] = spectra[
                np.arange(k1 - k0)[:, None], idx[:, :, 1], idx[:, :, 0]
            ]
        return KSpaceData(out, self.mask)

    def adjoint(self, y: KSpaceData | np.ndarray) -> np.ndarray:
        """x = A^H y with the real-restricted convention; returns (H, W, t)."""
        if isinstance(y, KSpaceData):
            yv = y.values
        else:
            yv = np.asarray(y, dtype=np.complex128)
        t_frames, m = self.frames, self.mask.samples_per_frame
        if yv.shape != (t_frames, m):
            raise ValueError(
                f"k-space shape {yv.shape} does not match ({t_frames}, {m})"
            )
        w, h = self.grid
        acc = np.zeros((h * w, self.channels))
        for k0 in range(0, t_frames, _FFT_CHUNK):
            k1 = min(k0 + _FFT_CHUNK, t_frames)
            grids = np.zeros((k1 - k0, h, w), dtype=np.complex128)
            idx = self.mask.indices[k0:k1]
            grids[np.arange(k1 - k0)[:, None], idx[:, :, 1], idx[:, :, 0]] = yv[k0:k1]
            imgs = scipy.fft.ifft2(grids, norm="ortho", workers=-1).real
            acc += imgs.reshape(k1 - k0, -1).T @ self.basis[k0:k1]
        return acc.reshape(h, w, self.channels)

    def _build_kernel(self) -> np.ndarray:
        w, h = self.grid
        t = self.channels
        kernel = np.zeros((t, t, h * w))
        flat_idx = (
            self.mask.indices[:, :, 1].astype(np.int64) * w
            + self.mask.indices[:, :, 0]
        )
        for k in range(self.frames):
            bk = self.basis[k]
            # indices are unique within a frame, so fancy += is exact
            kernel[:, :, flat_idx[k]] += np.multiply.outer(bk, bk)[:, :, None]
        return kernel.reshape(t, t, h, w)

    def normal(self, x: np.ndarray) -> np.ndarray:
        """A^H A x via the precomputed t x t k-space kernel."""
        x = self._check_image(x)
        if self._kernel is None:
            self._kernel = self._build_kernel()
        spectra = scipy.fft.fft2(
            np.moveaxis(x, 2, 0), norm="ortho", workers=-1
        )  # (t, H, W)
        mixed = np.einsum("abij,bij->aij", self._kernel, spectra)
        out = scipy.fft.ifft2(mixed, norm="ortho", workers=-1).real
        return np.moveaxis(out, 0, 2)


@dataclass(frozen=True)
class CGResult:
    """Convergence report returned alongside the data-consistency solution."""

    iterations: int
    relative_residual: float
    converged: bool
    residual_history: np.ndarray


def data_consistency(
    op: ForwardOperator,
    y: KSpaceData | np.ndarray,
    z: np.ndarray,
    gamma: float = 0.05,
    tol: float = 1e-4,
    max_iter: int = 50,
) -> tuple[np.ndarray, CGResult]:
    """Solve (A^H A + gamma I) x = A^H y + gamma z by conjugate gradients.

    Warm-started at z; stops when the relative residual drops below
    ``tol``. gamma=0 is accepted for exactly determined systems (e.g.
    full sampling) where A^H A itself is invertible.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    z = op._check_image(z)
    b = op.adjoint(y) + gamma * z
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(z), CGResult(0, 0.0, True, np.zeros(1))

    x = z.copy()
    r = b - (op.normal(x) + gamma * x)
    p = r.copy()
    rs = float(np.vdot(r, r).real)
    history = [np.sqrt(rs) / b_norm]
    iterations = 0
    for _ in range(max_iter):
        if history[-1] <= tol:
            break
        ap = op.normal(p) + gamma * p
        alpha = rs / float(np.vdot(p, ap).real)
        x += alpha * p
        r -= alpha * ap
        rs_new = float(np.vdot(r, r).real)
        iterations += 1
        history.append(np.sqrt(rs_new) / b_norm)
        beta = rs_new / rs
        rs = rs_new
        p = r + beta * p
    residual = history[-1]
    return x, CGResult(iterations, residual, residual <= tol, np.array(history))
