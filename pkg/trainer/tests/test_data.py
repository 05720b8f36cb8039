import numpy as np
import pytest

from denoiser_trainer import qmrt
from denoiser_trainer.data import (
    augment_patches,
    build_patch_set,
    extract_patches,
    load_volumes,
    normalize_patches,
    patch_grid_count,
    resize_volume,
)


def test_stride_arithmetic_matches_formula():
    # 224x224 image, 128 patches, stride 17: 6 per axis, 36 per slice
    assert patch_grid_count(224, 128, 17) == 6
    vol = np.zeros((224, 224, 10), dtype=np.float32)
    assert extract_patches(vol, 128, 17).shape[0] == 36


def test_too_small_volume_rejected():
    with pytest.raises(ValueError, match="smaller"):
        extract_patches(np.zeros((64, 64, 4), dtype=np.float32), 128, 17)


def test_flips_multiply_count():
    rng = np.random.default_rng(0)
    patches = rng.standard_normal((5, 8, 8, 2)).astype(np.float32)
    none = augment_patches(patches, flips=False, rotations=False)
    flipped = augment_patches(patches, flips=True, rotations=False)
    both = augment_patches(patches, flips=True, rotations=True)
    assert len(none) == 5
    assert len(flipped) == 15  # original + 2 flip axes
    assert len(both) == 20  # + rot90


def test_normalized_range():
    rng = np.random.default_rng(1)
    patches = 5.0 * rng.standard_normal((7, 6, 6, 3)).astype(np.float32) - 1.0
    normed = normalize_patches(patches)
    assert normed.min() >= 0.0
    assert normed.max() <= 1.0
    flat = normed.reshape(7, -1)
    np.testing.assert_allclose(flat.max(axis=1), 1.0, atol=1e-6)
    np.testing.assert_allclose(flat.min(axis=1), 0.0, atol=1e-6)


def test_resize_changes_shape_preserves_range():
    rng = np.random.default_rng(2)
    vol = rng.uniform(0, 1, (40, 30, 3)).astype(np.float32)
    small = resize_volume(vol, 0.7)
    big = resize_volume(vol, 1.3)
    assert small.shape == (28, 21, 3)
    assert big.shape == (52, 39, 3)
    assert small.min() >= vol.min() - 1e-6
    assert small.max() <= vol.max() + 1e-6


def test_build_patch_set_from_files(tmp_path):
    rng = np.random.default_rng(3)
    for i in range(2):
        d = tmp_path / f"sim{i}"
        d.mkdir()
        qmrt.save(rng.uniform(0, 1, (48, 48, 4)).astype(np.float32),
                  d / "gt_tsmi.qmrt")
    volumes = load_volumes(tmp_path)
    assert len(volumes) == 2
    patches = build_patch_set(volumes, patch=32, stride=16,
                              resize_scales=(1.0,))
    assert patches.shape[1:] == (32, 32, 4)
    assert patches.min() >= 0.0 and patches.max() <= 1.0


def test_missing_volumes_error(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_volumes(tmp_path)
