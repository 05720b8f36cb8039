import numpy as np
import pytest

from mrfrecon import (
    EllipseRegion,
    KSpaceData,
    PhantomSpec,
    add_measurement_noise,
    brain_phantom_spec,
    build_grid,
    full_mask,
    make_phantom,
    snap_spec_to_grid,
)


class TestMakePhantom:
    def test_default_brain_passes_invariants(self):
        maps = make_phantom(brain_phantom_spec((64, 64)))
        maps.validate()
        assert np.any(maps.mask)
        assert np.any(~maps.mask)

    def test_zero_regions_all_background(self):
        maps = make_phantom(PhantomSpec((16, 16), ()))
        assert not np.any(maps.mask)
        assert not np.any(maps.t1)

    def test_single_covering_ellipse_uniform(self):
        reg = EllipseRegion((8, 8), (100, 100), 0.0, 1.0, 0.1, 0.9)
        maps = make_phantom(PhantomSpec((16, 16), (reg,)))
        assert np.all(maps.mask)
        assert np.all(maps.t1 == 1.0)
        assert np.all(maps.t2 == 0.1)
        assert np.all(maps.pd == 0.9)

    def test_overlap_precedence_later_wins(self):
        big = EllipseRegion((8, 8), (6, 6), 0.0, 1.0, 0.1, 1.0)
        small = EllipseRegion((8, 8), (2, 2), 0.0, 2.0, 0.2, 0.5)
        maps = make_phantom(PhantomSpec((16, 16), (big, small)))
        assert maps.t1[8, 8] == 2.0
        assert maps.t2[8, 8] == 0.2
        assert maps.pd[8, 8] == 0.5
        assert maps.t1[8, 3] == 1.0

    def test_out_of_range_rejected(self):
        reg = EllipseRegion((8, 8), (4, 4), 0.0, 9.0, 0.1, 1.0)
        with pytest.raises(ValueError, match="range"):
            make_phantom(PhantomSpec((16, 16), (reg,)))

    def test_seed_jitter_changes_geometry_not_validity(self):
        a = make_phantom(brain_phantom_spec((48, 48), seed=1))
        b = make_phantom(brain_phantom_spec((48, 48), seed=2))
        a.validate()
        b.validate()
        assert np.any(a.mask != b.mask) or np.any(a.t1 != b.t1)

    def test_snap_to_grid(self):
        grid = build_grid(12, 10)
        spec = snap_spec_to_grid(brain_phantom_spec((32, 32)), grid)
        atoms = {tuple(a) for a in grid.atoms}
        for reg in spec.regions:
            assert (reg.t1_s, reg.t2_s) in atoms
        make_phantom(spec).validate()


class TestNoise:
    @pytest.fixture
    def clean_y(self):
        rng = np.random.default_rng(0)
        mask = full_mask((8, 8), 4)
        values = rng.standard_normal((4, 64)) + 1j * rng.standard_normal((4, 64))
        return KSpaceData(values, mask)

    def test_infinite_snr_unchanged(self, clean_y):
        out = add_measurement_noise(clean_y, np.inf, seed=3)
        np.testing.assert_array_equal(out.values, clean_y.values)

    def test_seeded_determinism(self, clean_y):
        a = add_measurement_noise(clean_y, 30.0, seed=5)
        b = add_measurement_noise(clean_y, 30.0, seed=5)
        np.testing.assert_array_equal(a.values, b.values)
        c = add_measurement_noise(clean_y, 30.0, seed=6)
        assert np.any(a.values != c.values)

    def test_empirical_snr_within_half_db(self, clean_y):
        snrs = []
        for seed in range(10):
            noisy = add_measurement_noise(clean_y, 30.0, seed=seed)
            w = noisy.values - clean_y.values
            snrs.append(
                10.0 * np.log10(
                    np.sum(np.abs(clean_y.values) ** 2) / np.sum(np.abs(w) ** 2)
                )
            )
        assert abs(np.mean(snrs) - 30.0) < 0.5

    def test_mask_untouched(self, clean_y):
        out = add_measurement_noise(clean_y, 20.0, seed=1)
        assert out.mask is clean_y.mask
