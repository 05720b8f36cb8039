import numpy as np
import pytest

from mrfrecon import (
    SequenceParams,
    TissueMaps,
    build_dictionary,
    build_grid,
    compute_subspace,
    default_flip_schedule,
    default_sequence,
    load_flip_schedule,
    simulate_fingerprint,
    simulate_fingerprints,
    simulate_tsmi,
)
from conftest import isochromat_fingerprint


class TestFlipSchedule:
    def test_single_repetition(self):
        np.testing.assert_allclose(default_flip_schedule(1), [10.0])

    def test_sinusoid_peak(self):
        sched = default_flip_schedule(200)
        assert sched[100] == pytest.approx(60.0, abs=1e-12)
        assert sched[0] == pytest.approx(10.0)
        assert np.all(sched >= 10.0) and np.all(sched <= 60.0)

    def test_file_override(self, tmp_path):
        values = [12.5, 45.0, 33.3]
        path = tmp_path / "flips.txt"
        path.write_text("\n".join(str(v) for v in values) + "\n")
        loaded = load_flip_schedule(path, 3)
        np.testing.assert_allclose(loaded, values)
        seq = default_sequence(repetitions=3, flip_file=path)
        np.testing.assert_allclose(seq.flip_angles_deg, values)

    def test_file_wrong_length(self, tmp_path):
        path = tmp_path / "flips.txt"
        path.write_text("10\n20\n")
        with pytest.raises(ValueError, match="expected 3"):
            load_flip_schedule(path, 3)


class TestSequenceParams:
    def test_rejects_bad_timing(self):
        with pytest.raises(ValueError):
            SequenceParams(2, np.array([10.0, 10.0]), tr_s=0.001, te_s=0.002)

    def test_rejects_bad_flips(self):
        with pytest.raises(ValueError):
            SequenceParams(2, np.array([0.0, 10.0]))


class TestFingerprint:
    def test_rejects_invalid_relaxation(self, short_sequence):
        with pytest.raises(ValueError):
            simulate_fingerprint(-1.0, 0.1, short_sequence)
        with pytest.raises(ValueError):
            simulate_fingerprint(0.1, 0.2, short_sequence)  # t2 > t1

    def test_first_echo_closed_form(self, paper_sequence):
        t1, t2 = 0.784, 0.077
        fp = simulate_fingerprint(t1, t2, paper_sequence)
        alpha = np.deg2rad(paper_sequence.flip_angles_deg[0])
        z_after_ti = 1.0 - 2.0 * np.exp(-paper_sequence.ti_s / t1)
        expected = abs(np.sin(alpha) * z_after_ti) * np.exp(
            -paper_sequence.te_s / t2
        )
        assert fp[0] == pytest.approx(expected, abs=1e-12)

    def test_matches_isochromat_ensemble(self, paper_sequence):
        fp = simulate_fingerprint(0.784, 0.077, paper_sequence)
        oracle = isochromat_fingerprint(0.784, 0.077, paper_sequence, n_spins=2000)
        scale = np.max(np.abs(oracle))
        assert np.max(np.abs(fp - oracle)) / scale < 0.01

    def test_steady_state_monotone_approach(self):
        # t2 = t1, constant 90-degree train, TR >> T1: after the inversion
        # transient the echo amplitude settles monotonically.
        seq = SequenceParams(
            30, np.full(30, 90.0), tr_s=10.0, te_s=0.001, ti_s=0.018
        )
        fp = simulate_fingerprint(1.0, 1.0, seq)
        gaps = np.abs(fp[1:] - fp[-1])
        assert np.all(np.diff(gaps) <= 1e-12)
        assert fp[-1] > 0

    def test_pd_linearity_is_exact(self, short_sequence):
        # Scaling enters through PD outside the simulator; the response
        # itself is produced once per (T1, T2).
        fp = simulate_fingerprint(1.0, 0.1, short_sequence)
        np.testing.assert_array_equal(3.0 * fp, fp * 3.0)

    def test_determinism(self, paper_sequence):
        a = simulate_fingerprint(1.3, 0.2, paper_sequence)
        b = simulate_fingerprint(1.3, 0.2, paper_sequence)
        np.testing.assert_array_equal(a, b)

    def test_truncation_monotone_convergence(self, paper_sequence):
        # Truncation error decreases monotonically toward the exact
        # (untruncated) ladder as k_max grows. Long-T2 tissues keep
        # populating high orders, so convergence there is slow.
        for t1, t2 in [(0.784, 0.077), (6.0, 0.6)]:
            exact = simulate_fingerprint(t1, t2, paper_sequence)
            errs = [
                np.max(np.abs(simulate_fingerprint(t1, t2, paper_sequence, k_max=k) - exact))
                for k in (20, 40, 80, 160)
            ]
            assert errs[0] > errs[1] > errs[2] > errs[3]

    def test_truncation_converged_for_short_t2(self, paper_sequence):
        # Where transverse decay kills high orders, 20 vs 40 already
        # agrees to 1e-9 relative.
        f20 = simulate_fingerprint(0.1, 0.02, paper_sequence, k_max=20)
        f40 = simulate_fingerprint(0.1, 0.02, paper_sequence, k_max=40)
        assert np.max(np.abs(f40 - f20)) / np.max(np.abs(f40)) < 1e-9

    def test_default_ladder_is_exact(self, paper_sequence):
        # Orders beyond T are unreachable with one shift per repetition.
        a = simulate_fingerprint(6.0, 0.6, paper_sequence)
        b = simulate_fingerprint(6.0, 0.6, paper_sequence, k_max=paper_sequence.repetitions)
        c = simulate_fingerprint(6.0, 0.6, paper_sequence, k_max=10 * paper_sequence.repetitions)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(a, c)

    def test_batch_matches_single(self, short_sequence):
        t1s = np.array([0.5, 1.0, 2.0])
        t2s = np.array([0.05, 0.1, 0.3])
        batch = simulate_fingerprints(t1s, t2s, short_sequence)
        for i in range(3):
            np.testing.assert_array_equal(
                batch[i], simulate_fingerprint(t1s[i], t2s[i], short_sequence)
            )

    def test_oracle_grid_spanning_dictionary_range(self, paper_sequence):
        # 5x4 grid across the full (T1, T2) box, feasible pairs only.
        t1s = np.geomspace(0.01, 6.0, 5)
        t2s = np.geomspace(0.004, 0.6, 4)
        checked = 0
        for t1 in t1s:
            for t2 in t2s:
                if t2 > t1:
                    continue
                fp = simulate_fingerprint(t1, t2, paper_sequence)
                oracle = isochromat_fingerprint(t1, t2, paper_sequence)
                rel = np.max(np.abs(fp - oracle)) / np.max(np.abs(oracle))
                assert rel < 0.01, (t1, t2, rel)
                checked += 1
        assert checked >= 14


@pytest.fixture(scope="module")
def small_basis(short_sequence):
    grid = build_grid(12, 10)
    dictionary = build_dictionary(grid, short_sequence)
    return compute_subspace(dictionary, 5)


class TestSimulateTsmi:
    def test_all_background_is_zero(self, short_sequence, small_basis):
        maps = TissueMaps(
            np.zeros((8, 8)), np.zeros((8, 8)), np.zeros((8, 8)),
            np.zeros((8, 8), dtype=bool),
        )
        tsmi = simulate_tsmi(maps, short_sequence, small_basis.basis)
        assert not np.any(tsmi.values)

    def test_pd_scaling(self, short_sequence, small_basis):
        def one_voxel(pd):
            t1 = np.zeros((4, 4)); t2 = np.zeros((4, 4)); pdm = np.zeros((4, 4))
            fg = np.zeros((4, 4), dtype=bool)
            t1[1, 2], t2[1, 2], pdm[1, 2], fg[1, 2] = 1.0, 0.1, pd, True
            maps = TissueMaps(t1, t2, pdm, fg)
            return simulate_tsmi(maps, short_sequence, small_basis.basis)

        np.testing.assert_allclose(
            one_voxel(2.0).values, 2.0 * one_voxel(1.0).values, atol=1e-15
        )

    def test_basis_length_mismatch(self, short_sequence, small_basis):
        maps = TissueMaps(
            np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 4)),
            np.zeros((4, 4), dtype=bool),
        )
        with pytest.raises(ValueError, match="repetitions"):
            simulate_tsmi(maps, short_sequence, small_basis.basis[:-1])

    def test_subspace_energy_capture(self, paper_sequence):
        # On-grid fingerprints keep >99% of their energy through the
        # t=10 projection built from the same dictionary.
        grid = build_grid(24, 20)
        dictionary = build_dictionary(grid, paper_sequence)
        basis = compute_subspace(dictionary, 10)
        fp = dictionary[dictionary.shape[0] // 2]
        recon = (fp @ basis.basis) @ basis.basis.T
        lost = np.sum((fp - recon) ** 2) / np.sum(fp**2)
        assert lost < 0.01
