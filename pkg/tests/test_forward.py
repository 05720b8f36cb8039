import numpy as np
import pytest

from mrfrecon import (
    ForwardOperator,
    KSpaceData,
    SubspaceBasis,
    data_consistency,
    epi_mask,
    full_mask,
    spiral_mask,
)
from conftest import random_orthonormal_basis


def make_operator(kind, grid, frames, m, t, rng):
    if kind == "full":
        mask = full_mask(grid, frames)
    elif kind == "spiral":
        mask = spiral_mask(grid, frames, m)
    else:
        mask = epi_mask(grid, frames, m)
    return ForwardOperator(mask, random_orthonormal_basis(frames, t, rng))


def materialize(op):
    """Dense complex matrix of A, built column-by-column via apply()."""
    w, h = op.grid
    t = op.channels
    n = h * w * t
    cols = np.empty((op.frames * op.mask.samples_per_frame, n), dtype=np.complex128)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        cols[:, i] = op.apply(e.reshape(h, w, t)).values.ravel()
    return cols


class TestApply:
    def test_zero_maps_to_zero(self):
        rng = np.random.default_rng(0)
        op = make_operator("spiral", (16, 16), 6, 40, 3, rng)
        y = op.apply(np.zeros((16, 16, 3)))
        assert not np.any(y.values)

    def test_unitarity_full_sampling_single_frame(self):
        # t = T = 1 with the identity basis: apply is a unitary FFT
        rng = np.random.default_rng(1)
        mask = full_mask((16, 16), 1)
        basis = SubspaceBasis(np.ones((1, 1)), np.ones(1))
        op = ForwardOperator(mask, basis)
        x = rng.standard_normal((16, 16, 1))
        y = op.apply(x)
        assert np.linalg.norm(y.values) == pytest.approx(np.linalg.norm(x), rel=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(2)
        op = make_operator("epi", (16, 16), 5, 48, 3, rng)
        x1 = rng.standard_normal((16, 16, 3))
        x2 = rng.standard_normal((16, 16, 3))
        a, b = 1.7, -0.4
        lhs = op.apply(a * x1 + b * x2).values
        rhs = a * op.apply(x1).values + b * op.apply(x2).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_shape_mismatch(self):
        rng = np.random.default_rng(3)
        op = make_operator("full", (8, 8), 4, 64, 2, rng)
        with pytest.raises(ValueError, match="shape"):
            op.apply(np.zeros((8, 9, 2)))


class TestAdjoint:
    def test_zero_maps_to_zero(self):
        rng = np.random.default_rng(4)
        op = make_operator("spiral", (16, 16), 4, 30, 2, rng)
        x = op.adjoint(np.zeros((4, 30), dtype=np.complex128))
        assert not np.any(x)

    @pytest.mark.parametrize("kind", ["spiral", "epi", "full"])
    def test_adjoint_identity(self, kind):
        rng = np.random.default_rng(5)
        grid, frames, t = (16, 16), 6, 3
        m = 256 if kind == "full" else 48
        op = make_operator(kind, grid, frames, m, t, rng)
        for _ in range(5):
            x = rng.standard_normal((16, 16, t))
            y = rng.standard_normal((frames, m)) + 1j * rng.standard_normal((frames, m))
            lhs = np.vdot(y, op.apply(x).values).real
            rhs = float(np.sum(x * op.adjoint(y)))
            denom = np.linalg.norm(x) * np.linalg.norm(y)
            assert abs(lhs - rhs) / denom < 1e-10

    def test_full_sampling_composition_is_identity(self):
        rng = np.random.default_rng(6)
        op = make_operator("full", (12, 12), 5, 144, 3, rng)
        x = rng.standard_normal((12, 12, 3))
        np.testing.assert_allclose(op.adjoint(op.apply(x)), x, atol=1e-10)

    def test_normal_matches_adjoint_of_apply(self):
        rng = np.random.default_rng(7)
        for kind in ("spiral", "epi"):
            op = make_operator(kind, (16, 16), 5, 40, 3, rng)
            x = rng.standard_normal((16, 16, 3))
            np.testing.assert_allclose(
                op.normal(x), op.adjoint(op.apply(x)), atol=1e-10
            )


class TestDataConsistency:
    def test_large_gamma_returns_z(self):
        rng = np.random.default_rng(8)
        op = make_operator("spiral", (16, 16), 6, 40, 3, rng)
        z = rng.standard_normal((16, 16, 3))
        y = op.apply(z)
        x, info = data_consistency(op, y, z, gamma=1e6, tol=1e-10, max_iter=100)
        assert np.linalg.norm(x - z) / np.linalg.norm(z) < 1e-5
        assert info.converged

    def test_gamma_zero_full_sampling_recovers(self):
        rng = np.random.default_rng(9)
        op = make_operator("full", (12, 12), 4, 144, 2, rng)
        x_true = rng.standard_normal((12, 12, 2))
        y = op.apply(x_true)
        x, info = data_consistency(
            op, y, np.zeros_like(x_true), gamma=0.0, tol=1e-8, max_iter=100
        )
        assert np.linalg.norm(x - x_true) / np.linalg.norm(x_true) < 1e-6
        assert info.converged

    @pytest.mark.parametrize("gamma", [0.005, 0.05, 0.5])
    @pytest.mark.parametrize("kind", ["spiral", "epi"])
    def test_matches_dense_solve(self, kind, gamma):
        rng = np.random.default_rng(10)
        frames, t, m = 8, 3, 64
        op = make_operator(kind, (16, 16), frames, m, t, rng)
        z = rng.standard_normal((16, 16, t))
        y = rng.standard_normal((frames, m)) + 1j * rng.standard_normal((frames, m))

        a_mat = materialize(op)
        n = a_mat.shape[1]
        normal_mat = (a_mat.conj().T @ a_mat).real + gamma * np.eye(n)
        rhs = (a_mat.conj().T @ y.ravel()).real + gamma * z.ravel()
        x_dense = np.linalg.solve(normal_mat, rhs)

        x_cg, info = data_consistency(op, y, z, gamma=gamma, tol=1e-10, max_iter=400)
        rel = np.linalg.norm(x_cg.ravel() - x_dense) / np.linalg.norm(x_dense)
        assert rel < 1e-6

    def test_residual_history_decreases(self):
        rng = np.random.default_rng(11)
        op = make_operator("epi", (16, 16), 6, 48, 3, rng)
        z = rng.standard_normal((16, 16, 3))
        y = op.apply(rng.standard_normal((16, 16, 3)))
        _, info = data_consistency(op, y, z, gamma=0.05, tol=1e-12, max_iter=40)
        hist = info.residual_history
        assert np.all(np.diff(hist) <= 1e-12)

    def test_non_convergence_flagged(self):
        rng = np.random.default_rng(12)
        op = make_operator("spiral", (16, 16), 6, 40, 3, rng)
        y = op.apply(rng.standard_normal((16, 16, 3)))
        x, info = data_consistency(
            op, y, np.zeros((16, 16, 3)), gamma=0.005, tol=1e-14, max_iter=2
        )
        assert not info.converged
        assert info.iterations == 2
        assert np.all(np.isfinite(x))

    def test_warm_start_at_solution_stops_immediately(self):
        rng = np.random.default_rng(13)
        op = make_operator("full", (8, 8), 3, 64, 2, rng)
        x_true = rng.standard_normal((8, 8, 2))
        y = op.apply(x_true)
        # (A^H A + g) x = A^H y + g z with z = x_true and full sampling
        # has solution x_true for any gamma
        x, info = data_consistency(op, y, x_true, gamma=0.3, tol=1e-8)
        assert info.iterations == 0
        np.testing.assert_allclose(x, x_true, atol=1e-10)


class TestOperatorValidation:
    def test_frame_mismatch_rejected(self):
        rng = np.random.default_rng(14)
        mask = full_mask((8, 8), 4)
        with pytest.raises(ValueError, match="frames"):
            ForwardOperator(mask, random_orthonormal_basis(5, 2, rng))

    def test_non_orthonormal_basis_rejected(self):
        mask = full_mask((8, 8), 3)
        bad = SubspaceBasis(np.ones((3, 2)), np.ones(2))
        with pytest.raises(ValueError, match="orthonormal"):
            ForwardOperator(mask, bad)
