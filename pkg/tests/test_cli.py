import json

import numpy as np
import pytest

from mrfrecon import read_tensor, TissueMaps
from mrfrecon.cli import main, _read_manifest


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "small.json"
    path.write_text(json.dumps({
        "grid": [32, 32],
        "sequence": {"repetitions": 40},
        "dictionary": {"n_t1": 12, "n_t2": 10, "subspace_dim": 5},
        "sampling": {"mask": "spiral", "samples_per_frame": 96},
        "noise_snr_db": 30.0,
        "phantom": {"snap_to_grid": True},
        "recon": {
            "algo": "pnp", "iterations": 4,
            "denoiser": {"kind": "tv", "sigma": 0.01, "weight": 1.5},
        },
    }))
    return path


@pytest.fixture(scope="module")
def dict_dir(small_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("art") / "dict"
    assert main(["dict", "--config", str(small_config), "--output", str(out)]) == 0
    return out


SIM_FILES = [
    "gt_maps.qmrt", "gt_tsmi.qmrt", "mask.qmrt", "y.qmrt",
    "basis.qmrt", "singular_values.qmrt", "manifest.txt",
]


class TestSimulate:
    @pytest.mark.parametrize("mask", ["spiral", "epi", "full"])
    def test_artifact_inventory_per_mask(self, small_config, dict_dir, tmp_path, mask):
        out = tmp_path / f"sim_{mask}"
        code = main([
            "simulate", "--config", str(small_config), "--dict", str(dict_dir),
            "--output", str(out), "--mask", mask,
        ])
        assert code == 0
        for name in SIM_FILES:
            assert (out / name).is_file(), name
        y = read_tensor(out / "y.qmrt")
        idx = read_tensor(out / "mask.qmrt")
        assert y.shape[0] == idx.shape[0] == 40
        if mask != "full":
            assert y.shape[1] == 96
        maps = TissueMaps.from_stack(read_tensor(out / "gt_maps.qmrt"))
        maps.validate()

    def test_deterministic_given_seed(self, small_config, dict_dir, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            main([
                "simulate", "--config", str(small_config), "--dict", str(dict_dir),
                "--output", str(out), "--seed", "7",
            ])
        np.testing.assert_array_equal(
            read_tensor(a / "y.qmrt"), read_tensor(b / "y.qmrt")
        )

    def test_dict_config_mismatch_rejected(self, small_config, dict_dir, tmp_path):
        bad = tmp_path / "bad.json"
        cfg = json.loads(small_config.read_text())
        cfg["sequence"]["repetitions"] = 41
        bad.write_text(json.dumps(cfg))
        code = main([
            "simulate", "--config", str(bad), "--dict", str(dict_dir),
            "--output", str(tmp_path / "sim"),
        ])
        assert code == 2


@pytest.fixture(scope="module")
def sim_dir(small_config, dict_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("art") / "sim"
    assert main([
        "simulate", "--config", str(small_config), "--dict", str(dict_dir),
        "--output", str(out),
    ]) == 0
    return out


class TestRecon:
    def test_pnp_tv_emits_trace(self, small_config, sim_dir, tmp_path):
        out = tmp_path / "rec"
        code = main([
            "recon", "--config", str(small_config), "--sim", str(sim_dir),
            "--output", str(out), "--iters", "3",
        ])
        assert code == 0
        assert (out / "recon_tsmi.qmrt").is_file()
        trace = (out / "trace.csv").read_text().strip().splitlines()
        assert len(trace) == 4  # header + 3 iterations

    def test_svdmrf_no_trace(self, small_config, sim_dir, tmp_path):
        out = tmp_path / "rec"
        code = main([
            "recon", "--config", str(small_config), "--sim", str(sim_dir),
            "--output", str(out), "--algo", "svdmrf",
        ])
        assert code == 0
        assert not (out / "trace.csv").exists()

    def test_identity_full_sampling_exact_recovery(
        self, small_config, dict_dir, tmp_path
    ):
        sim = tmp_path / "sim_full"
        noiseless = tmp_path / "noiseless.json"
        cfg = json.loads(small_config.read_text())
        cfg["noise_snr_db"] = 1e9  # effectively noiseless
        noiseless.write_text(json.dumps(cfg))
        main([
            "simulate", "--config", str(noiseless), "--dict", str(dict_dir),
            "--output", str(sim), "--mask", "full",
        ])
        out = tmp_path / "rec_full"
        main([
            "recon", "--config", str(noiseless), "--sim", str(sim),
            "--output", str(out), "--denoiser", "identity", "--iters", "2",
        ])
        gt = read_tensor(sim / "gt_tsmi.qmrt")
        rec = read_tensor(out / "recon_tsmi.qmrt")
        assert np.linalg.norm(rec - gt) / np.linalg.norm(gt) < 1e-4

    def test_same_config_runs_on_both_masks_with_equal_hash(
        self, small_config, dict_dir, tmp_path
    ):
        hashes = {}
        for mask in ("spiral", "epi"):
            sim = tmp_path / f"sim_{mask}"
            main([
                "simulate", "--config", str(small_config), "--dict", str(dict_dir),
                "--output", str(sim), "--mask", mask,
            ])
            rec = tmp_path / f"rec_{mask}"
            code = main([
                "recon", "--config", str(small_config), "--sim", str(sim),
                "--output", str(rec),
            ])
            assert code == 0
            hashes[mask] = _read_manifest(rec / "manifest.txt")["config_hash"]
        assert hashes["spiral"] == hashes["epi"]


class TestMatchEval:
    def test_pipeline_through_eval(self, small_config, dict_dir, sim_dir, tmp_path):
        rec = tmp_path / "rec"
        main([
            "recon", "--config", str(small_config), "--sim", str(sim_dir),
            "--output", str(rec), "--algo", "svdmrf",
        ])
        mat = tmp_path / "match"
        assert main([
            "match", "--config", str(small_config), "--dict", str(dict_dir),
            "--recon", str(rec), "--output", str(mat),
        ]) == 0
        maps = TissueMaps.from_stack(read_tensor(mat / "matched_maps.qmrt"))
        maps.validate()
        ev = tmp_path / "eval"
        assert main([
            "eval", "--config", str(small_config), "--sim", str(sim_dir),
            "--recon", str(rec), "--match", str(mat), "--output", str(ev),
        ]) == 0
        assert (ev / "report.csv").is_file()
        assert (ev / "report.txt").is_file()
        for name in ("t1", "t2", "pd"):
            assert (ev / f"{name}.pgm").is_file()
            assert (ev / f"{name}_error.pgm").is_file()


class TestErrors:
    def test_usage_error_exit_1(self):
        assert main(["bogus-command"]) == 1
        assert main(["recon", "--output", "/tmp/x"]) == 1  # missing --sim

    def test_config_error_exit_2(self, tmp_path, dict_dir):
        bad = tmp_path / "bad.json"
        bad.write_text('{"grid": [4]}')
        assert main(["dict", "--config", str(bad), "--output", str(tmp_path / "d")]) == 2
        bad.write_text('{"grid": [8, 8],')  # malformed JSON
        assert main(["dict", "--config", str(bad), "--output", str(tmp_path / "d")]) == 2

    def test_unknown_key_reported(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"reconn": {}}')
        assert main(["dict", "--config", str(bad), "--output", str(tmp_path / "d")]) == 2
        assert "reconn" in capsys.readouterr().err

    def test_runtime_error_exit_3(self, small_config, tmp_path):
        missing = tmp_path / "missing"
        assert main([
            "recon", "--config", str(small_config), "--sim", str(missing),
            "--output", str(tmp_path / "r"),
        ]) == 3
