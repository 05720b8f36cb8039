"""Command-line pipeline: dict, simulate, recon, match, eval.

The pipeline is staged through self-contained artifact directories so
each stage can be re-run, cached, and tested in isolation:

    mrfrecon dict     --config run.json --output art/dict
    mrfrecon simulate --config run.json --dict art/dict --output art/sim
    mrfrecon recon    --config run.json --sim art/sim --output art/rec
    mrfrecon match    --config run.json --dict art/dict --recon art/rec \
                      --output art/match
    mrfrecon eval     --config run.json --sim art/sim --recon art/rec \
                      --match art/match --output art/eval

Exit codes: 0 ok, 1 usage, 2 configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ALGORITHMS, MASK_KINDS, ConfigError, RunConfig, load_config
from .datatypes import KSpaceData, SamplingMask, TissueMaps, TSMI
from .denoise import DENOISER_KINDS, DenoiserSpec
from .dictionary import (
    ParamGrid,
    SubspaceBasis,
    build_dictionary,
    build_grid,
    compress,
    compute_subspace,
    match,
)
from .epg import SequenceParams, default_sequence, simulate_tsmi
from .forward import ForwardOperator
from .metrics import evaluate_run
from .phantom import (
    EllipseRegion,
    PhantomSpec,
    add_measurement_noise,
    brain_phantom_spec,
    make_phantom,
    snap_spec_to_grid,
)
from .recon import PnPConfig, lrtv, pnp_admm, svd_mrf
from .sampling import epi_mask, full_mask, spiral_mask, validate_mask
from .tensorio import read_tensor, write_tensor
from .unet import load_weight_archive


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; we use 1
        raise UsageError(message)


def _write_manifest(path: Path, entries: dict) -> None:
    lines = [f"{k} = {v}" for k, v in entries.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_manifest(path: Path) -> dict[str, str]:
    entries = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()
    return entries


def _sequence_from_config(cfg: RunConfig) -> SequenceParams:
    seq = cfg.section("sequence")
    return default_sequence(
        repetitions=seq["repetitions"],
        tr_s=seq["tr_s"],
        te_s=seq["te_s"],
        ti_s=seq["ti_s"],
        flip_file=seq["flip_file"],
    )


def _sequence_hash(seq: SequenceParams) -> str:
    digest = hashlib.sha256()
    digest.update(np.asarray(seq.flip_angles_deg).tobytes())
    digest.update(
        f"{seq.repetitions},{seq.tr_s},{seq.te_s},{seq.ti_s}".encode()
    )
    return digest.hexdigest()[:16]


def _phantom_spec_from_config(cfg: RunConfig, seed: int) -> PhantomSpec:
    grid = tuple(cfg["grid"])
    ph = cfg.section("phantom")
    if ph["regions"] is None:
        return brain_phantom_spec(grid, seed=seed, jitter=ph["jitter"])
    regions = tuple(
        EllipseRegion(
            center=tuple(reg["center"]),
            axes=tuple(reg["axes"]),
            angle_deg=reg["angle_deg"],
            t1_s=reg["t1_s"],
            t2_s=reg["t2_s"],
            pd=reg["pd"],
        )
        for reg in ph["regions"]
    )
    return PhantomSpec(grid, regions, seed)


def _denoiser_from_config(cfg: RunConfig, weights_dir: str | None) -> DenoiserSpec:
    den = cfg.section("recon")["denoiser"]
    archive = None
    if den["kind"] == "cnn":
        directory = weights_dir or den["weights_dir"]
        if directory is None:
            raise ConfigError(
                "recon.denoiser.kind = cnn requires weights_dir (or --weights)"
            )
        archive = load_weight_archive(directory)
    return DenoiserSpec(
        kind=den["kind"],
        sigma=den["sigma"],
        weight=den["weight"],
        tv_iters=den["tv_iters"],
        blur_sigma=den["blur_sigma"],
        archive=archive,
    )


def _make_mask(kind: str, grid, frames: int, samples: int) -> SamplingMask:
    if kind == "full":
        return full_mask(grid, frames)
    if kind == "spiral":
        return spiral_mask(grid, frames, samples)
    return epi_mask(grid, frames, samples)


def _load_basis(directory: Path) -> SubspaceBasis:
    basis = read_tensor(directory / "basis.qmrt")
    sv = read_tensor(directory / "singular_values.qmrt")
    return SubspaceBasis(basis, sv)


def _write_pgm(img: np.ndarray, path: Path) -> None:
    lo, hi = float(np.min(img)), float(np.max(img))
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    data = ((img - lo) * scale).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode()
    path.write_bytes(header + data.tobytes())


# ----------------------------------------------------------------- commands


def cmd_dict(cfg: RunConfig, output: Path) -> None:
    output.mkdir(parents=True, exist_ok=True)
    seq = _sequence_from_config(cfg)
    dcfg = cfg.section("dictionary")
    grid = build_grid(dcfg["n_t1"], dcfg["n_t2"])
    dict_full = build_dictionary(grid, seq)
    basis = compute_subspace(dict_full, dcfg["subspace_dim"])
    comp = compress(dict_full, basis, grid)

    write_tensor(comp.atoms, output / "atoms.qmrt")
    write_tensor(comp.norms, output / "norms.qmrt")
    write_tensor(grid.atoms, output / "grid_pairs.qmrt")
    write_tensor(basis.basis, output / "basis.qmrt")
    write_tensor(basis.singular_values, output / "singular_values.qmrt")
    _write_manifest(
        output / "manifest.txt",
        {
            "stage": "dict",
            "n_t1": dcfg["n_t1"],
            "n_t2": dcfg["n_t2"],
            "t1_range_s": "0.01,6.0",
            "t2_range_s": "0.004,0.6",
            "n_atoms": grid.n_atoms,
            "subspace_dim": dcfg["subspace_dim"],
            "repetitions": seq.repetitions,
            "sequence_hash": _sequence_hash(seq),
        },
    )
    print(f"dict: {grid.n_atoms} atoms, t={dcfg['subspace_dim']} -> {output}")


def cmd_simulate(
    cfg: RunConfig, dict_dir: Path, output: Path, mask_kind: str | None,
    seed: int | None,
) -> None:
    output.mkdir(parents=True, exist_ok=True)
    seq = _sequence_from_config(cfg)
    dict_manifest = _read_manifest(dict_dir / "manifest.txt")
    if dict_manifest.get("sequence_hash") != _sequence_hash(seq):
        raise ConfigError(
            "sequence settings differ from the ones the dictionary was built with"
        )
    basis = _load_basis(dict_dir)
    grid = tuple(cfg["grid"])
    seed = cfg["seed"] if seed is None else seed
    mask_kind = mask_kind or cfg.section("sampling")["mask"]

    spec = _phantom_spec_from_config(cfg, seed)
    if cfg.section("phantom")["snap_to_grid"]:
        dcfg = cfg.section("dictionary")
        param_grid = build_grid(dcfg["n_t1"], dcfg["n_t2"])
        spec = snap_spec_to_grid(spec, param_grid)
    maps = make_phantom(spec)
    tsmi = simulate_tsmi(maps, seq, basis.basis)

    mask = _make_mask(
        mask_kind, grid, seq.repetitions, cfg.section("sampling")["samples_per_frame"]
    )
    report = validate_mask(mask)
    if not report.ok:
        raise RuntimeError(f"generated mask failed validation: {report.violations}")
    op = ForwardOperator(mask, basis)
    y = op.apply(tsmi)
    y = add_measurement_noise(y, cfg["noise_snr_db"], seed=seed)

    write_tensor(maps.stack(), output / "gt_maps.qmrt")
    write_tensor(tsmi.values, output / "gt_tsmi.qmrt")
    write_tensor(mask.indices.astype(np.float64), output / "mask.qmrt")
    write_tensor(y.values, output / "y.qmrt")
    write_tensor(basis.basis, output / "basis.qmrt")
    write_tensor(basis.singular_values, output / "singular_values.qmrt")
    _write_manifest(
        output / "manifest.txt",
        {
            "stage": "simulate",
            "grid": f"{grid[0]},{grid[1]}",
            "mask": mask_kind,
            "samples_per_frame": mask.samples_per_frame,
            "compression_ratio": f"{report.compression_ratio:.4f}",
            "noise_snr_db": cfg["noise_snr_db"],
            "seed": seed,
            "sequence_hash": _sequence_hash(seq),
            "dict_dir": dict_dir,
        },
    )
    print(
        f"simulate: {mask_kind} mask, m={mask.samples_per_frame}, "
        f"snr={cfg['noise_snr_db']} dB -> {output}"
    )


def _load_sim(sim_dir: Path):
    manifest = _read_manifest(sim_dir / "manifest.txt")
    w, h = (int(v) for v in manifest["grid"].split(","))
    indices = read_tensor(sim_dir / "mask.qmrt").astype(np.int64)
    mask = SamplingMask((w, h), indices)
    y = KSpaceData(read_tensor(sim_dir / "y.qmrt"), mask)
    basis = _load_basis(sim_dir)
    return manifest, mask, y, basis


def cmd_recon(
    cfg: RunConfig,
    sim_dir: Path,
    output: Path,
    algo: str | None,
    denoiser_kind: str | None,
    weights_dir: str | None,
    sigma: float | None,
    iters: int | None,
    gamma: float | None,
) -> None:
    output.mkdir(parents=True, exist_ok=True)
    rcfg = dict(cfg.section("recon"))
    den_cfg = dict(rcfg["denoiser"])
    if algo:
        rcfg["algo"] = algo
    if denoiser_kind:
        den_cfg["kind"] = denoiser_kind
    if sigma is not None:
        den_cfg["sigma"] = sigma
    if iters is not None:
        rcfg["iterations"] = iters
    if gamma is not None:
        rcfg["gamma"] = gamma
    rcfg["denoiser"] = den_cfg
    effective = RunConfig({**cfg.data, "recon": rcfg})

    manifest, mask, y, basis = _load_sim(sim_dir)
    op = ForwardOperator(mask, basis)

    algo_name = rcfg["algo"]
    cg_warnings = 0
    if algo_name == "svdmrf":
        result = svd_mrf(op, y)
    elif algo_name == "lrtv":
        result, trace = lrtv(
            op, y, lam=rcfg["lambda_tv"], iterations=rcfg["iterations"],
            gamma=rcfg["gamma"], tv_iters=den_cfg["tv_iters"],
        )
        trace.write_csv(output / "trace.csv")
        cg_warnings = trace.cg_warnings
    else:
        spec = _denoiser_from_config(effective, weights_dir)
        pnp_cfg = PnPConfig(
            denoiser=spec,
            iterations=rcfg["iterations"],
            gamma=rcfg["gamma"],
            cg_tol=rcfg["cg_tol"],
            cg_max_iter=rcfg["cg_max_iter"],
        )
        result, trace = pnp_admm(op, y, pnp_cfg)
        trace.write_csv(output / "trace.csv")
        cg_warnings = trace.cg_warnings

    write_tensor(result.values, output / "recon_tsmi.qmrt")
    _write_manifest(
        output / "manifest.txt",
        {
            "stage": "recon",
            "algo": algo_name,
            "mask": manifest["mask"],
            "config_hash": effective.recon_hash(),
            "cg_warnings": cg_warnings,
            "sim_dir": sim_dir,
        },
    )
    print(f"recon: {algo_name} on {manifest['mask']} mask -> {output}")


def cmd_match(cfg: RunConfig, dict_dir: Path, recon_dir: Path, output: Path) -> None:
    output.mkdir(parents=True, exist_ok=True)
    dcfg = cfg.section("dictionary")
    grid = build_grid(dcfg["n_t1"], dcfg["n_t2"])
    atoms = read_tensor(dict_dir / "atoms.qmrt")
    norms = read_tensor(dict_dir / "norms.qmrt")
    pairs = read_tensor(dict_dir / "grid_pairs.qmrt")
    if pairs.shape != grid.atoms.shape or not np.allclose(pairs, grid.atoms):
        grid = ParamGrid(
            np.unique(pairs[:, 0]), np.unique(pairs[:, 1]), pairs
        )
    from .dictionary import CompressedDictionary

    comp = CompressedDictionary(atoms, norms, grid)
    tsmi = TSMI(read_tensor(recon_dir / "recon_tsmi.qmrt"))
    maps = match(tsmi, comp)
    write_tensor(maps.stack(), output / "matched_maps.qmrt")
    _write_manifest(
        output / "manifest.txt",
        {
            "stage": "match",
            "n_atoms": comp.atoms.shape[0],
            "recon_dir": recon_dir,
            "dict_dir": dict_dir,
        },
    )
    print(f"match: {comp.atoms.shape[0]} atoms -> {output}")


def cmd_eval(
    cfg: RunConfig, sim_dir: Path, recon_dir: Path, match_dir: Path, output: Path
) -> None:
    output.mkdir(parents=True, exist_ok=True)
    gt_maps = TissueMaps.from_stack(read_tensor(sim_dir / "gt_maps.qmrt"))
    gt_tsmi = TSMI(read_tensor(sim_dir / "gt_tsmi.qmrt"))
    result_tsmi = TSMI(read_tensor(recon_dir / "recon_tsmi.qmrt"))
    result_maps = TissueMaps.from_stack(read_tensor(match_dir / "matched_maps.qmrt"))
    recon_manifest = _read_manifest(recon_dir / "manifest.txt")

    report = evaluate_run(
        gt_maps, gt_tsmi, result_maps, result_tsmi,
        metadata={
            "algo": recon_manifest.get("algo", "?"),
            "mask": recon_manifest.get("mask", "?"),
            "config_hash": recon_manifest.get("config_hash", ""),
        },
    )
    report.write_csv(output / "report.csv")
    (output / "report.txt").write_text(report.format_table() + "\n", encoding="utf-8")
    if cfg.section("eval")["dump_images"]:
        for name, ref, test in (
            ("t1", gt_maps.t1, result_maps.t1),
            ("t2", gt_maps.t2, result_maps.t2),
            ("pd", gt_maps.pd, result_maps.pd),
        ):
            _write_pgm(test, output / f"{name}.pgm")
            _write_pgm(np.abs(ref - test), output / f"{name}_error.pgm")
    print(report.format_table())


# ------------------------------------------------------------------- driver


def build_parser() -> _Parser:
    parser = _Parser(prog="mrfrecon", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, default=None, help="JSON run config")
        p.add_argument("--output", type=Path, required=True, help="artifact directory")

    p = sub.add_parser("dict", help="build dictionary and temporal subspace")
    common(p)

    p = sub.add_parser("simulate", help="phantom -> TSMI -> noisy k-space")
    common(p)
    p.add_argument("--dict", type=Path, required=True, dest="dict_dir")
    p.add_argument("--mask", choices=MASK_KINDS, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("recon", help="reconstruct TSMI from persisted k-space")
    common(p)
    p.add_argument("--sim", type=Path, required=True, dest="sim_dir")
    p.add_argument("--algo", choices=ALGORITHMS, default=None)
    p.add_argument("--denoiser", choices=DENOISER_KINDS, default=None)
    p.add_argument("--weights", type=Path, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)

    p = sub.add_parser("match", help="dictionary-match a reconstructed TSMI")
    common(p)
    p.add_argument("--dict", type=Path, required=True, dest="dict_dir")
    p.add_argument("--recon", type=Path, required=True, dest="recon_dir")

    p = sub.add_parser("eval", help="score a run and dump report/images")
    common(p)
    p.add_argument("--sim", type=Path, required=True, dest="sim_dir")
    p.add_argument("--recon", type=Path, required=True, dest="recon_dir")
    p.add_argument("--match", type=Path, required=True, dest="match_dir")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    try:
        cfg = load_config(args.config)
        if args.command == "dict":
            cmd_dict(cfg, args.output)
        elif args.command == "simulate":
            cmd_simulate(cfg, args.dict_dir, args.output, args.mask, args.seed)
        elif args.command == "recon":
            cmd_recon(
                cfg, args.sim_dir, args.output, args.algo, args.denoiser,
                args.weights, args.sigma, args.iters, args.gamma,
            )
        elif args.command == "match":
            cmd_match(cfg, args.dict_dir, args.recon_dir, args.output)
        elif args.command == "eval":
            cmd_eval(cfg, args.sim_dir, args.recon_dir, args.match_dir, args.output)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
