"""Run configuration: JSON schema, validation, and hashing.

One JSON file can drive the whole pipeline; each command reads the
sections it needs. Validation happens before any work and reports the
offending field by its dotted path. See README for the full schema.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .denoise import DENOISER_KINDS

MASK_KINDS = ("spiral", "epi", "full")
ALGORITHMS = ("svdmrf", "lrtv", "pnp")


class ConfigError(ValueError):
    """Configuration file is missing, malformed, or invalid."""


DEFAULTS: dict[str, Any] = {
    "grid": [224, 224],
    "seed": 0,
    "sequence": {
        "repetitions": 200,
        "tr_s": 0.010,
        "te_s": 0.0018,
        "ti_s": 0.018,
        "flip_file": None,
    },
    "dictionary": {"n_t1": 100, "n_t2": 80, "subspace_dim": 10},
    "sampling": {"mask": "spiral", "samples_per_frame": 771},
    "noise_snr_db": 30.0,
    "phantom": {"jitter": 0.02, "snap_to_grid": False, "regions": None},
    "recon": {
        "algo": "pnp",
        "iterations": 100,
        "gamma": 0.05,
        "cg_tol": 1e-4,
        "cg_max_iter": 50,
        "lambda_tv": 4e-5,
        "denoiser": {
            "kind": "tv",
            "sigma": 1e-2,
            "weight": 1.5,
            "tv_iters": 30,
            "blur_sigma": 1.0,
            "weights_dir": None,
        },
    },
    "eval": {"dump_images": True},
}


def _merge(defaults: Any, override: Any, path: str) -> Any:
    if isinstance(defaults, dict):
        if not isinstance(override, dict):
            raise ConfigError(f"{path or 'config'}: expected an object")
        out = {}
        for key, default_value in defaults.items():
            sub = f"{path}.{key}" if path else key
            if key in override:
                out[key] = _merge(default_value, override[key], sub)
            else:
                out[key] = default_value
        unknown = set(override) - set(defaults)
        if unknown:
            raise ConfigError(
                f"{path or 'config'}: unknown key(s) {sorted(unknown)}"
            )
        return out
    return override


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration tree (plain dicts after merging defaults)."""

    data: dict[str, Any] = field(default_factory=lambda: json.loads(json.dumps(DEFAULTS)))

    def __getitem__(self, key: str) -> Any:
        return self.data[key]

    def section(self, name: str) -> dict[str, Any]:
        return self.data[name]

    def recon_hash(self) -> str:
        """Hash of the reconstruction settings (mask- and IO-agnostic)."""
        canonical = json.dumps(self.data["recon"], sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def validate(raw: dict[str, Any]) -> RunConfig:
    data = _merge(DEFAULTS, raw, "")

    grid = data["grid"]
    _require(
        isinstance(grid, list) and len(grid) == 2
        and all(isinstance(g, int) and g >= 4 for g in grid),
        "grid: expected [width, height] with integers >= 4",
    )
    seq = data["sequence"]
    _require(
        isinstance(seq["repetitions"], int) and seq["repetitions"] >= 1,
        "sequence.repetitions: expected integer >= 1",
    )
    _require(
        0 < seq["te_s"] < seq["tr_s"],
        "sequence: require 0 < te_s < tr_s",
    )
    _require(seq["ti_s"] >= 0, "sequence.ti_s: must be >= 0")

    dico = data["dictionary"]
    for key in ("n_t1", "n_t2", "subspace_dim"):
        _require(
            isinstance(dico[key], int) and dico[key] >= 1,
            f"dictionary.{key}: expected positive integer",
        )
    _require(dico["n_t1"] >= 2 and dico["n_t2"] >= 2,
             "dictionary: n_t1 and n_t2 must be >= 2")

    samp = data["sampling"]
    _require(samp["mask"] in MASK_KINDS,
             f"sampling.mask: expected one of {MASK_KINDS}")
    _require(
        isinstance(samp["samples_per_frame"], int) and samp["samples_per_frame"] >= 1,
        "sampling.samples_per_frame: expected positive integer",
    )

    _require(
        isinstance(data["noise_snr_db"], (int, float)),
        "noise_snr_db: expected a number (use a large value for noiseless)",
    )

    rec = data["recon"]
    _require(rec["algo"] in ALGORITHMS, f"recon.algo: expected one of {ALGORITHMS}")
    _require(isinstance(rec["iterations"], int) and rec["iterations"] >= 1,
             "recon.iterations: expected integer >= 1")
    _require(rec["gamma"] > 0, "recon.gamma: must be > 0")
    _require(rec["cg_tol"] > 0, "recon.cg_tol: must be > 0")
    _require(rec["lambda_tv"] > 0, "recon.lambda_tv: must be > 0")
    den = rec["denoiser"]
    _require(den["kind"] in DENOISER_KINDS,
             f"recon.denoiser.kind: expected one of {DENOISER_KINDS}")
    _require(den["sigma"] >= 0, "recon.denoiser.sigma: must be >= 0")
    _require(den["tv_iters"] >= 1, "recon.denoiser.tv_iters: must be >= 1")

    ph = data["phantom"]
    if ph["regions"] is not None:
        _require(isinstance(ph["regions"], list), "phantom.regions: expected a list")
        for i, reg in enumerate(ph["regions"]):
            for key in ("center", "axes", "angle_deg", "t1_s", "t2_s", "pd"):
                _require(
                    isinstance(reg, dict) and key in reg,
                    f"phantom.regions[{i}]: missing field {key!r}",
                )
    return RunConfig(data)


def load_config(path: str | Path | None) -> RunConfig:
    """Load and validate a JSON config; None gives pure defaults."""
    if path is None:
        return validate({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return validate(raw)
