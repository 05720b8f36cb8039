"""Quantitative MR fingerprinting reconstruction toolkit.

Simulates compressed MRF acquisitions on synthetic phantoms and
reconstructs tissue-property maps (T1, T2, proton density) with a
plug-and-play ADMM solver whose shrinkage step is a swappable denoiser,
plus zero-fill and TV-regularised baselines and dictionary matching.
"""

from .datatypes import KSpaceData, SamplingMask, TissueMaps, TSMI
from .tensorio import read_tensor, write_tensor, TensorFormatError
from .epg import (
    SequenceParams,
    default_flip_schedule,
    default_sequence,
    load_flip_schedule,
    simulate_fingerprint,
    simulate_fingerprints,
    simulate_tsmi,
)
from .dictionary import (
    CompressedDictionary,
    ParamGrid,
    SubspaceBasis,
    build_dictionary,
    build_grid,
    compress,
    compute_subspace,
    match,
)
from .sampling import epi_mask, full_mask, spiral_mask, validate_mask, MaskReport
from .forward import CGResult, ForwardOperator, data_consistency
from .denoise import (
    DenoiserSpec,
    denoise,
    denormalize_range,
    normalize_range,
    total_variation,
    tv_denoise,
)
from .unet import (
    ArchitectureSpec,
    ArchiveError,
    WeightArchive,
    cnn_infer,
    load_weight_archive,
    save_weight_archive,
)
from .recon import PnPConfig, ReconTrace, lrtv, pnp_admm, svd_mrf
from .phantom import (
    EllipseRegion,
    PhantomSpec,
    add_measurement_noise,
    brain_phantom_spec,
    make_phantom,
    snap_spec_to_grid,
)
from .metrics import EvalReport, QuantityScores, evaluate_run, mae, psnr, ssim

__version__ = "0.1.0"
