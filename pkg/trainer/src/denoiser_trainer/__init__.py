"""Denoiser training for the MRF reconstruction toolkit (secondary package)."""

from .model import DenoiserNet, ResBlock
from .train import TrainConfig, TrainResult, train, validation_loss
from .export import export_parity_fixture, load_archive_into, save_archive, layer_order
from . import data, qmrt

__version__ = "0.1.0"
