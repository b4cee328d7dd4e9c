"""Orientation scheduling, pilot simulation and channel estimation."""

from .beamtrain import BeamTrainResult, beam_train, channel_oracle, dft_codebook, orientation_codebook
from .ml import golden_section, grid_directions, ml_estimate
from .model import (
    PathParameters,
    angle_error,
    angles_of,
    direction,
    nmse,
    reconstruct,
    reconstruct_and_nmse,
    true_parameters,
)
from .music import ls_coefficients, music_estimate, music_spectrum
from .pilots import Measurement, noise_for_snr, orthogonal_pilots, simulate_pilots
from .schedule import PilotSchedule, fibonacci_cap, schedule_orientations
from .sparse import SparseResult, angle_dictionary, omp_recover

__all__ = [
    "BeamTrainResult",
    "Measurement",
    "PathParameters",
    "PilotSchedule",
    "SparseResult",
    "angle_dictionary",
    "angle_error",
    "angles_of",
    "beam_train",
    "channel_oracle",
    "dft_codebook",
    "direction",
    "fibonacci_cap",
    "golden_section",
    "grid_directions",
    "ls_coefficients",
    "ml_estimate",
    "music_estimate",
    "music_spectrum",
    "nmse",
    "noise_for_snr",
    "omp_recover",
    "orientation_codebook",
    "orthogonal_pilots",
    "reconstruct",
    "reconstruct_and_nmse",
    "schedule_orientations",
    "simulate_pilots",
    "true_parameters",
]
