"""Orientation and resource optimization."""

from ._core import OptimizationResult, waterfill
from .isac import SensingTask, disk_samples, isac_minecho_bcd, min_downlink_power
from .miso import (
    critical_array_size,
    fixed_orientations,
    optimal_pointing_miso,
    snr_at,
    ula_snr_asymptote,
    ula_snr_closed_form,
)
from .mimo import mimo_capacity, mimo_capacity_bcd, waterfill_covariance
from .multiuser import maxmin_rate, maxmin_sinr_ao, receive_beamformers
from .wideband import wideband_sumrate_ao

__all__ = [
    "OptimizationResult",
    "SensingTask",
    "critical_array_size",
    "disk_samples",
    "fixed_orientations",
    "isac_minecho_bcd",
    "maxmin_rate",
    "maxmin_sinr_ao",
    "mimo_capacity",
    "mimo_capacity_bcd",
    "min_downlink_power",
    "optimal_pointing_miso",
    "receive_beamformers",
    "snr_at",
    "ula_snr_asymptote",
    "ula_snr_closed_form",
    "waterfill",
    "waterfill_covariance",
    "wideband_sumrate_ao",
]
