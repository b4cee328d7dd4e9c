"""Rotatable-antenna channel modeling, orientation optimization and channel estimation."""

from .geometry import (
    ArrayLayout,
    Orientation,
    RotationAngles,
    RotationConstraint,
    orient_antenna,
    orient_from_zenith_azimuth,
    project_to_cone,
    quantize_orientation,
    rotate_array,
    rotation_matrix,
)
from .radiation import (
    CosinePattern,
    GainPattern,
    ThreeGPPPattern,
    directional_gain,
    gain,
    incident_angles,
    pattern_power_integral,
    polarization_gain,
)
from .channel import (
    Scenario,
    WidebandConfig,
    farfield_channel,
    mimo_channel,
    nearfield_los,
    nlos_multipath,
    polarized_channel,
    total_channel,
    wideband_response,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayLayout",
    "CosinePattern",
    "GainPattern",
    "Orientation",
    "RotationAngles",
    "RotationConstraint",
    "Scenario",
    "ThreeGPPPattern",
    "WidebandConfig",
    "directional_gain",
    "farfield_channel",
    "gain",
    "incident_angles",
    "mimo_channel",
    "nearfield_los",
    "nlos_multipath",
    "orient_antenna",
    "orient_from_zenith_azimuth",
    "pattern_power_integral",
    "polarization_gain",
    "polarized_channel",
    "project_to_cone",
    "quantize_orientation",
    "rotate_array",
    "rotation_matrix",
    "total_channel",
    "wideband_response",
]
