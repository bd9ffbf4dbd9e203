"""Speech declipping toolkit: clipping, STFT metrics, A-SPADE, and a learned model."""

from ._declip import (
    Model,
    clip,
    declip_aspade,
    find_threshold,
    istft,
    sdr,
    sdr_clipped,
    stft,
    synth_clip,
    total_loss,
)

__all__ = [
    "Model",
    "clip",
    "declip_aspade",
    "find_threshold",
    "istft",
    "sdr",
    "sdr_clipped",
    "stft",
    "synth_clip",
    "total_loss",
]
