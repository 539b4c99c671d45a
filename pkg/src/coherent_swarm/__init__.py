"""Simulator for open-loop two-node beamforming with wireless ranging and frequency transfer."""

from .beamform import GcResult, NodeEmission, coherent_gain, coherent_sum, steering_phase, total_phase
from .channel import LinkBudget, NodeGeometry, propagate, round_trip_delay
from .config import ConfigError, RunConfig, dump_config, parse_config
from .constants import C, wavelength
from .experiment import ExperimentConfig, TraceRow, export_trace, run_experiment
from .montecarlo import GcSurface, McConfig, requirement_contour, run_surface
from .ranging import (
    CrlbReport,
    RangeEstimate,
    crlb,
    estimate_delay,
    matched_filter,
    max_coherent_frequency,
    second_moment,
)
from .sync import (
    MixerChainConfig,
    PhaseState,
    carrier_phase_shift_sync,
    ref_phase_shift,
    self_mix,
    tone_phase_shifts,
)
from .waveform import SampledSignal, SyncToneParams, TtsfwParams, generate_sync_tones, generate_ttsfw

__version__ = "0.1.0"
