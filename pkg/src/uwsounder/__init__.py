"""Wideband multitone channel sounding for underwater acoustic links.

Typical flow::

    x = synthesize_multitone(cfg)                 # probe
    y = apply_channel(x, channel)                 # or a recording
    H, h, track = compensate(y, cfg)              # TVFR, TVIR, initial-delay track
    report = characterize_channel(h, H)
"""

from .channel_sim import (ChannelSpec, DelaySway, DopplerShift, GeometrySpec, PathSpec,
                          RicianFading, Static, analytic_tvfr, apply_channel, geometry_paths)
from .characterize import (ChannelParams, ChannelReport, Coherence, CorrelationFunction,
                           ScatteringFunction, SpectrumProfile, characterize_channel,
                           coherence_bandwidth, coherence_time, delay_profile,
                           delay_profile_from_correlation, doppler_spectrum,
                           doppler_spectrum_from_correlation, freq_autocorrelation,
                           peak_width_3db, predicted_rx_autocorrelation, predicted_rx_psd,
                           rms_width, scattering_function, time_autocorrelation,
                           tone_doppler_spectra, tone_time_autocorrelation,
                           waveform_autocorrelation)
from .delay_comp import (DelayTrack, compensate, drift_rate, estimate_initial_delay,
                         resample)
from .errors import *  # noqa: F401,F403
from .estimator import (TVFR, TVIR, CalibrationCurve, compensate_transducer,
                        design_prototype_filter, filterbank_estimate, tvfr_from_tvir,
                        tvir_from_tvfr)
from .multipath import (PathDecomposition, decompose, detect_paths, extract_path,
                        per_path_report)
from .signal_gen import SoundingConfig, Waveform, papr, synthesize_multitone, zadoff_chu
from .stats_fit import GainSamples, RicianFit, fit_rician, rician_pdf, segment_gains

__version__ = "0.1.0"
