"""Differential-entropy features from raw multichannel signals.

A recording is cut into consecutive non-overlapping slices; each channel of
each slice is band-limited with an FFT brick-wall mask and summarized by the
differential entropy of a Gaussian with the segment's variance. The result
is one channels-by-bands feature frame per slice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_BANDS",
    "RawRecording",
    "DEFeatureFrame",
    "bandpass",
    "differential_entropy",
    "extract_de",
]

# (name, low Hz, high Hz); the five conventional EEG rhythms
DEFAULT_BANDS: tuple[tuple[str, float, float], ...] = (
    ("delta", 1.0, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 14.0),
    ("beta", 14.0, 31.0),
    ("gamma", 31.0, 51.0),
)

_VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class RawRecording:
    """Multichannel signal: ``samples`` is C x N microvolts at ``sample_rate`` Hz."""

    channels: tuple[str, ...]
    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-D (channels x samples), got shape {samples.shape}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channels", tuple(str(c) for c in self.channels))
        if len(self.channels) != samples.shape[0]:
            raise ValueError(
                f"{len(self.channels)} channel names for {samples.shape[0]} signal rows"
            )
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")


@dataclass(frozen=True)
class DEFeatureFrame:
    """One slice's features: ``values[c, s]`` is DE of channel c in band s."""

    values: np.ndarray
    slice_index: int
    slice_length_s: float

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D (channels x bands), got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("feature frame contains non-finite values")
        object.__setattr__(self, "values", values)


def validate_bands(bands) -> tuple[tuple[str, float, float], ...]:
    out = []
    for entry in bands:
        name, low, high = entry
        low, high = float(low), float(high)
        if not 0 < low < high:
            raise ValueError(f"band {name!r} needs 0 < low < high, got [{low}, {high}]")
        out.append((str(name), low, high))
    if not out:
        raise ValueError("band set is empty")
    return tuple(out)


def bandpass(signal, sample_rate: float, low: float, high: float) -> np.ndarray:
    """Brick-wall bandpass: zero every FFT bin outside [low, high] Hz.

    The real-input transform handles the mirrored negative frequencies
    implicitly, so masking its bins masks both halves of the spectrum.
    Output length equals input length; in-band content passes untouched.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError(f"bandpass expects a 1-D signal, got shape {signal.shape}")
    if not 0 < low < high:
        raise ValueError(f"need 0 < low < high, got low={low}, high={high}")
    if high >= sample_rate / 2:
        raise ValueError(
            f"high edge {high} Hz reaches the Nyquist limit {sample_rate / 2} Hz"
        )
    spectrum = np.fft.rfft(signal)
    freqs = np.fft.rfftfreq(signal.size, d=1.0 / sample_rate)
    spectrum[(freqs < low) | (freqs > high)] = 0.0
    return np.fft.irfft(spectrum, n=signal.size)


def differential_entropy(band_signal) -> float:
    """DE of a Gaussian fit: 0.5 * ln(2*pi*e * var), unbiased variance.

    The variance is floored at 1e-12 so silent channels give a large
    negative value instead of -inf.
    """
    band_signal = np.asarray(band_signal, dtype=np.float64)
    if band_signal.ndim != 1 or band_signal.size < 2:
        raise ValueError(
            f"differential entropy needs a 1-D segment of >= 2 samples, got shape {band_signal.shape}"
        )
    var = max(float(np.var(band_signal, ddof=1)), _VAR_FLOOR)
    return 0.5 * float(np.log(2.0 * np.pi * np.e * var))


def extract_de(recording: RawRecording, bands=DEFAULT_BANDS, slice_length_s: float = 1.0):
    """Cut into non-overlapping slices and compute per-channel, per-band DE.

    Returns one DEFeatureFrame per complete slice, in time order; a trailing
    partial slice is discarded. Frame count is floor(N / samples-per-slice).
    """
    bands = validate_bands(bands)
    if max(high for _, _, high in bands) >= recording.sample_rate / 2:
        raise ValueError(
            f"band edges reach Nyquist: highest edge {max(h for _, _, h in bands)} Hz "
            f"at sample rate {recording.sample_rate} Hz"
        )
    samples_per_slice = int(round(slice_length_s * recording.sample_rate))
    if samples_per_slice < 2:
        raise ValueError(
            f"slice of {slice_length_s} s at {recording.sample_rate} Hz "
            f"holds {samples_per_slice} samples; need >= 2"
        )
    n_channels, n_samples = recording.samples.shape
    n_slices = n_samples // samples_per_slice
    frames = []
    for t in range(n_slices):
        segment = recording.samples[:, t * samples_per_slice : (t + 1) * samples_per_slice]
        values = np.empty((n_channels, len(bands)))
        for c in range(n_channels):
            for s, (_, low, high) in enumerate(bands):
                filtered = bandpass(segment[c], recording.sample_rate, low, high)
                values[c, s] = differential_entropy(filtered)
        frames.append(DEFeatureFrame(values=values, slice_index=t, slice_length_s=slice_length_s))
    return frames
