"""
Signal containers and the DSP primitives used by detection and feature
extraction.

All spectra here share one normalization: a one-sided periodogram whose bins
sum to the mean squared sample value of the segment (power, not energy).
That keeps detection thresholds independent of the interval length.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.signal as sig

__all__ = [
    'TimeSeries',
    'IntervalPsdSeries',
    'Spectrum',
    'compute_interval_psd',
    'lowpass',
    'one_sided_power',
    'segment_spectrum',
    'LOWPASS_ORDER',
]

# Butterworth order, applied forward and backward. Squared magnitude of an
# order-8 prototype: 0.12 dB down at 0.8*fc and 48 dB down at 2*fc.
LOWPASS_ORDER = 8


@dataclass(frozen=True)
class TimeSeries:
    """Multi-channel sampled signal.

    ``channels`` has shape (n_channels, n_samples).
    """
    channels: np.ndarray
    sample_rate: float
    channel_names: tuple = field(default=None)

    def __post_init__(self):
        data = np.asarray(self.channels, dtype=float)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2:
            raise ValueError("channels must be 1-D or 2-D (n_channels, n_samples)")
        if data.shape[1] < 1:
            raise ValueError("time series must contain at least one sample")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        names = self.channel_names
        if names is None:
            names = tuple('ch%d' % i for i in range(data.shape[0]))
        names = tuple(str(n) for n in names)
        if len(names) != data.shape[0]:
            raise ValueError("need one name per channel")
        if len(set(names)) != len(names):
            raise ValueError("channel names must be unique")
        data.setflags(write=False)
        object.__setattr__(self, 'channels', data)
        object.__setattr__(self, 'sample_rate', float(self.sample_rate))
        object.__setattr__(self, 'channel_names', names)

    @property
    def n_samples(self):
        return self.channels.shape[1]

    @property
    def duration(self):
        return self.n_samples / self.sample_rate

    def channel(self, name):
        """Samples of one channel, looked up by name or index."""
        if isinstance(name, (int, np.integer)):
            return self.channels[name]
        try:
            return self.channels[self.channel_names.index(str(name))]
        except ValueError:
            raise KeyError("unknown channel %r" % (name,)) from None


@dataclass(frozen=True)
class IntervalPsdSeries:
    """Total spectral power of consecutive, non-overlapping intervals."""
    values: np.ndarray
    interval_len: float
    channel: str = 'ch0'

    def __post_init__(self):
        if not self.interval_len > 0:
            raise ValueError("interval_len must be positive")
        values = np.asarray(self.values, dtype=float)
        if np.any(values < 0):
            raise ValueError("interval power must be non-negative")
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return len(self.values)

    def times(self):
        """Start time of every interval in seconds."""
        return np.arange(len(self.values)) * self.interval_len


@dataclass(frozen=True)
class Spectrum:
    bin_frequencies: np.ndarray
    bin_powers: np.ndarray
    resolution: float


def one_sided_power(x, axis=-1):
    """One-sided rectangular-window periodogram along ``axis``.

    Scaled so that the bins sum to ``mean(x**2)``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    p = np.abs(np.fft.rfft(x, axis=axis)) ** 2 / float(n * n)
    p = np.moveaxis(p, axis, -1)
    # every bin except DC (and Nyquist for even n) has a mirrored twin
    last = p.shape[-1] if n % 2 else p.shape[-1] - 1
    p[..., 1:last] *= 2.0
    return np.moveaxis(p, -1, axis)


def compute_interval_psd(x, sample_rate, interval_len, channel='ch0'):
    """Compress a single channel into per-interval spectral power.

    Parameters
    ----------
    x : array_like
        Samples of one channel.
    sample_rate : float
        Sampling rate in Hz.
    interval_len : float
        Interval length in seconds. Rounded to a whole number of samples;
        the returned series records the realised length.

    Returns
    -------
    IntervalPsdSeries
        One value per full interval. A trailing partial interval is dropped.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("compute_interval_psd expects a single channel")
    if not sample_rate > 0 or not interval_len > 0:
        raise ValueError("sample_rate and interval_len must be positive")
    n = int(round(interval_len * sample_rate))
    if n < 2:
        raise ValueError("interval must span at least 2 samples, got %d" % n)
    count = len(x) // n
    if count < 1:
        raise ValueError("signal (%d samples) shorter than one interval (%d samples)"
                         % (len(x), n))
    blocks = x[:count * n].reshape(count, n)
    values = one_sided_power(blocks, axis=1).sum(axis=1)
    return IntervalPsdSeries(values, n / float(sample_rate), str(channel))


def _lowpass_sos(cutoff, sample_rate):
    return sig.butter(LOWPASS_ORDER, cutoff, btype='lowpass', output='sos', fs=sample_rate)


def lowpass(x, cutoff, sample_rate=None):
    """Zero-phase low-pass filter.

    ``x`` is either a :class:`TimeSeries` (``sample_rate`` taken from it and a
    new TimeSeries returned) or an array filtered along its last axis.
    A cutoff at or above Nyquist returns the input unchanged.
    """
    if isinstance(x, TimeSeries):
        out = lowpass(x.channels, cutoff, x.sample_rate)
        return TimeSeries(out, x.sample_rate, x.channel_names)
    if sample_rate is None or not sample_rate > 0:
        raise ValueError("sample_rate required for array input")
    if cutoff is None or not cutoff > 0:
        raise ValueError("cutoff must be positive, got %r" % (cutoff,))
    x = np.asarray(x, dtype=float)
    if cutoff >= sample_rate / 2.0:
        return x.copy()
    sos = _lowpass_sos(cutoff, sample_rate)
    n = x.shape[-1]
    padlen = min(3 * (2 * len(sos) + 1), n - 1)
    return sig.sosfiltfilt(sos, x, axis=-1, padlen=max(padlen, 0))


def segment_spectrum(x, sample_rate):
    """One-sided power spectrum of a single segment (rectangular window)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("segment_spectrum expects a single channel")
    if len(x) < 4:
        raise ValueError("segment needs at least 4 samples, got %d" % len(x))
    freqs = np.fft.rfftfreq(len(x), d=1.0 / sample_rate)
    return Spectrum(freqs, one_sided_power(x), sample_rate / float(len(x)))
