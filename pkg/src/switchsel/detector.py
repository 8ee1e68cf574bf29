"""
Threshold detection of actuations on interval-PSD streams.

The threshold comes from the mean and standard deviation of the interval
power of actuation-free training data. Once an actuation starts, further
start points within the refractory period (the average switching time) are
ignored, which also swallows the second peak of a spring re-tensioning.
"""
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    'DetectionCalibration',
    'EventSegment',
    'calibrate',
    'StreamingDetector',
    'detect',
    'auto_label',
    'excerpt_events',
    'DEFAULT_MARGIN_K',
]

DEFAULT_MARGIN_K = 6.0


@dataclass(frozen=True)
class DetectionCalibration:
    threshold: float
    mean_noise: float
    std_noise: float
    margin_k: float
    refractory: float

    def __post_init__(self):
        if not self.refractory > 0:
            raise ValueError("refractory must be positive")
        if self.margin_k < 0 or self.std_noise < 0:
            raise ValueError("margin_k and std_noise must be non-negative")


@dataclass(frozen=True)
class EventSegment:
    """One detected actuation window.

    ``samples`` is an (n_channels, n) excerpt of the source recording, or
    None for events that have not been excerpted yet.
    """
    start: float
    end: float
    label: object = None
    samples: np.ndarray = None
    sample_rate: float = None
    channel_names: tuple = None

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError("event end must be after its start")

    @property
    def duration(self):
        return self.end - self.start


def calibrate(noise_psd, margin_k=DEFAULT_MARGIN_K, switching_durations=()):
    """Detection threshold and refractory period from training data.

    Parameters
    ----------
    noise_psd : IntervalPsdSeries or array_like
        Interval power of a stretch of recording without actuations.
    margin_k : float
        Threshold = mean + margin_k * std of the noise intervals.
    switching_durations : sequence of float
        Durations of training actuations in seconds; their mean is the
        refractory period.
    """
    values = np.asarray(getattr(noise_psd, 'values', noise_psd), dtype=float)
    durations = np.asarray(switching_durations, dtype=float)
    if values.size < 10:
        raise ValueError("need at least 10 noise intervals, got %d" % values.size)
    if durations.size < 1:
        raise ValueError("need at least one switching duration")
    if margin_k < 0:
        raise ValueError("margin_k must be non-negative")
    mean = float(values.mean())
    std = float(values.std())
    return DetectionCalibration(threshold=mean + margin_k * std, mean_noise=mean,
                                std_noise=std, margin_k=float(margin_k),
                                refractory=float(durations.mean()))


class StreamingDetector:
    """Incremental form of :func:`detect`.

    Feed interval power values in order with :meth:`push`; each call
    returns the start times of actuations that begin in the pushed block.
    The only state is the index of the next interval and the last start.
    """

    def __init__(self, calib, interval_len):
        if not interval_len > 0:
            raise ValueError("interval_len must be positive")
        self.calib = calib
        self.interval_len = float(interval_len)
        self.next_index = 0
        self.last_start = None

    def push(self, values):
        starts = []
        values = np.asarray(values, dtype=float)
        above = np.flatnonzero(values > self.calib.threshold)
        for i in above:
            t = (self.next_index + i) * self.interval_len
            # small slack so that refractory == k * interval_len is not lost
            # to rounding of the product above
            if self.last_start is None or t - self.last_start >= self.calib.refractory - 1e-9:
                starts.append(t)
                self.last_start = t
        self.next_index += len(values)
        return starts


def detect(psd, calib):
    """Unlabeled actuation windows ``[start, start + refractory)``."""
    det = StreamingDetector(calib, psd.interval_len)
    return [EventSegment(t, t + calib.refractory) for t in det.push(psd.values)]


def auto_label(events, cycle, start_state=None):
    """Label events by walking ``cycle`` from ``start_state``.

    With ``cycle=('on', 'off')`` this is the alternating on/off labelling of
    consecutive training actuations.
    """
    cycle = list(cycle)
    if not cycle:
        raise ValueError("cycle must not be empty")
    if start_state is None:
        start_state = cycle[0]
    try:
        offset = cycle.index(start_state)
    except ValueError:
        raise ValueError("start state %r is not in cycle %r" % (start_state, cycle)) from None
    return [replace(ev, label=cycle[(offset + i) % len(cycle)]) for i, ev in enumerate(events)]


def excerpt_events(series, events, drop_incomplete=True):
    """Attach the recording samples of each event window.

    Every window gets the same sample count, ``round(duration * rate)``.
    Windows running past the end of the recording are dropped (or raise if
    ``drop_incomplete`` is False).
    """
    fs = series.sample_rate
    out = []
    for ev in events:
        i0 = int(round(ev.start * fs))
        n = int(round(ev.duration * fs))
        if i0 < 0 or i0 + n > series.n_samples:
            if drop_incomplete:
                continue
            raise ValueError("event at %.4f s runs past the end of the recording" % ev.start)
        out.append(replace(ev, samples=series.channels[:, i0:i0 + n], sample_rate=fs,
                           channel_names=series.channel_names))
    return out
