"""
Candidate feature bank: six statistics computed on both the time signal and
its power spectrum, six time-only and three spectrum-only features, for a
total of 21 kinds. Each kind is evaluated on the unfiltered signal and on
low-pass filtered copies at every configured cutoff, per channel.
"""
from dataclasses import dataclass, field

import numpy as np

from .dsp import lowpass, one_sided_power

__all__ = [
    'FEATURE_KINDS',
    'DEFAULT_CUTOFFS',
    'FeatureDescriptor',
    'FeatureMatrix',
    'Normalizer',
    'compute_feature',
    'feature_bank',
    'default_cutoffs',
    'candidate_descriptors',
    'extract_candidates',
    'extract_descriptors',
    'fit_normalizer',
]

EPS = 1e-12

_SHARED = ('mean', 'variance', 'skew', 'kurtosis', 'power', 'flatness')

# Order is the tie-break for equally scored descriptors. The three spectral
# location features run from the cheapest statistic (argmax) to the costliest.
FEATURE_KINDS = (
    tuple('time_' + s for s in _SHARED)
    + tuple('spec_' + s for s in _SHARED)
    + ('rms', 'abs_mean', 'maximum', 'minimum', 'dynamic_range', 'crest_factor',
       'dominant_frequency', 'median_frequency', 'spectral_centroid')
)

DEFAULT_CUTOFFS = (500.0, 1000.0, 2000.0, 5000.0, 10000.0)


def default_cutoffs(sample_rate):
    """The default cutoff set restricted to (0, Nyquist)."""
    return tuple(c for c in DEFAULT_CUTOFFS if c < sample_rate / 2.0)


@dataclass(frozen=True)
class FeatureDescriptor:
    """One candidate column: feature kind, low-pass cutoff (None = unfiltered)
    and channel name."""
    kind: str
    cutoff: float = None
    channel: str = 'ch0'

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError("unknown feature kind %r" % (self.kind,))
        if self.cutoff is not None:
            if not self.cutoff > 0:
                raise ValueError("cutoff must be positive")
            object.__setattr__(self, 'cutoff', float(self.cutoff))

    def sort_key(self):
        cut = (1, 0.0) if self.cutoff is None else (0, self.cutoff)
        return (FEATURE_KINDS.index(self.kind), cut)

    @property
    def name(self):
        cut = 'raw' if self.cutoff is None else '%gHz' % self.cutoff
        return '%s@%s/%s' % (self.kind, cut, self.channel)

    def to_dict(self):
        return {'kind': self.kind, 'cutoff': self.cutoff, 'channel': self.channel}

    @classmethod
    def from_dict(cls, d):
        return cls(d['kind'], d['cutoff'], d['channel'])


@dataclass
class FeatureMatrix:
    descriptors: list
    rows: np.ndarray
    labels: list = None

    def __post_init__(self):
        self.descriptors = list(self.descriptors)
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.descriptors):
            raise ValueError("rows must be (n_events, n_descriptors)")
        if not np.all(np.isfinite(rows)):
            raise ValueError("feature matrix contains non-finite values")
        if self.labels is not None:
            self.labels = list(self.labels)
            if len(self.labels) != rows.shape[0]:
                raise ValueError("need one label per row")
        self.rows = rows

    def __len__(self):
        return self.rows.shape[0]

    def column(self, descriptor):
        return self.rows[:, self.descriptors.index(descriptor)]


def _moments(x):
    mean = x.mean(axis=-1)
    dev = x - mean[..., None]
    var = (dev ** 2).mean(axis=-1)
    # standardized moments are scale free; rescaling keeps var**2 from
    # underflowing on tiny inputs
    amax = np.abs(dev).max(axis=-1)
    # zero spread (up to rounding) -> skew and kurtosis defined as 0
    ok = (amax > 0) & (amax > 1e-13 * np.abs(mean))
    u = dev / np.where(ok, amax, 1.0)[..., None]
    vu = np.where(ok, (u ** 2).mean(axis=-1), 1.0)
    skew = np.where(ok, (u ** 3).mean(axis=-1) / vu ** 1.5, 0.0)
    kurt = np.where(ok, (u ** 4).mean(axis=-1) / vu ** 2, 0.0)
    return mean, var, skew, kurt, (x ** 2).mean(axis=-1)


def _flatness(x):
    a = np.abs(x) + EPS
    return np.exp(np.log(a).mean(axis=-1)) / a.mean(axis=-1)


def feature_bank(x, sample_rate, kinds=FEATURE_KINDS):
    """Evaluate feature kinds on the last axis of ``x``.

    Returns a dict ``kind -> array`` with the leading shape of ``x``.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 4:
        raise ValueError("segment needs at least 4 samples, got %d" % x.shape[-1])
    kinds = tuple(kinds)
    out = {}
    need_time = any(k.startswith('time_') or k in ('rms', 'crest_factor') for k in kinds)
    if need_time:
        mean, var, skew, kurt, power = _moments(x)
        out.update(time_mean=mean, time_variance=var, time_skew=skew,
                   time_kurtosis=kurt, time_power=power)
        if 'time_flatness' in kinds:
            out['time_flatness'] = _flatness(x)
        rms = np.sqrt(power)
        out['rms'] = rms
        peak = np.abs(x).max(axis=-1)
        out['crest_factor'] = np.where(rms > 0, peak / np.where(rms > 0, rms, 1.0), 0.0)
    if 'abs_mean' in kinds:
        out['abs_mean'] = np.abs(x).mean(axis=-1)
    if {'maximum', 'minimum', 'dynamic_range'} & set(kinds):
        hi, lo = x.max(axis=-1), x.min(axis=-1)
        out.update(maximum=hi, minimum=lo, dynamic_range=hi - lo)

    if any(k.startswith('spec_') or k.endswith('frequency') or k == 'spectral_centroid'
           for k in kinds):
        p = one_sided_power(x)
        freqs = np.fft.rfftfreq(x.shape[-1], d=1.0 / sample_rate)
        mean, var, skew, kurt, power = _moments(p)
        out.update(spec_mean=mean, spec_variance=var, spec_skew=skew,
                   spec_kurtosis=kurt, spec_power=power)
        if 'spec_flatness' in kinds:
            out['spec_flatness'] = _flatness(p)
        total = p.sum(axis=-1)
        has_power = total > 0
        safe_total = np.where(has_power, total, 1.0)
        out['spectral_centroid'] = np.where(has_power, (p * freqs).sum(axis=-1) / safe_total, 0.0)
        cum = np.cumsum(p, axis=-1)
        idx = np.argmax(cum >= 0.5 * total[..., None], axis=-1)
        out['median_frequency'] = np.where(has_power, freqs[idx], 0.0)
        # argmax returns the first maximum, i.e. the lowest frequency on ties
        out['dominant_frequency'] = freqs[np.argmax(p, axis=-1)]

    return {k: out[k] for k in kinds}


def compute_feature(kind, x, sample_rate):
    """Single feature of a single-channel segment, as a float."""
    if kind not in FEATURE_KINDS:
        raise ValueError("unknown feature kind %r" % (kind,))
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("compute_feature expects a single channel")
    return float(feature_bank(x, sample_rate, (kind,))[kind])


def candidate_descriptors(kinds, cutoffs, channels):
    """All descriptors ordered by kind, cutoff ascending (unfiltered last),
    then channel."""
    for k in kinds:
        if k not in FEATURE_KINDS:
            raise ValueError("unknown feature kind %r" % (k,))
    kinds = sorted(set(kinds), key=FEATURE_KINDS.index)
    cuts = sorted(set(float(c) for c in cutoffs)) + [None]
    return [FeatureDescriptor(k, c, ch) for k in kinds for c in cuts for ch in channels]


def _stack_events(events):
    if not events:
        raise ValueError("no events to extract features from")
    first = events[0]
    for ev in events:
        if ev.samples is None:
            raise ValueError("event at %.4f s has no samples attached" % ev.start)
        if ev.samples.shape != first.samples.shape:
            raise ValueError("all event segments must have the same duration and channels")
        if ev.sample_rate != first.sample_rate or ev.channel_names != first.channel_names:
            raise ValueError("events come from recordings with different layouts")
    return np.stack([ev.samples for ev in events]), first.sample_rate, first.channel_names


def extract_descriptors(events, descriptors):
    """Feature matrix for an explicit list of descriptors.

    Only the cutoffs and kinds that the descriptors reference are computed.
    """
    data, fs, names = _stack_events(events)
    rows = np.empty((len(events), len(descriptors)))
    by_cutoff = {}
    for j, d in enumerate(descriptors):
        if d.channel not in names:
            raise ValueError("descriptor %s refers to unknown channel" % d.name)
        by_cutoff.setdefault(d.cutoff, []).append(j)
    for cutoff, cols in by_cutoff.items():
        filtered = data if cutoff is None else lowpass(data, cutoff, fs)
        kinds = sorted({descriptors[j].kind for j in cols}, key=FEATURE_KINDS.index)
        values = feature_bank(filtered, fs, kinds)
        for j in cols:
            d = descriptors[j]
            rows[:, j] = values[d.kind][:, names.index(d.channel)]
    labels = [ev.label for ev in events]
    if all(lab is None for lab in labels):
        labels = None
    return FeatureMatrix(descriptors, rows, labels)


def extract_candidates(events, cutoffs=None, kinds=FEATURE_KINDS):
    """Full candidate matrix over ``kinds x (cutoffs + unfiltered) x channels``.

    ``cutoffs=None`` uses the default set below Nyquist.
    """
    _, fs, names = _stack_events(events)
    if cutoffs is None:
        cutoffs = default_cutoffs(fs)
    return extract_descriptors(events, candidate_descriptors(kinds, cutoffs, names))


@dataclass
class Normalizer:
    """Z-score statistics of a training matrix.

    Columns whose training spread is zero are flagged ``degenerate`` and map
    to 0 for every input.
    """
    descriptors: list
    mean: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        self.descriptors = list(self.descriptors)
        self.mean = np.asarray(self.mean, dtype=float)
        self.std = np.asarray(self.std, dtype=float)
        if self.degenerate is None:
            self.degenerate = self.std <= 1e-12 * np.abs(self.mean)
        self.degenerate = np.asarray(self.degenerate, dtype=bool)
        if np.any(self.std < 0):
            raise ValueError("std must be non-negative")

    def apply(self, matrix):
        if list(matrix.descriptors) != self.descriptors:
            raise ValueError("feature matrix descriptors do not match the normalizer")
        return FeatureMatrix(self.descriptors, self.transform(matrix.rows), matrix.labels)

    def transform(self, rows):
        """Normalize raw values (last axis ordered like ``descriptors``)."""
        scale = np.where(self.degenerate, 1.0, self.std)
        z = (np.asarray(rows, dtype=float) - self.mean) / scale
        return np.where(self.degenerate, 0.0, z)

    def subset(self, descriptors):
        idx = [self.descriptors.index(d) for d in descriptors]
        return Normalizer(descriptors, self.mean[idx], self.std[idx], self.degenerate[idx])


def fit_normalizer(training):
    if len(training) < 2:
        raise ValueError("need at least 2 training rows to fit a normalizer")
    return Normalizer(training.descriptors, training.rows.mean(axis=0),
                      training.rows.std(axis=0))
