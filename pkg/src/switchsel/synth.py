"""
Synthetic switchgear recordings.

An actuation is modelled as a sum of exponentially damped sinusoids (the
ringing of a released spring), optionally followed by a delayed second burst
when the spring snaps back into place. Corpora embed a schedule of such
actuations in white Gaussian noise at a requested SNR, cycling through the
scenario labels in the same order the auto-labeller assumes.
"""
from dataclasses import dataclass, fields, replace

import numpy as np

from .dsp import TimeSeries

__all__ = [
    'ActuationSpec',
    'Drift',
    'CorpusSpec',
    'TruthEvent',
    'generate_event',
    'generate_corpus',
    'benchmark_spec',
    'measure_snr',
]


@dataclass(frozen=True)
class ActuationSpec:
    dominant_freq: float
    secondary: tuple = ()
    damping: float = 30.0
    duration: float = 0.5
    amplitude: float = 0.5
    double_peak: tuple = None

    def validate(self, sample_rate):
        nyq = sample_rate / 2.0
        if not 0 < self.dominant_freq < nyq:
            raise ValueError("dominant_freq must lie in (0, Nyquist=%g)" % nyq)
        for f, _ in self.secondary:
            if not 0 < f < nyq:
                raise ValueError("secondary frequency %g outside (0, Nyquist)" % f)
        if not self.damping > 0:
            raise ValueError("damping must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.double_peak is not None:
            delay, _ = self.double_peak
            if not 0 < delay < self.duration:
                raise ValueError("double peak delay must lie inside the actuation")

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d['secondary'] = [list(s) for s in self.secondary]
        d['double_peak'] = None if self.double_peak is None else list(self.double_peak)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d['secondary'] = tuple(tuple(s) for s in d.get('secondary', ()))
        if d.get('double_peak') is not None:
            d['double_peak'] = tuple(d['double_peak'])
        return cls(**d)


@dataclass(frozen=True)
class Drift:
    """Linear change of one ActuationSpec parameter of one scenario, from
    ``start`` at the first event of the corpus to ``end`` at the last."""
    scenario: str
    parameter: str
    start: float
    end: float


@dataclass(frozen=True)
class CorpusSpec:
    scenarios: dict
    n_events: int = 20
    cycle: tuple = None
    gap: tuple = (1.0, 1.5)
    lead_in: float = 2.0
    snr_db: float = 20.0
    sample_rate: float = 48000.0
    drift: tuple = ()
    amplitude_jitter: float = 0.05
    freq_jitter: float = 0.0
    channel_gains: tuple = (1.0,)
    seed: int = 0

    def __post_init__(self):
        if self.cycle is None:
            object.__setattr__(self, 'cycle', tuple(self.scenarios))

    def validate(self):
        if not self.scenarios:
            raise ValueError("corpus needs at least one scenario")
        for label, spec in self.scenarios.items():
            spec.validate(self.sample_rate)
        if self.n_events < 0:
            raise ValueError("n_events must be non-negative")
        if not self.cycle or any(c not in self.scenarios for c in self.cycle):
            raise ValueError("cycle must list known scenarios")
        lo, hi = self.gap
        longest = max(s.duration for s in self.scenarios.values())
        if not longest < lo <= hi:
            raise ValueError("gaps must exceed the longest actuation (%g s)" % longest)
        if self.lead_in < 0:
            raise ValueError("lead_in must be non-negative")
        if not self.channel_gains:
            raise ValueError("need at least one channel")
        allowed = {'dominant_freq', 'damping', 'amplitude', 'duration'}
        for d in self.drift:
            if d.scenario not in self.scenarios or d.parameter not in allowed:
                raise ValueError("unsupported drift %r" % (d,))

    def to_dict(self):
        return {
            'scenarios': {k: v.to_dict() for k, v in self.scenarios.items()},
            'n_events': self.n_events,
            'cycle': list(self.cycle),
            'gap': list(self.gap),
            'lead_in': self.lead_in,
            'snr_db': self.snr_db,
            'sample_rate': self.sample_rate,
            'drift': [vars(d).copy() for d in self.drift],
            'amplitude_jitter': self.amplitude_jitter,
            'freq_jitter': self.freq_jitter,
            'channel_gains': list(self.channel_gains),
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d['scenarios'] = {k: ActuationSpec.from_dict(v) for k, v in d['scenarios'].items()}
        for key in ('cycle', 'gap', 'channel_gains'):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        d['drift'] = tuple(Drift(**x) for x in d.get('drift', ()))
        return cls(**d)


@dataclass(frozen=True)
class TruthEvent:
    start: float
    end: float
    label: str


def generate_event(spec, sample_rate):
    """Clean samples of one actuation, ``round(duration * rate)`` long."""
    spec.validate(sample_rate)
    n = int(round(spec.duration * sample_rate))
    t = np.arange(n) / float(sample_rate)
    burst = np.sin(2 * np.pi * spec.dominant_freq * t)
    for f, rel in spec.secondary:
        burst += rel * np.sin(2 * np.pi * f * t)
    burst *= spec.amplitude * np.exp(-spec.damping * t)
    x = burst.copy()
    if spec.double_peak is not None:
        delay, rel = spec.double_peak
        k = int(round(delay * sample_rate))
        x[k:] += rel * burst[:n - k]
    return x


def _drifted(spec, label, position, drift):
    for d in drift:
        if d.scenario == label:
            spec = replace(spec, **{d.parameter: d.start + (d.end - d.start) * position})
    return spec


def generate_corpus(spec):
    """Render a corpus.

    Returns
    -------
    series : TimeSeries
    truth : list of TruthEvent
        Exact start/end times and labels of the embedded actuations.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    fs = spec.sample_rate
    lo, hi = spec.gap

    rendered = []
    t = spec.lead_in
    for i in range(spec.n_events):
        label = spec.cycle[i % len(spec.cycle)]
        position = i / (spec.n_events - 1) if spec.n_events > 1 else 0.0
        ev = _drifted(spec.scenarios[label], label, position, spec.drift)
        scale = 1.0 + spec.freq_jitter * rng.standard_normal()
        ev = replace(ev,
                     amplitude=ev.amplitude * max(0.0, 1.0 + spec.amplitude_jitter * rng.standard_normal()),
                     dominant_freq=ev.dominant_freq * scale,
                     secondary=tuple((f * scale, r) for f, r in ev.secondary))
        i0 = int(round(t * fs))
        rendered.append((i0, label, generate_event(ev, fs)))
        t += rng.uniform(lo, hi)

    n_total = int(round((t + (lo if spec.n_events else 0.0)) * fs))
    n_total = max(n_total, int(round(spec.lead_in * fs)), 1)
    clean = np.zeros(n_total)
    truth = []
    for i0, label, x in rendered:
        clean[i0:i0 + len(x)] += x
        truth.append(TruthEvent(i0 / fs, (i0 + len(x)) / fs, label))

    if rendered:
        event_power = np.mean(np.concatenate([x for _, _, x in rendered]) ** 2)
        noise_std = np.sqrt(event_power / 10.0 ** (spec.snr_db / 10.0))
    else:
        # no events to reference; unit-power event assumed
        noise_std = np.sqrt(10.0 ** (-spec.snr_db / 10.0))

    gains = np.asarray(spec.channel_gains, dtype=float)
    data = gains[:, None] * clean[None, :]
    data += noise_std * rng.standard_normal(data.shape)
    names = tuple('ch%d' % i for i in range(len(gains)))
    return TimeSeries(data, fs, names), truth


def measure_snr(series, truth, channel=0):
    """SNR in dB measured from a rendered corpus.

    Noise power comes from samples outside every actuation window; event
    power is the excess power inside the windows.
    """
    x = series.channel(channel)
    fs = series.sample_rate
    inside = np.zeros(len(x), dtype=bool)
    for ev in truth:
        inside[int(round(ev.start * fs)):int(round(ev.end * fs))] = True
    noise = np.mean(x[~inside] ** 2)
    event = np.mean(x[inside] ** 2) - noise
    return 10.0 * np.log10(event / noise)


def benchmark_spec(n_events=20, seed=0, snr_db=20.0, double_peak=None, drift=(),
                   gap=(1.0, 1.5), **kwargs):
    """Default two-scenario benchmark: 'on' rings at 400 Hz, 'off' at 700 Hz."""
    scen = {
        'on': ActuationSpec(400.0, damping=30.0, duration=0.5, double_peak=double_peak),
        'off': ActuationSpec(700.0, damping=30.0, duration=0.5, double_peak=double_peak),
    }
    return CorpusSpec(scen, n_events=n_events, cycle=('on', 'off'), gap=gap, snr_db=snr_db,
                      sample_rate=48000.0, drift=tuple(drift), seed=seed, **kwargs)
