"""
File formats: WAV and CSV recordings, JSON model files, ground-truth files,
run configurations and JSON-lines event logs.

Every structured file carries a ``schema`` string. Floats go through
:mod:`json`, whose repr-based encoding round-trips doubles exactly.
"""
import csv
import json
from dataclasses import asdict, dataclass, fields

import numpy as np
import scipy.io.wavfile as wavfile

from .classifier import DEFAULT_ALARM_THRESHOLD, DEFAULT_ALPHA, DEFAULT_MIN_SIGMA, VoteMode
from .detector import DEFAULT_MARGIN_K, DetectionCalibration
from .dsp import TimeSeries
from .features import FEATURE_KINDS, FeatureDescriptor, Normalizer
from .selector import (DEFAULT_M, DEFAULT_TRAIN_PER_SCENARIO, ClusterCenters,
                       FeatureQualityReport, Model)
from .synth import TruthEvent

__all__ = [
    'DataError',
    'ModelFileError',
    'MODEL_SCHEMA',
    'TRUTH_SCHEMA',
    'CONFIG_SCHEMA',
    'EVENT_SCHEMA',
    'RunConfig',
    'read_recording',
    'iter_recording',
    'write_recording',
    'model_to_dict',
    'model_from_dict',
    'save_model',
    'load_model',
    'save_truth',
    'load_truth',
    'EventLog',
    'read_event_log',
]

MODEL_SCHEMA = 'switchsel.model/1'
TRUTH_SCHEMA = 'switchsel.truth/1'
CONFIG_SCHEMA = 'switchsel.config/1'
EVENT_SCHEMA = 'switchsel.event/1'


class DataError(ValueError):
    """Unreadable or inconsistent input data."""


class ModelFileError(ValueError):
    """Model file missing, malformed or of an unsupported schema version."""


@dataclass
class RunConfig:
    interval_len: float = 0.033
    margin_k: float = DEFAULT_MARGIN_K
    cutoffs: list = None
    kinds: list = None
    m: int = DEFAULT_M
    alpha: float = DEFAULT_ALPHA
    vote_mode: str = VoteMode.EQUAL.value
    alarm_threshold: float = DEFAULT_ALARM_THRESHOLD
    min_sigma: float = DEFAULT_MIN_SIGMA
    trigger_channel: str = None
    cycle: list = ('on', 'off')
    start_state: str = None
    train_per_scenario: int = DEFAULT_TRAIN_PER_SCENARIO
    noise_duration: float = 1.0
    switching_duration: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.cycle = [str(c) for c in self.cycle]
        if self.cutoffs is not None:
            self.cutoffs = [float(c) for c in self.cutoffs]
        if self.kinds is not None:
            self.kinds = list(self.kinds)
        self.validate()

    def validate(self):
        if not self.interval_len > 0:
            raise ValueError("interval_len must be positive")
        if self.margin_k < 0:
            raise ValueError("margin_k must be non-negative")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        VoteMode(self.vote_mode)
        if not self.alarm_threshold > 0:
            raise ValueError("alarm_threshold must be positive")
        if len(self.cycle) < 2:
            raise ValueError("cycle needs at least two scenarios")
        if self.train_per_scenario < 1:
            raise ValueError("train_per_scenario must be at least 1")
        if not self.switching_duration > 0 or not self.noise_duration > 0:
            raise ValueError("durations must be positive")
        for k in self.kinds or ():
            if k not in FEATURE_KINDS:
                raise ValueError("unknown feature kind %r" % (k,))

    @property
    def feature_kinds(self):
        return tuple(self.kinds) if self.kinds is not None else FEATURE_KINDS

    def to_dict(self):
        d = asdict(self)
        d['cycle'] = list(self.cycle)
        return {'schema': CONFIG_SCHEMA, **d}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        schema = d.pop('schema', CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise DataError("unsupported config schema %r" % (schema,))
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DataError("unknown config keys: %s" % ', '.join(sorted(unknown)))
        return cls(**d)

    def save(self, path):
        with open(path, 'w') as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write('\n')

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as err:
            raise DataError("cannot read config %s: %s" % (path, err)) from None


# -- recordings ---------------------------------------------------------------

def _pcm_to_float(data):
    if data.dtype == np.int16:
        return data.astype(float) / 32768.0
    if data.dtype == np.int32:
        return data.astype(float) / 2147483648.0
    if data.dtype == np.uint8:
        return (data.astype(float) - 128.0) / 128.0
    if np.issubdtype(data.dtype, np.floating):
        return data.astype(float)
    raise DataError("unsupported WAV sample type %s" % data.dtype)


def _fmt(path):
    p = str(path).lower()
    if p.endswith('.wav'):
        return 'wav'
    if p.endswith('.csv'):
        return 'csv'
    raise DataError("unsupported recording format: %s (use .wav or .csv)" % path)


def _csv_header(reader, path):
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("%s is empty" % path) from None
    if len(header) < 2 or header[0].strip().lower() != 'time':
        raise DataError("%s: header must be 'time,<channel>,...'" % path)
    return [h.strip() for h in header[1:]]


def _csv_rate(times, path):
    steps = np.diff(times)
    if len(steps) == 0:
        raise DataError("%s: need at least two rows to infer the sample rate" % path)
    dt = np.median(steps)
    if not dt > 0 or np.max(np.abs(steps - dt)) > 1e-3 * dt:
        raise DataError("%s: time column is not uniformly sampled" % path)
    return 1.0 / dt


def iter_recording(path, chunk_samples=1 << 16):
    """Stream a recording in chunks of at most ``chunk_samples`` samples.

    Yields ``(sample_rate, channel_names, chunk)`` with ``chunk`` shaped
    (n_channels, n). Memory use does not grow with the recording length.
    """
    fmt = _fmt(path)
    if fmt == 'wav':
        try:
            rate, data = wavfile.read(path, mmap=True)
        except (OSError, ValueError) as err:
            raise DataError("cannot read %s: %s" % (path, err)) from None
        if data.size == 0:
            return
        data = data.reshape(len(data), -1)
        names = tuple('ch%d' % i for i in range(data.shape[1]))
        for i in range(0, len(data), chunk_samples):
            yield float(rate), names, _pcm_to_float(np.array(data[i:i + chunk_samples])).T
        return

    try:
        fh = open(path, newline='')
    except OSError as err:
        raise DataError("cannot read %s: %s" % (path, err)) from None
    with fh:
        reader = csv.reader(fh)
        names = tuple(_csv_header(reader, path))
        rows = []
        rate = None
        last_t = None
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise DataError("%s:%d: non-numeric value" % (path, line_no)) from None
            if len(values) != len(names) + 1:
                raise DataError("%s:%d: expected %d columns" % (path, line_no, len(names) + 1))
            rows.append(values)
            if rate is None and len(rows) >= 2:
                head = np.array(rows)[:, 0]
                rate = _csv_rate(head, path)
            # the rate needs two rows, so a chunk can lag by one row
            while len(rows) >= chunk_samples and rate is not None:
                block = np.array(rows[:chunk_samples])
                _check_spacing(block[:, 0], last_t, rate, path)
                last_t = block[-1, 0]
                yield rate, names, block[:, 1:].T
                rows = rows[chunk_samples:]
        if rows:
            block = np.array(rows)
            if rate is None:
                rate = _csv_rate(block[:, 0], path)
            _check_spacing(block[:, 0], last_t, rate, path)
            yield rate, names, block[:, 1:].T


def _check_spacing(times, last_t, rate, path):
    t = times if last_t is None else np.concatenate([[last_t], times])
    if len(t) > 1 and np.max(np.abs(np.diff(t) * rate - 1.0)) > 1e-3:
        raise DataError("%s: time column is not uniformly sampled" % path)


def read_recording(path):
    """Load a whole WAV or CSV recording as a :class:`TimeSeries`.

    Integer PCM is scaled to [-1, 1).
    """
    chunks, rate, names = [], None, None
    for rate, names, chunk in iter_recording(path, chunk_samples=1 << 20):
        chunks.append(chunk)
    if not chunks:
        raise DataError("%s contains no samples" % path)
    return TimeSeries(np.concatenate(chunks, axis=1), rate, names)


def write_recording(path, series, bits=32):
    """Write a recording; ``.wav`` as integer PCM (16 or 32 bit), ``.csv``
    with a time column."""
    fmt = _fmt(path)
    x = series.channels
    if fmt == 'wav':
        if bits not in (16, 32):
            raise ValueError("bits must be 16 or 32")
        full = 2.0 ** (bits - 1)
        if np.max(np.abs(x)) >= 1.0:
            raise DataError("samples exceed the PCM full scale [-1, 1)")
        pcm = np.round(x.T * full).astype(np.int16 if bits == 16 else np.int32)
        rate = series.sample_rate
        if rate != int(rate):
            raise DataError("WAV needs an integer sample rate")
        wavfile.write(path, int(rate), pcm if pcm.shape[1] > 1 else pcm[:, 0])
        return
    t = np.arange(series.n_samples) / series.sample_rate
    with open(path, 'w', newline='') as fh:
        w = csv.writer(fh)
        w.writerow(['time'] + list(series.channel_names))
        for i in range(series.n_samples):
            w.writerow([repr(float(t[i]))] + [repr(float(v)) for v in x[:, i]])


# -- models -------------------------------------------------------------------

def _floats(a):
    return [float(v) for v in np.ravel(a)]


def model_to_dict(model, config=None):
    n_s, n_d = len(model.scenarios), len(model.descriptors)
    d = {
        'schema': MODEL_SCHEMA,
        'descriptors': [x.to_dict() for x in model.descriptors],
        'scenarios': list(model.scenarios),
        'cycle': list(model.cycle),
        'fc': _floats(model.fc),
        'normalizer': {
            'mean': _floats(model.normalizer.mean),
            'std': _floats(model.normalizer.std),
            'degenerate': [bool(v) for v in model.normalizer.degenerate],
        },
        'centers': [_floats(model.centers.centers[i]) for i in range(n_s)],
        'sigma': [_floats(model.centers.sigma[i]) for i in range(n_s)],
        'calibration': None if model.calibration is None else asdict(model.calibration),
        'metadata': dict(model.metadata),
        'config': None if config is None else config.to_dict(),
        'report': None,
    }
    assert len(d['fc']) == n_d
    if model.report is not None:
        d['report'] = {
            'descriptors': [x.to_dict() for x in model.report.descriptors],
            'fc': _floats(model.report.fc),
        }
    return d


def model_from_dict(d):
    if not isinstance(d, dict) or 'schema' not in d:
        raise ModelFileError("not a model file (no schema)")
    if d['schema'] != MODEL_SCHEMA:
        raise ModelFileError("model schema %r is not supported (expected %r)"
                             % (d['schema'], MODEL_SCHEMA))
    try:
        descriptors = [FeatureDescriptor.from_dict(x) for x in d['descriptors']]
        norm = d['normalizer']
        normalizer = Normalizer(descriptors, norm['mean'], norm['std'], norm['degenerate'])
        centers = ClusterCenters(d['scenarios'], descriptors, d['centers'], d['sigma'])
        calib = d.get('calibration')
        report = d.get('report')
        if report is not None:
            report = FeatureQualityReport(
                [FeatureDescriptor.from_dict(x) for x in report['descriptors']], report['fc'])
        return Model(descriptors, normalizer, centers, d['fc'],
                     calibration=None if calib is None else DetectionCalibration(**calib),
                     cycle=d.get('cycle'), metadata=d.get('metadata') or {}, report=report)
    except (KeyError, TypeError, ValueError) as err:
        raise ModelFileError("malformed model file: %s" % err) from None


def save_model(path, model, config=None):
    text = json.dumps(model_to_dict(model, config), indent=1, sort_keys=True)
    with open(path, 'w') as fh:
        fh.write(text + '\n')


def load_model(path):
    """Load a model file; returns ``(model, config or None)``."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as err:
        raise ModelFileError("cannot read model %s: %s" % (path, err)) from None
    except json.JSONDecodeError as err:
        raise ModelFileError("model %s is not valid JSON: %s" % (path, err)) from None
    model = model_from_dict(d)
    config = d.get('config')
    try:
        config = None if config is None else RunConfig.from_dict(config)
    except (DataError, TypeError, ValueError) as err:
        raise ModelFileError("malformed config in model file: %s" % err) from None
    return model, config


# -- ground truth -------------------------------------------------------------

def save_truth(path, truth, sample_rate, duration):
    d = {
        'schema': TRUTH_SCHEMA,
        'sample_rate': float(sample_rate),
        'duration': float(duration),
        'events': [{'start': e.start, 'end': e.end, 'label': e.label} for e in truth],
    }
    with open(path, 'w') as fh:
        json.dump(d, fh, indent=1)
        fh.write('\n')


def load_truth(path):
    """Returns ``(events, sample_rate, duration)``."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise DataError("cannot read truth file %s: %s" % (path, err)) from None
    if d.get('schema') != TRUTH_SCHEMA:
        raise DataError("%s is not a ground-truth file (%s)" % (path, TRUTH_SCHEMA))
    events = [TruthEvent(float(e['start']), float(e['end']), e['label']) for e in d['events']]
    return events, float(d['sample_rate']), float(d['duration'])


# -- event log ----------------------------------------------------------------

class EventLog:
    """Append-only JSON-lines log, one record per detected actuation."""

    def __init__(self, fh):
        self.fh = fh
        self.last_time = None
        self.count = 0

    def append(self, record):
        t = record['time']
        if self.last_time is not None and t < self.last_time:
            raise ValueError("event log records must be time ordered")
        self.last_time = t
        self.fh.write(json.dumps({'schema': EVENT_SCHEMA, **record}, sort_keys=True) + '\n')
        self.fh.flush()
        self.count += 1


def read_event_log(path):
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = json.loads(line)
                if rec.get('schema') != EVENT_SCHEMA:
                    raise DataError("unexpected record schema %r" % rec.get('schema'))
                records.append(rec)
    return records
