"""
Recording-level workflows: calibrate and train on a recording, monitor a
stream of samples, and score predictions against ground truth.
"""
import numpy as np

from .classifier import DriftState, VoteMode, classify_one, infer_values
from .detector import (EventSegment, StreamingDetector, auto_label, calibrate,
                       detect, excerpt_events)
from .dsp import compute_interval_psd, one_sided_power
from .features import extract_descriptors
from .selector import train

__all__ = [
    'InsufficientEventsError',
    'trigger_index',
    'calibrate_recording',
    'detect_events',
    'train_recording',
    'drift_state_for',
    'Monitor',
    'match_events',
    'accuracy',
    'evaluate',
]


class InsufficientEventsError(ValueError):
    def __init__(self, detected, required):
        super().__init__("insufficient events: detected %d, required %d" % (detected, required))
        self.detected = detected
        self.required = required


def trigger_index(channel_names, trigger):
    if trigger is None:
        return 0
    if str(trigger) in channel_names:
        return list(channel_names).index(str(trigger))
    try:
        i = int(trigger)
    except ValueError:
        raise ValueError("unknown trigger channel %r" % (trigger,)) from None
    if not 0 <= i < len(channel_names):
        raise ValueError("trigger channel index %d out of range" % i)
    return i


def calibrate_recording(series, config):
    """Threshold from the first ``config.noise_duration`` seconds, which must
    be free of actuations."""
    ch = trigger_index(series.channel_names, config.trigger_channel)
    n_noise = int(round(config.noise_duration * series.sample_rate))
    noise = compute_interval_psd(series.channels[ch, :n_noise], series.sample_rate,
                                 config.interval_len, series.channel_names[ch])
    return calibrate(noise, config.margin_k, [config.switching_duration])


def detect_events(series, calib, config):
    ch = trigger_index(series.channel_names, config.trigger_channel)
    psd = compute_interval_psd(series.channels[ch], series.sample_rate, config.interval_len,
                               series.channel_names[ch])
    return excerpt_events(series, detect(psd, calib))


def train_recording(series, config, metadata=None):
    """Detect, auto-label and train on the first actuations of a recording.

    ``series`` may also be a list of recordings with the same layout; the
    first one supplies the calibration and events are detected per file.
    Uses ``train_per_scenario`` events per scenario of ``config.cycle``.
    Returns ``(model, training_events)``.
    """
    recordings = list(series) if isinstance(series, (list, tuple)) else [series]
    calib = calibrate_recording(recordings[0], config)
    events = []
    for rec in recordings:
        events.extend(detect_events(rec, calib, config))
    required = config.train_per_scenario * len(config.cycle)
    if len(events) < required:
        raise InsufficientEventsError(len(events), required)
    labeled = auto_label(events[:required], config.cycle, config.start_state)
    model = train(labeled, config.cutoffs, config.feature_kinds, config.m,
                  calibration=calib, cycle=config.cycle, metadata=metadata)
    return model, labeled


def drift_state_for(model, config):
    return DriftState.from_model(model, alpha=config.alpha, threshold=config.alarm_threshold,
                                 min_sigma=config.min_sigma)


class Monitor:
    """Streaming inference over a recording fed in arbitrary chunks.

    Keeps only the samples still needed: the current partial interval and
    the windows of actuations whose end has not arrived yet.
    """

    def __init__(self, model, sample_rate, channel_names, config, update_centers=False,
                 mode=None, state=None):
        if model.calibration is None:
            raise ValueError("model has no detection calibration")
        self.model = model
        self.fs = float(sample_rate)
        self.names = tuple(channel_names)
        self.trigger = trigger_index(self.names, config.trigger_channel)
        self.n = int(round(config.interval_len * self.fs))
        if self.n < 2:
            raise ValueError("interval must span at least 2 samples")
        self.seg_len = int(round(model.calibration.refractory * self.fs))
        self.detector = StreamingDetector(model.calibration, self.n / self.fs)
        self.mode = VoteMode(config.vote_mode if mode is None else mode)
        self.state = state
        if update_centers and state is None:
            self.state = drift_state_for(model, config)
        self.buf = np.empty((len(self.names), 0))
        self.buf_start = 0
        self.pending = []
        self.dropped = 0

    def feed(self, chunk):
        """Push samples (n_channels, n); returns records of completed events."""
        chunk = np.asarray(chunk, dtype=float)
        if chunk.ndim == 1:
            chunk = chunk[np.newaxis, :]
        if chunk.shape[0] != len(self.names):
            raise ValueError("chunk has %d channels, expected %d" % (chunk.shape[0], len(self.names)))
        self.buf = np.concatenate([self.buf, chunk], axis=1)
        avail = self.buf_start + self.buf.shape[1]

        first = self.detector.next_index * self.n
        k = (avail - first) // self.n
        if k > 0:
            off = first - self.buf_start
            blocks = self.buf[self.trigger, off:off + k * self.n].reshape(k, self.n)
            powers = one_sided_power(blocks, axis=1).sum(axis=1)
            for t in self.detector.push(powers):
                # back to the interval index, exact where t * fs may not be
                self.pending.append(int(round(t / self.detector.interval_len)) * self.n)

        records = []
        while self.pending and self.pending[0] + self.seg_len <= avail:
            s = self.pending.pop(0)
            records.append(self._classify(s))

        keep = self.detector.next_index * self.n
        if self.pending:
            keep = min(keep, self.pending[0])
        if keep > self.buf_start:
            self.buf = self.buf[:, keep - self.buf_start:]
            self.buf_start = keep
        return records

    def finish(self):
        """Flush; actuations cut off by the end of the stream are dropped."""
        self.dropped += len(self.pending)
        self.pending = []
        return []

    def _classify(self, s):
        off = s - self.buf_start
        samples = self.buf[:, off:off + self.seg_len]
        start = s / self.fs
        ev = EventSegment(start, start + self.seg_len / self.fs, samples=samples,
                          sample_rate=self.fs, channel_names=self.names)
        raw = extract_descriptors([ev], self.model.descriptors).rows[0]
        est, self.state = infer_values(raw, self.model, self.state, self.mode, start)
        return make_record(start, est, self.model, self.state)


def make_record(start, est, model, state=None):
    rec = {
        'time': start,
        'scenario': est.scenario,
        'probability': est.probability,
        'mode': est.mode.value,
        'votes': [{'descriptor': v.descriptor.name, 'scenario': v.scenario,
                   'probability': v.probability, 'weight': v.weight} for v in est.votes],
    }
    if state is not None:
        rec['displacements'] = {
            str(s): {d.name: float(state.displacement[i, j]) for j, d in enumerate(state.descriptors)}
            for i, s in enumerate(state.scenarios)
        }
        rec['alarms'] = [{'scenario': a.scenario, 'descriptor': a.descriptor.name,
                          'displacement': a.displacement, 'threshold': a.threshold,
                          'first_time': a.first_time, 'new': a.new} for a in est.alarms]
        rec['alarm'] = bool(np.any(state.alarm))
    return rec


def match_events(detected, truth, tolerance):
    """Greedy one-to-one matching of detected start times to truth events.

    Returns a list of ``(detected_index, truth_index)`` pairs.
    """
    pairs = []
    used = set()
    j0 = 0
    truth_starts = [t.start for t in truth]
    for i, d in enumerate(detected):
        while j0 < len(truth_starts) and truth_starts[j0] < d - tolerance:
            j0 += 1
        j = j0
        while j < len(truth_starts) and truth_starts[j] <= d + tolerance:
            if j not in used:
                used.add(j)
                pairs.append((i, j))
                break
            j += 1
    return pairs


def accuracy(predicted, expected):
    predicted, expected = list(predicted), list(expected)
    if len(predicted) != len(expected):
        raise ValueError("prediction and truth lengths differ")
    if not expected:
        return float('nan')
    return float(np.mean([p == e for p, e in zip(predicted, expected)]))


def evaluate(series, truth, model, config, sample_rate=None, duration=None):
    """Detection and classification metrics of ``model`` on a recording.

    Classification is scored on matched events for: the single best
    descriptor, each vote mode with static centers, and EWMA-updated centers
    (tracking every detected event in stream order). ``max_displacement`` is
    the largest distance of a tracked center from its initial position.
    """
    if sample_rate is not None and abs(sample_rate - series.sample_rate) > 1e-9:
        raise ValueError("truth sample rate %g does not match recording %g"
                         % (sample_rate, series.sample_rate))
    if duration is not None and abs(duration - series.duration) > 1.0 / series.sample_rate:
        raise ValueError("truth duration %g s does not match recording %g s"
                         % (duration, series.duration))
    if any(t.end > series.duration + 1e-9 or t.start < 0 for t in truth):
        raise ValueError("truth events lie outside the recording")
    if model.calibration is None:
        raise ValueError("model has no detection calibration")

    events = detect_events(series, model.calibration, config)
    tol = 2 * config.interval_len
    pairs = match_events([e.start for e in events], truth, tol)
    n_det, n_true = len(events), len(truth)
    metrics = {
        'detected': n_det,
        'truth': n_true,
        'matched': len(pairs),
        'precision': len(pairs) / n_det if n_det else (1.0 if not n_true else 0.0),
        'recall': len(pairs) / n_true if n_true else 1.0,
    }
    if not events:
        return metrics

    raw = extract_descriptors(events, model.descriptors).rows
    z = model.normalizer.transform(raw)
    det_idx = [i for i, _ in pairs]
    expected = [truth[j].label for _, j in pairs]
    best = int(np.argmax(model.fc))
    single = [classify_one(z[i, best], model.centers.centers[:, best], model.scenarios)[0]
              for i in det_idx]
    metrics['single_feature'] = accuracy(single, expected)
    metrics['single_feature_descriptor'] = model.descriptors[best].name
    for mode in VoteMode:
        pred = [infer_values(raw[i], model, mode=mode)[0].scenario for i in det_idx]
        metrics['vote_' + mode.value] = accuracy(pred, expected)
    state = drift_state_for(model, config)
    tracked = []
    max_disp = 0.0
    for i, ev in enumerate(events):
        est, state = infer_values(raw[i], model, state, config.vote_mode, ev.start)
        tracked.append(est.scenario)
        max_disp = max(max_disp, float(np.abs(state.displacement).max()))
    metrics['updated_centers'] = accuracy([tracked[i] for i in det_idx], expected)
    metrics['max_displacement'] = max_disp
    alarm_times = state.first_alarm_time[state.alarm]
    metrics['first_alarm'] = float(np.min(alarm_times)) if alarm_times.size else None
    return metrics
