"""
Following a drifting scenario
=============================

The 'on' actuation slowly shifts its ringing from 400 Hz to 500 Hz over 500
operations. Centers updated with an EWMA follow the shift; alarms compare
the displacement of each center with a threshold.
"""
import numpy as np

from switchsel import Drift, DriftState, benchmark_spec, generate_corpus
from switchsel.classifier import infer_values
from switchsel.features import extract_descriptors
from switchsel.io import RunConfig
from switchsel.pipeline import detect_events, train_recording

config = RunConfig()
train_series, _ = generate_corpus(benchmark_spec(n_events=10, seed=61))
model, _ = train_recording(train_series, config)
print("selected:", ', '.join(d.name for d in model.descriptors))
print("training spread (Hz):", model.normalizer.std)

drift = [Drift('on', 'dominant_freq', 400.0, 500.0)]
stream, truth = generate_corpus(benchmark_spec(n_events=500, seed=62, drift=drift, gap=(0.7, 1.0)))
events = detect_events(stream, model.calibration, config)
raw = extract_descriptors(events, model.descriptors).rows
labels = [t.label for t in truth]
print("stream: %.0f s, %d detected of %d" % (stream.duration, len(events), len(truth)))

# static centers
static = [infer_values(r, model)[0].scenario for r in raw]

# tracked centers, two alarm conventions:
#   absolute: 3 units of the normalized feature scale
#   sigma:    3 gating spreads, as on a control chart
runs = {
    'absolute': DriftState.from_model(model, config.alpha, 3.0, min_sigma=config.min_sigma),
    'sigma': DriftState.from_model(model, config.alpha, 3.0, min_sigma=config.min_sigma,
                                   sigma_units=True),
}
for name, state in runs.items():
    tracked, first = [], None
    for ev, r in zip(events, raw):
        est, state = infer_values(r, model, state, time=ev.start)
        tracked.append(est.scenario)
        if first is None and any(a.new for a in est.alarms):
            first = ev.start
    i_on = model.scenarios.index('on')
    print("\n%s thresholds (%.3g normalized units)" % (name, state.upper[i_on, 0]))
    print("  accuracy static %.3f, updated %.3f"
          % (np.mean(np.array(static) == labels), np.mean(np.array(tracked) == labels)))
    print("  'on' center moved %+.3f units" % state.displacement[i_on, 0])
    print("  first alarm:", 'none' if first is None else '%.1f s' % first)

# a 100 Hz shift against a 300 Hz class gap is 100 / std units at most
print("\nlargest reachable shift: %.3f units" % (100.0 / model.normalizer.std[0]))
