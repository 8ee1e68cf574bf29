"""
Detecting actuations in a noisy recording
=========================================

Render a short synthetic recording, compress it to interval power and find
the actuations with a threshold learned from the quiet lead-in.
"""
import numpy as np

from switchsel import (auto_label, calibrate, compute_interval_psd, detect, benchmark_spec,
                       generate_corpus)

# twelve actuations alternating on/off, 20 dB SNR, each with a second burst
# 0.2 s in when the spring snaps back
spec = benchmark_spec(n_events=12, seed=3, double_peak=(0.2, 0.5))
series, truth = generate_corpus(spec)
print("recording: %.1f s at %g Hz, %d actuations" % (series.duration, series.sample_rate, len(truth)))

# interval power over 33 ms blocks
psd = compute_interval_psd(series.channel(0), series.sample_rate, 0.033)
print("interval power: %d values" % len(psd))

# the first second holds no actuation
noise = psd.values[:int(1.0 / psd.interval_len)]
calib = calibrate(noise, margin_k=6.0, switching_durations=[0.5])
print("threshold %.3g  (noise mean %.3g, std %.3g)" % (calib.threshold, calib.mean_noise,
                                                       calib.std_noise))

# the second burst falls inside the refractory period and is not reported
above = np.flatnonzero(psd.values > calib.threshold)
events = auto_label(detect(psd, calib), spec.cycle)
print("%d intervals above threshold, %d events" % (len(above), len(events)))

for ev, t in zip(events, truth):
    print("  %7.3f s  %-3s  (true start %7.3f s, %s)" % (ev.start, ev.label, t.start, t.label))
