"""
Ranking candidate features on ten actuations
============================================

Train on five actuations per scenario and look at which of the 126
candidates (21 kinds at five cutoffs plus unfiltered) separate the
scenarios best, then classify a fresh recording.
"""
import numpy as np

from switchsel import VoteMode, benchmark_spec, generate_corpus
from switchsel.io import RunConfig
from switchsel.pipeline import evaluate, train_recording

config = RunConfig()
train_series, _ = generate_corpus(benchmark_spec(n_events=10, seed=1))
model, used = train_recording(train_series, config)
print("trained on:", ' '.join(e.label for e in used))

# best and worst of the ranking
ranked = model.report.ranked()
print("\n%-40s %8s" % ('feature', 'fc'))
for d, fc in ranked[:8]:
    print("%-40s %8.4f" % (d.name, fc))
print("...")
for d, fc in ranked[-3:]:
    print("%-40s %8.4f" % (d.name, fc))

# fc by feature kind, best cutoff only
best = {}
for d, fc in ranked:
    best.setdefault(d.kind, fc)
print("\nkinds with fc > 0.5:", ', '.join(k for k, v in best.items() if v > 0.5))

# centers live in z-score units of the training set
print("\nselected centers (normalized):")
for j, d in enumerate(model.descriptors):
    c = model.centers.centers[:, j]
    print("  %-36s %s" % (d.name, '  '.join('%s=%+.3f' % kv for kv in zip(model.scenarios, c))))

# held-out recording
test_series, truth = generate_corpus(benchmark_spec(n_events=40, seed=2))
m = evaluate(test_series, truth, model, config)
print("\nheld out: %d actuations, recall %.3f" % (m['truth'], m['recall']))
print("best single feature %s: %.3f" % (m['single_feature_descriptor'], m['single_feature']))
for mode in VoteMode:
    print("vote (%s): %.3f" % (mode.value, m['vote_' + mode.value]))
print("mean |fc| of selected: %.3f" % np.mean(np.abs(model.fc)))
