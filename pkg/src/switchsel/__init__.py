"""
switchsel: on-site online feature selection and classification of switchgear
actuations from acoustic and vibration recordings.

Training: detect actuations by thresholding interval power, label them in
their known order, extract a bank of time and frequency domain features over
several low-pass cutoffs, score every feature by how well its scenario
clusters separate, and keep the best few.

Inference: detect, compute only the selected features, vote per feature on
the nearest scenario center and optionally let the centers follow slow
changes to raise aging alarms.
"""
__version__ = '0.1.0'

from .dsp import (TimeSeries, IntervalPsdSeries, Spectrum, compute_interval_psd,
                  lowpass, segment_spectrum)
from .detector import (DetectionCalibration, EventSegment, StreamingDetector,
                       calibrate, detect, auto_label, excerpt_events)
from .features import (FEATURE_KINDS, FeatureDescriptor, FeatureMatrix, Normalizer,
                       compute_feature, extract_candidates, extract_descriptors,
                       fit_normalizer)
from .selector import (ClusterCenters, FeatureQualityReport, Model, compute_centers,
                       feature_quality, select_top, train)
from .classifier import (VoteMode, ScenarioEstimate, DriftState, classify_one,
                         majority_vote, update_centers, check_alarms, infer)
from .synth import (ActuationSpec, CorpusSpec, Drift, generate_event, generate_corpus,
                    benchmark_spec)

__all__ = [
    'TimeSeries', 'IntervalPsdSeries', 'Spectrum', 'compute_interval_psd', 'lowpass',
    'segment_spectrum',
    'DetectionCalibration', 'EventSegment', 'StreamingDetector', 'calibrate', 'detect',
    'auto_label', 'excerpt_events',
    'FEATURE_KINDS', 'FeatureDescriptor', 'FeatureMatrix', 'Normalizer', 'compute_feature',
    'extract_candidates', 'extract_descriptors', 'fit_normalizer',
    'ClusterCenters', 'FeatureQualityReport', 'Model', 'compute_centers', 'feature_quality',
    'select_top', 'train',
    'VoteMode', 'ScenarioEstimate', 'DriftState', 'classify_one', 'majority_vote',
    'update_centers', 'check_alarms', 'infer',
    'ActuationSpec', 'CorpusSpec', 'Drift', 'generate_event', 'generate_corpus',
    'benchmark_spec',
]
