"""
Feature quality scoring and model construction.

Each candidate feature is scored on its own axis. For every scenario the
mean distance of its points to their own center is compared with the mean
distance of the same points to the nearest other center; the per-scenario
ratios ``(d_other - d_own) / max(d_other, d_own)`` are averaged. This needs
one pass over the rows per descriptor instead of the all-pairs distances of
a full silhouette analysis.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .detector import DetectionCalibration
from .features import (FEATURE_KINDS, Normalizer, extract_candidates,
                       fit_normalizer)

__all__ = [
    'ClusterCenters',
    'FeatureQualityReport',
    'Model',
    'compute_centers',
    'feature_quality',
    'rank_features',
    'select_top',
    'train',
    'DEFAULT_M',
    'DEFAULT_TRAIN_PER_SCENARIO',
]

DEFAULT_M = 5
DEFAULT_TRAIN_PER_SCENARIO = 5


@dataclass
class ClusterCenters:
    """Per-scenario centers and spreads, shape (n_scenarios, n_descriptors)."""
    scenarios: list
    descriptors: list
    centers: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.scenarios = list(self.scenarios)
        self.descriptors = list(self.descriptors)
        self.centers = np.asarray(self.centers, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        shape = (len(self.scenarios), len(self.descriptors))
        if self.centers.shape != shape or self.sigma.shape != shape:
            raise ValueError("centers and sigma must be (n_scenarios, n_descriptors)")
        if np.any(self.sigma < 0):
            raise ValueError("sigma must be non-negative")

    def subset(self, descriptors):
        idx = [self.descriptors.index(d) for d in descriptors]
        return ClusterCenters(self.scenarios, descriptors, self.centers[:, idx],
                              self.sigma[:, idx])


@dataclass
class FeatureQualityReport:
    descriptors: list
    fc: np.ndarray
    ranking: list = field(default=None)

    def __post_init__(self):
        self.descriptors = list(self.descriptors)
        self.fc = np.asarray(self.fc, dtype=float)
        if self.ranking is None:
            self.ranking = rank_features(self.descriptors, self.fc)

    def ranked(self):
        """(descriptor, fc) pairs, best first."""
        return [(self.descriptors[i], float(self.fc[i])) for i in self.ranking]


@dataclass
class Model:
    descriptors: list
    normalizer: Normalizer
    centers: ClusterCenters
    fc: np.ndarray
    calibration: DetectionCalibration = None
    cycle: list = None
    metadata: dict = field(default_factory=dict)
    report: FeatureQualityReport = None

    def __post_init__(self):
        self.descriptors = list(self.descriptors)
        self.fc = np.asarray(self.fc, dtype=float)
        if not self.descriptors:
            raise ValueError("a model needs at least one descriptor")
        if len(set(self.descriptors)) != len(self.descriptors):
            raise ValueError("model descriptors must be distinct")
        if self.normalizer.descriptors != self.descriptors \
                or self.centers.descriptors != self.descriptors:
            raise ValueError("normalizer and centers must cover exactly the model descriptors")
        if self.fc.shape != (len(self.descriptors),):
            raise ValueError("need one fc score per descriptor")
        if self.cycle is None:
            self.cycle = list(self.centers.scenarios)

    @property
    def scenarios(self):
        return self.centers.scenarios


def compute_centers(training):
    """Mean and population std of every scenario, from a labeled matrix."""
    if training.labels is None:
        raise ValueError("training matrix must be labeled")
    labels = np.asarray(training.labels, dtype=object)
    scenarios = sorted(set(training.labels), key=str)
    if len(scenarios) < 2:
        raise ValueError("need at least 2 scenarios, got %r" % (scenarios,))
    centers, sigma = [], []
    for s in scenarios:
        rows = training.rows[labels == s]
        if len(rows) == 0:
            raise ValueError("scenario %r has no rows" % (s,))
        centers.append(rows.mean(axis=0))
        sigma.append(rows.std(axis=0))
    return ClusterCenters(scenarios, training.descriptors, np.array(centers), np.array(sigma))


def _nearest_other(centers):
    """Index of the nearest other center per (scenario, descriptor)."""
    n = centers.shape[0]
    dist = np.abs(centers[:, None, :] - centers[None, :, :])
    dist[np.arange(n), np.arange(n), :] = np.inf
    # argmin picks the lowest scenario index on ties
    return np.argmin(dist, axis=1)


def feature_quality(values, labels, centers, degenerate=None):
    """Feature quality score of every column of ``values``.

    Parameters
    ----------
    values : ndarray, shape (n_rows, n_descriptors) or (n_rows,)
    labels : sequence
        Scenario of every row.
    centers : ClusterCenters
    degenerate : ndarray of bool, optional
        Columns forced to a score of 0.

    Returns
    -------
    ndarray of fc scores in [-1, 1].
    """
    values = np.asarray(values, dtype=float)
    single = values.ndim == 1
    if single:
        values = values[:, None]
    labels = np.asarray(labels, dtype=object)
    c = centers.centers
    if c.shape[1] != values.shape[1]:
        raise ValueError("centers do not match the number of columns")
    nearest = _nearest_other(c)
    cols = np.arange(values.shape[1])
    total = np.zeros(values.shape[1])
    for i, s in enumerate(centers.scenarios):
        pts = values[labels == s]
        d_own = np.abs(pts - c[i]).mean(axis=0)
        d_other = np.abs(pts - c[nearest[i], cols]).mean(axis=0)
        top = np.maximum(d_own, d_other)
        total += np.where(top > 0, (d_other - d_own) / np.where(top > 0, top, 1.0), 0.0)
    fc = total / len(centers.scenarios)
    if degenerate is not None:
        fc = np.where(degenerate, 0.0, fc)
    return fc[0] if single else fc


def rank_features(descriptors, fc):
    """Indices sorted by fc descending; ties keep the descriptor order."""
    fc = np.asarray(fc, dtype=float)
    return sorted(range(len(descriptors)), key=lambda i: (-fc[i], i))


def select_top(report, m=DEFAULT_M):
    if m <= 0:
        raise ValueError("m must be positive")
    if m > len(report.descriptors):
        raise ValueError("cannot select %d of %d descriptors" % (m, len(report.descriptors)))
    return [report.descriptors[i] for i in report.ranking[:m]]


def train(events, cutoffs=None, kinds=FEATURE_KINDS, m=DEFAULT_M, calibration=None,
          cycle=None, metadata=None):
    """Build a model from labeled, excerpted training events.

    Extracts the full candidate bank, z-scores it, scores every descriptor
    and keeps the ``m`` best.
    """
    if any(ev.label is None for ev in events):
        raise ValueError("all training events must be labeled")
    raw = extract_candidates(events, cutoffs, kinds)
    normalizer = fit_normalizer(raw)
    norm = normalizer.apply(raw)
    centers = compute_centers(norm)
    fc = feature_quality(norm.rows, norm.labels, centers, normalizer.degenerate)
    report = FeatureQualityReport(norm.descriptors, fc)
    if np.all(fc <= 0):
        warnings.warn("no descriptor separates the scenarios (all fc <= 0); "
                      "the model will not discriminate", RuntimeWarning, stacklevel=2)
    chosen = select_top(report, m)
    idx = [norm.descriptors.index(d) for d in chosen]
    meta = {'n_training_events': len(events)}
    meta.update(metadata or {})
    return Model(descriptors=chosen,
                 normalizer=normalizer.subset(chosen),
                 centers=centers.subset(chosen),
                 fc=fc[idx],
                 calibration=calibration,
                 cycle=list(cycle) if cycle is not None else None,
                 metadata=meta,
                 report=report)
