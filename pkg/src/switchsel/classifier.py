"""
Inference on selected features.

Every selected feature votes for the scenario whose center is nearest, with
probability ``1 - d_own / d`` where ``d`` is the distance between the two
nearest centers. Votes are fused by a (weighted) majority vote. Optionally
the centers follow slow process changes through an exponentially weighted
moving average, gated to values within three training standard deviations
of the current center, and alarms are raised when a center moves too far
from where training put it.
"""
import enum
from dataclasses import dataclass, replace

import numpy as np

from .features import extract_descriptors

__all__ = [
    'VoteMode',
    'Vote',
    'ScenarioEstimate',
    'DriftState',
    'Alarm',
    'classify_one',
    'classify_values',
    'majority_vote',
    'update_centers',
    'check_alarms',
    'infer',
    'infer_values',
    'DEFAULT_ALPHA',
    'DEFAULT_ALARM_THRESHOLD',
    'GATE_SIGMAS',
    'DEFAULT_MIN_SIGMA',
]

DEFAULT_ALPHA = 0.05
DEFAULT_ALARM_THRESHOLD = 3.0
GATE_SIGMAS = 3.0
# floor for the frozen gating spread; five training events of a
# bin-quantized feature often give sigma == 0, which would freeze the center
DEFAULT_MIN_SIGMA = 0.05


class VoteMode(str, enum.Enum):
    EQUAL = 'equal'
    FC_WEIGHTED = 'fc'
    PROB_WEIGHTED = 'prob'


@dataclass(frozen=True)
class Vote:
    descriptor: object
    scenario: object
    probability: float
    weight: float


@dataclass(frozen=True)
class Alarm:
    scenario: object
    descriptor: object
    displacement: float
    threshold: float
    first_time: float = None
    new: bool = True


@dataclass(frozen=True)
class ScenarioEstimate:
    scenario: object
    probability: float
    votes: tuple
    mode: VoteMode
    alarms: tuple = ()


def classify_one(value, centers, scenarios=None):
    """Nearest-center decision for one normalized feature value.

    Parameters
    ----------
    value : float
    centers : sequence of float
        One center per scenario. With more than two, the two centers nearest
        to ``value`` are used.
    scenarios : sequence, optional
        Scenario ids matching ``centers``; defaults to their indices.

    Returns
    -------
    (scenario, probability)
    """
    centers = np.asarray(centers, dtype=float)
    if centers.ndim != 1 or len(centers) < 2:
        raise ValueError("need at least two centers")
    if scenarios is None:
        scenarios = list(range(len(centers)))
    dist = np.abs(value - centers)
    # stable sort: equal distances resolve to the earlier scenario
    a, b = np.argsort(dist, kind='stable')[:2]
    d = abs(centers[a] - centers[b])
    if d == 0:
        return scenarios[min(a, b)], 0.5
    p = 1.0 - dist[a] / d
    return scenarios[a], float(min(max(p, 0.0), 1.0))


def classify_values(values, centers, scenarios):
    """Apply :func:`classify_one` to each column.

    ``centers`` has shape (n_scenarios, n_descriptors).
    """
    centers = np.asarray(centers, dtype=float)
    return [classify_one(v, centers[:, j], scenarios) for j, v in enumerate(values)]


def majority_vote(votes, weights=None, mode=VoteMode.EQUAL, scenarios=None, descriptors=None):
    """Fuse per-descriptor ``(scenario, probability)`` votes.

    EQUAL counts every vote once, FC_WEIGHTED weights it by the descriptor's
    fc score (negative scores count as 0), PROB_WEIGHTED by its probability.
    The estimate's probability is the winner's share of the total weight.
    Ties go to the larger summed probability, then to scenario order.
    """
    votes = list(votes)
    if not votes:
        raise ValueError("cannot vote without votes")
    mode = VoteMode(mode)
    if weights is None:
        weights = np.ones(len(votes))
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(votes):
        raise ValueError("need one fc weight per vote")
    if descriptors is None:
        descriptors = list(range(len(votes)))
    if scenarios is None:
        scenarios = sorted({s for s, _ in votes}, key=str)
    scenarios = list(scenarios)

    if mode is VoteMode.EQUAL:
        w = np.ones(len(votes))
    elif mode is VoteMode.FC_WEIGHTED:
        w = np.clip(weights, 0.0, None)
    else:
        w = np.array([p for _, p in votes], dtype=float)
    if not w.sum() > 0:
        # nothing to weigh with; fall back to counting
        w = np.ones(len(votes))

    score = dict.fromkeys(scenarios, 0.0)
    prob = dict.fromkeys(scenarios, 0.0)
    for (s, p), wi in zip(votes, w):
        if s not in score:
            raise ValueError("vote for unknown scenario %r" % (s,))
        score[s] += wi
        prob[s] += p
    winner = min(scenarios, key=lambda s: (-score[s], -prob[s], scenarios.index(s)))
    share = score[winner] / w.sum()
    recorded = tuple(Vote(d, s, float(p), float(wt))
                     for d, (s, p), wt in zip(descriptors, votes, weights))
    return ScenarioEstimate(winner, float(share), recorded, mode)


@dataclass
class DriftState:
    """Tracked centers of every (scenario, descriptor), plus alarm latches.

    Arrays have shape (n_scenarios, n_descriptors) and are in normalized
    feature units. ``sigma`` is the frozen training spread used for gating.
    """
    scenarios: list
    descriptors: list
    centers: np.ndarray
    initial: np.ndarray
    sigma: np.ndarray
    alpha: float = DEFAULT_ALPHA
    upper: np.ndarray = None
    lower: np.ndarray = None
    alarm: np.ndarray = None
    first_alarm_time: np.ndarray = None
    n_updates: np.ndarray = None

    def __post_init__(self):
        self.centers = np.array(self.centers, dtype=float)
        self.initial = np.array(self.initial, dtype=float)
        self.sigma = np.array(self.sigma, dtype=float)
        shape = self.centers.shape
        if shape != (len(self.scenarios), len(self.descriptors)):
            raise ValueError("centers must be (n_scenarios, n_descriptors)")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not np.all(np.isfinite(self.centers)):
            raise ValueError("centers must be finite")

        def _fill(a, value, dtype=float):
            return np.full(shape, value, dtype=dtype) if a is None \
                else np.broadcast_to(np.asarray(a, dtype=dtype), shape).copy()

        self.upper = _fill(self.upper, DEFAULT_ALARM_THRESHOLD)
        self.lower = _fill(self.lower, DEFAULT_ALARM_THRESHOLD)
        if np.any(self.upper <= 0) or np.any(self.lower <= 0):
            raise ValueError("alarm thresholds must be positive")
        self.alarm = _fill(self.alarm, False, bool)
        self.first_alarm_time = _fill(self.first_alarm_time, np.nan)
        self.n_updates = _fill(self.n_updates, 0, int)

    @classmethod
    def from_model(cls, model, alpha=DEFAULT_ALPHA, threshold=DEFAULT_ALARM_THRESHOLD,
                   lower=None, min_sigma=DEFAULT_MIN_SIGMA, sigma_units=False):
        """Start tracking from a trained model's centers.

        ``threshold`` (and ``lower`` when the downward limit differs) are
        offsets from the initial center in normalized units, or multiples of
        the gating spread with ``sigma_units=True`` (control-chart style).
        ``min_sigma`` floors the gating spread.
        """
        c = model.centers
        sigma = np.maximum(c.sigma, min_sigma)
        upper = threshold
        lower = threshold if lower is None else lower
        if sigma_units:
            if not np.all(sigma > 0):
                raise ValueError("sigma_units needs a positive gating spread (min_sigma > 0)")
            upper, lower = upper * sigma, lower * sigma
        return cls(list(c.scenarios), list(c.descriptors), c.centers.copy(), c.centers.copy(),
                   sigma, alpha, upper, lower)

    def copy(self):
        return replace(self, centers=self.centers.copy(), initial=self.initial.copy(),
                       sigma=self.sigma.copy(), upper=self.upper.copy(),
                       lower=self.lower.copy(), alarm=self.alarm.copy(),
                       first_alarm_time=self.first_alarm_time.copy(),
                       n_updates=self.n_updates.copy())

    @property
    def displacement(self):
        return self.centers - self.initial


def update_centers(state, scenario, features):
    """One gated EWMA step for the centers of ``scenario``.

    Returns a new state; values further than three training standard
    deviations from the current center leave that center unchanged.
    """
    if scenario not in state.scenarios:
        raise ValueError("unknown scenario %r" % (scenario,))
    f = np.asarray(features, dtype=float)
    if f.shape != (len(state.descriptors),):
        raise ValueError("need one feature value per tracked descriptor")
    new = state.copy()
    i = state.scenarios.index(scenario)
    c = new.centers[i]
    accept = np.abs(f - c) <= GATE_SIGMAS * new.sigma[i]
    new.centers[i] = np.where(accept, state.alpha * f + (1.0 - state.alpha) * c, c)
    new.n_updates[i] += accept
    return new


def check_alarms(state, time=None):
    """Alarms for every (scenario, descriptor) displaced past its threshold.

    An alarm already latched in ``state`` keeps its first trigger time and
    is reported with ``new=False``.
    """
    disp = state.displacement
    hit = (disp > state.upper) | (-disp > state.lower)
    alarms = []
    for i, j in zip(*np.nonzero(hit)):
        latched = bool(state.alarm[i, j])
        t = state.first_alarm_time[i, j] if latched else time
        if t is not None and np.isnan(t):
            t = None
        thr = state.upper[i, j] if disp[i, j] > 0 else state.lower[i, j]
        alarms.append(Alarm(state.scenarios[i], state.descriptors[j], float(disp[i, j]),
                            float(thr), t, not latched))
    return alarms


def _latch(state, alarms):
    for a in alarms:
        if a.new:
            i = state.scenarios.index(a.scenario)
            j = state.descriptors.index(a.descriptor)
            state.alarm[i, j] = True
            state.first_alarm_time[i, j] = np.nan if a.first_time is None else a.first_time
    return state


def infer(event, model, state=None, mode=VoteMode.EQUAL, time=None):
    """Scenario estimate for one excerpted event.

    Only the model's selected descriptors are computed. With a drift
    ``state`` the centers it tracks are used, the winning scenario's centers
    are updated and alarms evaluated; the updated state is returned.
    """
    raw = extract_descriptors([event], model.descriptors).rows[0]
    return infer_values(raw, model, state, mode, event.start if time is None else time)


def infer_values(raw, model, state=None, mode=VoteMode.EQUAL, time=None):
    """:func:`infer` on already extracted raw feature values."""
    z = model.normalizer.transform(raw)
    centers = model.centers.centers if state is None else state.centers
    scenarios = model.scenarios
    votes = classify_values(z, centers, scenarios)
    est = majority_vote(votes, model.fc, mode, scenarios, model.descriptors)
    if state is None:
        return est, None
    state = update_centers(state, est.scenario, z)
    alarms = check_alarms(state, time)
    state = _latch(state, alarms)
    return replace(est, alarms=tuple(alarms)), state
