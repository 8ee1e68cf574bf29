import numpy as np
import pytest

from switchsel.detector import auto_label, calibrate, detect, excerpt_events
from switchsel.dsp import compute_interval_psd
from switchsel.selector import train
from switchsel.synth import benchmark_spec, generate_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def labeled_events(spec):
    """Render ``spec``, detect its actuations and label them in cycle order."""
    series, truth = generate_corpus(spec)
    psd = compute_interval_psd(series.channel(0), series.sample_rate, 0.033)
    n_noise = int(spec.lead_in / psd.interval_len) - 1
    calib = calibrate(psd.values[:n_noise], 6.0, [0.5])
    events = excerpt_events(series, detect(psd, calib))
    return series, truth, calib, auto_label(events, spec.cycle)


@pytest.fixture(scope='session')
def small_benchmark():
    """Ten clean benchmark actuations (5 on, 5 off) and a model trained on them."""
    spec = benchmark_spec(n_events=10, seed=7)
    series, truth, calib, events = labeled_events(spec)
    model = train(events, calibration=calib, cycle=spec.cycle)
    return {'series': series, 'truth': truth, 'calib': calib, 'events': events, 'model': model}


# -- acceptance reporting -----------------------------------------------------

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker('criterion')
    if marker is None:
        return
    report = outcome.get_result()
    number, title = marker.args
    if report.when == 'call' or (report.when == 'setup' and report.failed):
        detail = ''
        if report.failed:
            detail = str(report.longrepr.reprcrash.message).splitlines()[0] \
                if hasattr(report.longrepr, 'reprcrash') else 'error'
        _CRITERIA[number] = (title, report.passed, report.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section('acceptance criteria')
    for number in sorted(_CRITERIA):
        title, passed, duration, detail = _CRITERIA[number]
        line = 'criterion %2d  %s  %s (%.2f s)' % (number, 'PASS' if passed else 'FAIL',
                                                   title, duration)
        if detail:
            line += '  -- ' + detail
        tr.write_line(line)
