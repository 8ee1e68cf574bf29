import io as stdio
import json

import numpy as np
import pytest

from switchsel.classifier import DriftState, VoteMode, infer, infer_values
from switchsel.dsp import TimeSeries
from switchsel.io import (DataError, EventLog, ModelFileError, RunConfig, iter_recording,
                          load_model, load_truth, read_event_log, read_recording, save_model,
                          save_truth, write_recording)
from switchsel.synth import TruthEvent


class TestRunConfig:
    def test_defaults(self):
        c = RunConfig()
        assert c.interval_len == 0.033
        assert c.m == 5
        assert c.alpha == 0.05
        assert c.train_per_scenario == 5
        assert c.margin_k == 6.0

    def test_round_trip(self, tmp_path):
        c = RunConfig(interval_len=0.02, cutoffs=[500, 1500], kinds=['rms', 'maximum'],
                      m=2, alpha=0.1, vote_mode='prob', trigger_channel='ch1',
                      cycle=['open', 'close', 'earth'], start_state='close', seed=9)
        c.save(tmp_path / 'c.json')
        assert RunConfig.load(tmp_path / 'c.json') == c

    def test_round_trip_defaults(self, tmp_path):
        RunConfig().save(tmp_path / 'c.json')
        assert RunConfig.load(tmp_path / 'c.json') == RunConfig()

    def test_unknown_key(self):
        with pytest.raises(DataError):
            RunConfig.from_dict({'interval_len': 0.01, 'bogus': 1})

    @pytest.mark.parametrize('kwargs', [
        dict(interval_len=0), dict(m=0), dict(alpha=2.0), dict(vote_mode='max'),
        dict(cycle=['only']), dict(kinds=['entropy']), dict(alarm_threshold=0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            RunConfig(**kwargs)


class TestRecordings:
    def series(self, rng, n=1000, channels=2, fs=8000.0):
        return TimeSeries(0.5 * np.tanh(rng.standard_normal((channels, n))), fs,
                          tuple('ch%d' % i for i in range(channels)))

    @pytest.mark.parametrize('bits, tol', [(16, 1 / 32768), (32, 1 / 2 ** 31)])
    def test_wav(self, tmp_path, rng, bits, tol):
        ts = self.series(rng)
        write_recording(tmp_path / 'r.wav', ts, bits=bits)
        back = read_recording(tmp_path / 'r.wav')
        assert back.sample_rate == 8000.0
        assert back.channels.shape == ts.channels.shape
        np.testing.assert_allclose(back.channels, ts.channels, atol=tol)

    def test_mono_wav(self, tmp_path, rng):
        ts = self.series(rng, channels=1)
        write_recording(tmp_path / 'r.wav', ts, bits=16)
        assert read_recording(tmp_path / 'r.wav').channels.shape == (1, 1000)

    def test_csv_exact(self, tmp_path, rng):
        ts = TimeSeries(rng.standard_normal((2, 300)), 1000.0, ('mic', 'acc'))
        write_recording(tmp_path / 'r.csv', ts)
        back = read_recording(tmp_path / 'r.csv')
        assert back.channel_names == ('mic', 'acc')
        assert back.sample_rate == pytest.approx(1000.0)
        np.testing.assert_array_equal(back.channels, ts.channels)

    @pytest.mark.parametrize('chunk', [1, 7, 64, 10000])
    def test_chunks_concatenate(self, tmp_path, rng, chunk):
        ts = self.series(rng, n=300)
        for name in ('r.wav', 'r.csv'):
            write_recording(tmp_path / name, ts)
            parts = [c for _, _, c in iter_recording(tmp_path / name, chunk)]
            assert all(p.shape[1] <= chunk for p in parts)
            np.testing.assert_allclose(np.concatenate(parts, axis=1),
                                       read_recording(tmp_path / name).channels)

    def test_full_scale_rejected(self, tmp_path):
        with pytest.raises(DataError):
            write_recording(tmp_path / 'r.wav', TimeSeries(np.ones(10), 100.0))

    @pytest.mark.parametrize('text', [
        '',
        'x,a\n0,1\n',
        'time,a\n0,1\n0.001,zz\n',
        'time,a\n0,1\n0.001,2\n0.005,3\n',
        'time,a,b\n0,1\n',
    ])
    def test_bad_csv(self, tmp_path, text):
        p = tmp_path / 'bad.csv'
        p.write_text(text)
        with pytest.raises(DataError):
            read_recording(p)

    def test_unknown_format(self, tmp_path):
        with pytest.raises(DataError):
            read_recording(tmp_path / 'r.flac')

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_recording(tmp_path / 'none.wav')


class TestModelFile:
    def test_round_trip_decisions_bit_identical(self, tmp_path, small_benchmark, rng):
        model = small_benchmark['model']
        save_model(tmp_path / 'm.json', model, RunConfig())
        loaded, config = load_model(tmp_path / 'm.json')
        assert config == RunConfig()
        assert loaded.descriptors == model.descriptors
        assert loaded.scenarios == model.scenarios
        np.testing.assert_array_equal(loaded.fc, model.fc)
        np.testing.assert_array_equal(loaded.centers.centers, model.centers.centers)
        assert loaded.calibration == model.calibration

        mean, std = model.normalizer.mean, model.normalizer.std
        s_a = DriftState.from_model(model)
        s_b = DriftState.from_model(loaded)
        for i in range(100):
            raw = mean + 2.0 * std * rng.standard_normal(len(mean))
            for mode in VoteMode:
                a, _ = infer_values(raw, model, mode=mode)
                b, _ = infer_values(raw, loaded, mode=mode)
                assert (a.scenario, a.probability, a.votes) == (b.scenario, b.probability, b.votes)
            a, s_a = infer_values(raw, model, s_a, time=float(i))
            b, s_b = infer_values(raw, loaded, s_b, time=float(i))
            assert a == b
        np.testing.assert_array_equal(s_a.centers, s_b.centers)

    def test_round_trip_on_events(self, tmp_path, small_benchmark):
        model = small_benchmark['model']
        save_model(tmp_path / 'm.json', model)
        loaded, config = load_model(tmp_path / 'm.json')
        assert config is None
        for ev in small_benchmark['events']:
            assert infer(ev, model)[0] == infer(ev, loaded)[0]

    def test_report_persisted(self, tmp_path, small_benchmark):
        model = small_benchmark['model']
        save_model(tmp_path / 'm.json', model)
        loaded, _ = load_model(tmp_path / 'm.json')
        assert loaded.report.ranked() == model.report.ranked()

    def test_schema_mismatch(self, tmp_path, small_benchmark):
        save_model(tmp_path / 'm.json', small_benchmark['model'])
        d = json.loads((tmp_path / 'm.json').read_text())
        d['schema'] = 'switchsel.model/99'
        (tmp_path / 'm.json').write_text(json.dumps(d))
        with pytest.raises(ModelFileError, match='not supported'):
            load_model(tmp_path / 'm.json')

    @pytest.mark.parametrize('text', ['', '{}', '[1, 2]', '{"schema": "switchsel.model/1"}'])
    def test_malformed(self, tmp_path, text):
        (tmp_path / 'm.json').write_text(text)
        with pytest.raises(ModelFileError):
            load_model(tmp_path / 'm.json')

    def test_missing(self, tmp_path):
        with pytest.raises(ModelFileError):
            load_model(tmp_path / 'absent.json')

    def test_deterministic_bytes(self, tmp_path, small_benchmark):
        save_model(tmp_path / 'a.json', small_benchmark['model'], RunConfig())
        save_model(tmp_path / 'b.json', small_benchmark['model'], RunConfig())
        assert (tmp_path / 'a.json').read_bytes() == (tmp_path / 'b.json').read_bytes()


class TestTruthAndLog:
    def test_truth_round_trip(self, tmp_path):
        truth = [TruthEvent(2.0, 2.5, 'on'), TruthEvent(3.1234567890123, 3.6, 'off')]
        save_truth(tmp_path / 't.json', truth, 48000.0, 10.0)
        assert load_truth(tmp_path / 't.json') == (truth, 48000.0, 10.0)

    def test_truth_wrong_schema(self, tmp_path):
        (tmp_path / 't.json').write_text('{"schema": "other"}')
        with pytest.raises(DataError):
            load_truth(tmp_path / 't.json')

    def test_event_log(self, tmp_path):
        buf = stdio.StringIO()
        log = EventLog(buf)
        log.append({'time': 1.0, 'scenario': 'on'})
        log.append({'time': 2.5, 'scenario': 'off'})
        with pytest.raises(ValueError):
            log.append({'time': 2.0, 'scenario': 'on'})
        (tmp_path / 'log.jsonl').write_text(buf.getvalue())
        recs = read_event_log(tmp_path / 'log.jsonl')
        assert [r['time'] for r in recs] == [1.0, 2.5]
        assert log.count == 2
