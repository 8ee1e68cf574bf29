import io
import json
import subprocess
import sys

import numpy as np
import pytest
from scipy.io import wavfile

from switchsel.cli import main
from switchsel.io import read_event_log


def run(*argv):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture(scope='module')
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp('cli')
    assert run('synth', '-o', d / 'train.wav', '--truth', d / 'train.json',
               '--events', 10, '--seed', 1)[0] == 0
    assert run('synth', '-o', d / 'test.wav', '--truth', d / 'test.json',
               '--events', 16, '--seed', 2)[0] == 0
    code, text = run('train', d / 'train.wav', '-o', d / 'model.json')
    assert code == 0, text
    return d


class TestSynth:
    def test_outputs(self, workdir):
        truth = json.loads((workdir / 'train.json').read_text())
        assert len(truth['events']) == 10
        rate, data = wavfile.read(workdir / 'train.wav')
        assert rate == 48000 and data.dtype == np.int32

    def test_spec_file(self, tmp_path):
        from switchsel.synth import benchmark_spec
        spec = benchmark_spec(n_events=2, seed=3).to_dict()
        (tmp_path / 'spec.json').write_text(json.dumps(spec))
        code, _ = run('synth', tmp_path / 'spec.json', '-o', tmp_path / 'r.csv',
                      '--truth', tmp_path / 't.json')
        assert code == 0
        assert (tmp_path / 'r.csv').read_text().startswith('time,ch0')

    def test_bad_spec(self, tmp_path):
        (tmp_path / 'spec.json').write_text('{"scenarios": {}}')
        code, _ = run('synth', tmp_path / 'spec.json', '-o', tmp_path / 'r.wav',
                      '--truth', tmp_path / 't.json')
        assert code == 2


class TestTrain:
    def test_model_and_table(self, workdir, tmp_path):
        code, text = run('train', workdir / 'train.wav', '-o', tmp_path / 'm.json')
        assert code == 0
        assert 'selected 5 of 126 candidate features' in text
        assert text.count('*') == 5
        assert 'dominant_frequency' in text
        d = json.loads((tmp_path / 'm.json').read_text())
        assert d['schema'] == 'switchsel.model/1'
        assert len(d['descriptors']) == 5
        assert d['config']['interval_len'] == 0.033

    def test_byte_identical_rerun(self, workdir, tmp_path):
        run('train', workdir / 'train.wav', '-o', tmp_path / 'a.json')
        run('train', workdir / 'train.wav', '-o', tmp_path / 'b.json')
        assert (tmp_path / 'a.json').read_bytes() == (tmp_path / 'b.json').read_bytes()

    def test_created_timestamp(self, workdir, tmp_path):
        run('train', workdir / 'train.wav', '-o', tmp_path / 'm.json', '--created', 'now')
        assert 'created' in json.loads((tmp_path / 'm.json').read_text())['metadata']

    def test_insufficient_events(self, tmp_path, capsys):
        run('synth', '-o', tmp_path / 'r.wav', '--truth', tmp_path / 't.json', '--events', 3)
        code, _ = run('train', tmp_path / 'r.wav', '-o', tmp_path / 'm.json')
        assert code == 2
        assert 'insufficient events: detected 3, required 10' in capsys.readouterr().err

    def test_flags_and_config_file(self, workdir, tmp_path):
        code, _ = run('train', workdir / 'train.wav', '-o', tmp_path / 'm.json', '-m', 3,
                      '--cutoffs', '1000,2000', '--save-config', tmp_path / 'c.json')
        assert code == 0
        cfg = json.loads((tmp_path / 'c.json').read_text())
        assert cfg['m'] == 3 and cfg['cutoffs'] == [1000.0, 2000.0]
        code, _ = run('train', workdir / 'train.wav', '-o', tmp_path / 'm2.json',
                      '--config', tmp_path / 'c.json')
        assert code == 0
        assert len(json.loads((tmp_path / 'm2.json').read_text())['descriptors']) == 3


class TestMonitor:
    def test_log(self, workdir, tmp_path):
        code, _ = run('monitor', workdir / 'test.wav', '--model', workdir / 'model.json',
                      '-o', tmp_path / 'log.jsonl')
        assert code == 0
        recs = read_event_log(tmp_path / 'log.jsonl')
        truth = json.loads((workdir / 'test.json').read_text())['events']
        assert len(recs) == len(truth)
        hits = sum(r['scenario'] == t['label'] for r, t in zip(recs, truth))
        assert hits / len(truth) >= 0.95
        times = [r['time'] for r in recs]
        assert times == sorted(times)
        assert all(len(r['votes']) == 5 for r in recs)

    def test_update_centers_fields(self, workdir, tmp_path):
        code, _ = run('monitor', workdir / 'test.wav', '--model', workdir / 'model.json',
                      '-o', tmp_path / 'log.jsonl', '--update-centers', '--vote-mode', 'prob')
        assert code == 0
        rec = read_event_log(tmp_path / 'log.jsonl')[0]
        assert rec['mode'] == 'prob'
        assert set(rec['displacements']) == {'off', 'on'}
        assert rec['alarm'] is False

    def test_stdout(self, workdir):
        code, text = run('monitor', workdir / 'test.wav', '--model', workdir / 'model.json')
        assert code == 0
        assert len(text.strip().splitlines()) == 16

    @pytest.mark.parametrize('name', ['empty.wav', 'empty.csv'])
    def test_empty_input(self, workdir, tmp_path, name):
        p = tmp_path / name
        if name.endswith('.wav'):
            wavfile.write(p, 48000, np.zeros(0, dtype=np.int16))
        else:
            p.write_text('time,ch0\n')
        code, _ = run('monitor', p, '--model', workdir / 'model.json', '-o', tmp_path / 'log.jsonl')
        assert code == 0
        assert (tmp_path / 'log.jsonl').read_text() == ''

    def test_schema_mismatch(self, workdir, tmp_path, capsys):
        d = json.loads((workdir / 'model.json').read_text())
        d['schema'] = 'switchsel.model/2'
        (tmp_path / 'm.json').write_text(json.dumps(d))
        code, _ = run('monitor', workdir / 'test.wav', '--model', tmp_path / 'm.json')
        assert code == 3
        assert 'not supported' in capsys.readouterr().err


class TestEval:
    def test_metrics(self, workdir):
        code, text = run('eval', workdir / 'test.wav', workdir / 'test.json',
                         '--model', workdir / 'model.json', '--json')
        assert code == 0
        m = json.loads(text)
        assert m['precision'] == m['recall'] == 1.0
        for key in ('single_feature', 'vote_equal', 'vote_fc', 'vote_prob', 'updated_centers'):
            assert m[key] == 1.0

    def test_flipped(self, workdir, tmp_path):
        d = json.loads((workdir / 'test.json').read_text())
        for e in d['events']:
            e['label'] = 'on' if e['label'] == 'off' else 'off'
        (tmp_path / 'flip.json').write_text(json.dumps(d))
        code, text = run('eval', workdir / 'test.wav', tmp_path / 'flip.json',
                         '--model', workdir / 'model.json', '--json')
        m = json.loads(text)
        assert m['vote_equal'] == 0.0 and m['updated_centers'] == 0.0

    def test_table(self, workdir):
        code, text = run('eval', workdir / 'test.wav', workdir / 'test.json',
                         '--model', workdir / 'model.json')
        assert 'majority vote' in text and 'updated centers' in text

    def test_misaligned_truth(self, workdir, tmp_path):
        d = json.loads((workdir / 'test.json').read_text())
        d['sample_rate'] = 44100.0
        (tmp_path / 't.json').write_text(json.dumps(d))
        code, _ = run('eval', workdir / 'test.wav', tmp_path / 't.json',
                      '--model', workdir / 'model.json')
        assert code == 2


class TestInspectAndErrors:
    def test_inspect(self, workdir):
        code, text = run('inspect-model', workdir / 'model.json')
        assert code == 0
        assert 'threshold' in text and 'on=' in text
        code, text = run('inspect-model', workdir / 'model.json', '--json')
        assert json.loads(text)['schema'] == 'switchsel.model/1'

    def test_missing_model(self, tmp_path):
        assert run('inspect-model', tmp_path / 'none.json')[0] == 3

    def test_missing_recording(self, workdir, tmp_path):
        code, _ = run('monitor', tmp_path / 'none.wav', '--model', workdir / 'model.json')
        assert code == 2

    @pytest.mark.parametrize('argv', [
        [], ['frobnicate'], ['train'], ['monitor', 'x.wav'],
        ['train', 'x.wav', '-o', 'm.json', '-m', 'five'],
    ])
    def test_usage_errors(self, argv):
        with pytest.raises(SystemExit) as exc:
            code, _ = run(*argv)
            raise SystemExit(code)
        assert exc.value.code == 1

    def test_invalid_config_value(self, workdir, tmp_path):
        code, _ = run('train', workdir / 'train.wav', '-o', tmp_path / 'm.json', '--alpha', 3)
        assert code == 1

    def test_entry_point(self):
        r = subprocess.run([sys.executable, '-m', 'switchsel', '--version'],
                           capture_output=True, text=True)
        assert r.returncode == 0 and 'switchsel' in r.stdout
