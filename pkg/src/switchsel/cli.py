"""
Command line interface.

    switchsel synth   [SPEC.json] -o rec.wav --truth truth.json
    switchsel train   rec.wav -o model.json
    switchsel monitor rec.wav --model model.json [--update-centers] [-o log.jsonl]
    switchsel eval    rec.wav truth.json --model model.json
    switchsel inspect-model model.json

Exit codes: 0 success, 1 usage error, 2 data error, 3 model/schema error.
"""
import argparse
import datetime
import json
import os
import sys
from dataclasses import fields

from . import __version__
from .classifier import VoteMode
from .io import (DataError, EventLog, ModelFileError, RunConfig, iter_recording,
                 load_model, load_truth, model_to_dict, read_recording, save_model,
                 save_truth, write_recording)
from .pipeline import Monitor, evaluate, train_recording
from .synth import CorpusSpec, benchmark_spec, generate_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '%s: error: %s\n' % (self.prog, message))


def _floats(text):
    return [float(v) for v in text.split(',') if v.strip()]


def _words(text):
    return [v.strip() for v in text.split(',') if v.strip()]


# flag name, RunConfig field, argparse type
_CONFIG_FLAGS = [
    ('--interval-len', 'interval_len', float, 'PSD interval length in seconds (default 0.033)'),
    ('--margin-k', 'margin_k', float, 'threshold = noise mean + k * noise std (default 6)'),
    ('--cutoffs', 'cutoffs', _floats, 'comma separated low-pass cutoffs in Hz'),
    ('--kinds', 'kinds', _words, 'comma separated feature kinds'),
    ('-m', 'm', int, 'number of selected features (default 5)'),
    ('--alpha', 'alpha', float, 'EWMA weight of new features (default 0.05)'),
    ('--vote-mode', 'vote_mode', str, 'equal | fc | prob'),
    ('--alarm-threshold', 'alarm_threshold', float,
     'center displacement alarm threshold, normalized units (default 3)'),
    ('--min-sigma', 'min_sigma', float, 'floor of the 3-sigma gating spread (default 0.05)'),
    ('--trigger-channel', 'trigger_channel', str, 'channel name or index used for detection'),
    ('--cycle', 'cycle', _words, 'scenario labels in actuation order (default on,off)'),
    ('--start-state', 'start_state', str, 'label of the first training actuation'),
    ('--train-per-scenario', 'train_per_scenario', int, 'training actuations per scenario (default 5)'),
    ('--noise-duration', 'noise_duration', float,
     'seconds of actuation-free signal at the start used for calibration (default 1)'),
    ('--switching-duration', 'switching_duration', float,
     'average switching time in seconds (default 0.5)'),
    ('--seed', 'seed', int, 'random seed'),
]


def _add_config_flags(p):
    g = p.add_argument_group('configuration')
    g.add_argument('--config', help='JSON run configuration')
    for flag, dest, typ, help_ in _CONFIG_FLAGS:
        g.add_argument(flag, dest='cfg_' + dest, type=typ, default=None, help=help_,
                       metavar=dest.upper())
    g.add_argument('--save-config', metavar='PATH', help='write the effective configuration')


def _config(args, base=None):
    cfg = RunConfig.load(args.config) if getattr(args, 'config', None) else (base or RunConfig())
    d = cfg.to_dict()
    for f in fields(RunConfig):
        v = getattr(args, 'cfg_' + f.name, None)
        if v is not None:
            d[f.name] = v
    try:
        cfg = RunConfig.from_dict(d)
    except (TypeError, ValueError) as err:
        if isinstance(err, DataError):
            raise
        raise UsageError(str(err)) from None
    if getattr(args, 'save_config', None):
        cfg.save(args.save_config)
    return cfg


def build_parser():
    p = _Parser(prog='switchsel', description='Online feature selection and classification '
                'of switchgear actuations.')
    p.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    sub = p.add_subparsers(dest='command', parser_class=_Parser)

    s = sub.add_parser('synth', help='render a synthetic recording and its ground truth')
    s.add_argument('spec', nargs='?', help='corpus spec JSON (default: two-scenario benchmark)')
    s.add_argument('-o', '--output', required=True, help='recording path (.wav or .csv)')
    s.add_argument('--truth', required=True, help='ground-truth JSON path')
    s.add_argument('--events', type=int, default=20, help='benchmark event count (default 20)')
    s.add_argument('--seed', type=int, default=None, help='override the corpus seed')
    s.add_argument('--bits', type=int, default=32, choices=(16, 32), help='WAV PCM bits')

    t = sub.add_parser('train', help='detect, label and select features; write a model')
    t.add_argument('recordings', nargs='+', help='training recording(s)')
    t.add_argument('-o', '--model', required=True, help='model file to write')
    t.add_argument('--show', type=int, default=15, help='rows of the fc ranking to print')
    t.add_argument('--created', default=None,
                   help="creation timestamp to store, or 'now' (default: none, so that "
                        "reruns give identical files)")
    _add_config_flags(t)

    mo = sub.add_parser('monitor', help='classify actuations of a recording')
    mo.add_argument('recording')
    mo.add_argument('--model', required=True)
    mo.add_argument('-o', '--output', default='-', help='event log (JSON lines, default stdout)')
    mo.add_argument('--update-centers', action='store_true', help='track centers with EWMA')
    mo.add_argument('--chunk', type=int, default=1 << 16, help='samples per read')
    _add_config_flags(mo)

    e = sub.add_parser('eval', help='score a model against ground truth')
    e.add_argument('recording')
    e.add_argument('truth')
    e.add_argument('--model', required=True)
    e.add_argument('--json', action='store_true', help='print metrics as JSON')
    _add_config_flags(e)

    i = sub.add_parser('inspect-model', help='print a model summary')
    i.add_argument('model')
    i.add_argument('--json', action='store_true')
    return p


def cmd_synth(args, out):
    if args.spec:
        try:
            with open(args.spec) as fh:
                spec = CorpusSpec.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as err:
            raise DataError("cannot read corpus spec %s: %s" % (args.spec, err)) from None
    else:
        spec = benchmark_spec(n_events=args.events)
    if args.seed is not None:
        spec = CorpusSpec.from_dict({**spec.to_dict(), 'seed': args.seed})
    try:
        series, truth = generate_corpus(spec)
    except ValueError as err:
        raise DataError("invalid corpus spec: %s" % err) from None
    write_recording(args.output, series, bits=args.bits)
    save_truth(args.truth, truth, series.sample_rate, series.duration)
    print("wrote %s (%.1f s, %d events) and %s"
          % (args.output, series.duration, len(truth), args.truth), file=out)
    return EXIT_OK


def _load_series(paths):
    series = [read_recording(p) for p in paths]
    first = series[0]
    for s in series[1:]:
        if s.sample_rate != first.sample_rate or s.channel_names != first.channel_names:
            raise DataError("training recordings differ in sample rate or channels")
    return series


def cmd_train(args, out):
    cfg = _config(args)
    series = _load_series(args.recordings)
    created = args.created
    if created == 'now':
        created = datetime.datetime.now(datetime.timezone.utc).isoformat()
    meta = {'sources': [os.path.basename(p) for p in args.recordings]}
    if created is not None:
        meta['created'] = created
    try:
        model, used = train_recording(series, cfg, metadata=meta)
    except ValueError as err:
        raise DataError(str(err)) from None
    save_model(args.model, model, cfg)
    print("trained on %d actuations, selected %d of %d candidate features"
          % (len(used), len(model.descriptors), len(model.report.descriptors)), file=out)
    selected = set(model.descriptors)
    print("%4s  %-40s %9s  %s" % ('rank', 'feature', 'fc', 'selected'), file=out)
    for r, (d, fc) in enumerate(model.report.ranked()[:max(args.show, 0)], start=1):
        print("%4d  %-40s %9.6f  %s" % (r, d.name, fc, '*' if d in selected else ''), file=out)
    print("model written to %s" % args.model, file=out)
    return EXIT_OK


def _model_and_config(args):
    model, stored = load_model(args.model)
    return model, _config(args, base=stored)


def cmd_monitor(args, out):
    model, cfg = _model_and_config(args)
    fh = out if args.output == '-' else open(args.output, 'w')
    try:
        log = EventLog(fh)
        mon = None
        for rate, names, chunk in iter_recording(args.recording, args.chunk):
            if mon is None:
                mon = Monitor(model, rate, names, cfg, update_centers=args.update_centers)
            for rec in mon.feed(chunk):
                log.append(rec)
        if mon is not None:
            mon.finish()
    finally:
        if fh is not out:
            fh.close()
    if args.output != '-':
        print("%d actuations logged to %s" % (log.count, args.output), file=out)
    return EXIT_OK


def cmd_eval(args, out):
    model, cfg = _model_and_config(args)
    series = read_recording(args.recording)
    truth, rate, duration = load_truth(args.truth)
    try:
        metrics = evaluate(series, truth, model, cfg, sample_rate=rate, duration=duration)
    except ValueError as err:
        raise DataError(str(err)) from None
    if args.json:
        print(json.dumps(metrics, indent=1), file=out)
        return EXIT_OK
    print("detection: %d detected, %d true, precision %.4f, recall %.4f"
          % (metrics['detected'], metrics['truth'], metrics['precision'], metrics['recall']),
          file=out)
    if 'single_feature' in metrics:
        print("%-22s %-15s %-15s %-15s" % ('', 'selected feat.', 'majority vote', 'updated centers'),
              file=out)
        for mode in VoteMode:
            print("%-22s %-15.4f %-15.4f %-15.4f"
                  % ('accuracy (%s)' % mode.value, metrics['single_feature'],
                     metrics['vote_' + mode.value], metrics['updated_centers']), file=out)
        print("best single feature: %s" % metrics['single_feature_descriptor'], file=out)
        print("largest center displacement: %.4f (alarm threshold %g)"
              % (metrics['max_displacement'], cfg.alarm_threshold), file=out)
        if metrics['first_alarm'] is not None:
            print("first drift alarm at %.3f s" % metrics['first_alarm'], file=out)
    return EXIT_OK


def cmd_inspect(args, out):
    model, cfg = load_model(args.model)
    if args.json:
        print(json.dumps(model_to_dict(model, cfg), indent=1, sort_keys=True), file=out)
        return EXIT_OK
    print("scenarios: %s (cycle %s)" % (', '.join(map(str, model.scenarios)),
                                        ', '.join(map(str, model.cycle))), file=out)
    if model.calibration is not None:
        c = model.calibration
        print("detection: threshold %.6g (noise %.6g +/- %.6g, k=%g), refractory %.3f s"
              % (c.threshold, c.mean_noise, c.std_noise, c.margin_k, c.refractory), file=out)
    for k, v in sorted(model.metadata.items()):
        print("%s: %s" % (k, v), file=out)
    print("%-40s %9s  %s" % ('feature', 'fc', 'centers (normalized)'), file=out)
    for j, d in enumerate(model.descriptors):
        centers = ', '.join('%s=%.4f' % (s, model.centers.centers[i, j])
                            for i, s in enumerate(model.scenarios))
        print("%-40s %9.6f  %s" % (d.name, model.fc[j], centers), file=out)
    return EXIT_OK


_COMMANDS = {
    'synth': cmd_synth,
    'train': cmd_train,
    'monitor': cmd_monitor,
    'eval': cmd_eval,
    'inspect-model': cmd_inspect,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, out)
    except UsageError as err:
        print("switchsel: error: %s" % err, file=sys.stderr)
        return EXIT_USAGE
    except ModelFileError as err:
        print("switchsel: model error: %s" % err, file=sys.stderr)
        return EXIT_MODEL
    except (DataError, OSError) as err:
        print("switchsel: data error: %s" % err, file=sys.stderr)
        return EXIT_DATA


if __name__ == '__main__':
    sys.exit(main())
