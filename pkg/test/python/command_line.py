# ----------------------------------------------------------------------

import io
import os
import csv
import glob
import filecmp
import tempfile
import contextlib

# ----------------------------------------------------------------------

from spikeclr.cli import main, split_overrides
from spikeclr.ParameterCollection import ParameterCollection
from spikeclr.config import load_config, set_seed
from spikeclr.checkpoint import load_checkpoint
from spikeclr.exceptions import ConfigurationError

# ----------------------------------------------------------------------

SMALL = ['--model.backbone', 'tiny_conv', '--model.T', '2', '--data.sensor', '(8, 8)',
         '--data.num_classes', '2', '--data.samples_per_class', '3',
         '--data.test_samples_per_class', '2', '--data.duration', '1000',
         '--pretrain.epochs', '1', '--pretrain.batch_size', '4', '--downstream.epochs', '1']


def run(*argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        code = main(list(argv))
    return code, out.getvalue()


def test_synth():
    print("== synth ==")
    with tempfile.TemporaryDirectory() as tmp:
        a, b = os.path.join(tmp, 'a'), os.path.join(tmp, 'b')
        args = ['--classes', '3', '--per-class', '2', '--sensor', '8', '8', '--duration', '1000']
        code, out = run('synth', a, *args)
        assert code == 0, out
        assert 'class 2: 2' in out
        assert run('synth', b, *args)[0] == 0

        names = sorted(os.listdir(a))
        assert len(names) == 7 and 'labels.csv' in names
        match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        assert not mismatch and not errors

        assert run('synth', a, *args)[0] == 1
        assert run('synth', a, *args, '--force')[0] == 0
        assert run('synth', os.path.join(tmp, 'c'), '--classes', '99')[0] == 1


def test_config_dump():
    print("== config-dump and overrides ==")
    code, out = run('config-dump', '--model.T', '4', '--eval.k=full', '--seed', '3')
    assert code == 0
    p = ParameterCollection.from_document(out)
    assert p.model.T == 4 and p.eval.k == 'full' and p.pretrain.seed == 3
    expected = set_seed(load_config(None, [('model.T', 4), ('eval.k', 'full')]), 3)
    assert p == expected

    assert run('config-dump', '--model.depth', '3')[0] == 1
    assert run('config-dump', '--model.T', '0')[0] == 1
    assert split_overrides(['--a.b', '1', '--c.d=x']) == [('a.b', '1'), ('c.d', 'x')]
    for extra in [['--a.b'], ['stray'], ['--nodot', '1']]:
        try:
            split_overrides(extra)
        except ConfigurationError:
            pass
        else:
            raise AssertionError(f'{extra} should be rejected')


def test_training_commands():
    print("== pretrain, probe, finetune ==")
    with tempfile.TemporaryDirectory() as tmp:
        os.environ['SPIKECLR_OUT'] = tmp

        code, out = run('probe', '--ckpt', 'none', '--k', '1', '--splits', '2', *SMALL)
        assert code == 0, out
        assert out.startswith('linear_probe')
        rundir, = glob.glob(os.path.join(tmp, 'probe-*'))
        for name in ['config.txt', 'results.csv', 'summary.csv', 'loss_curve.csv']:
            assert os.path.isfile(os.path.join(rundir, name))
        with open(os.path.join(rundir, 'results.csv')) as fd:
            assert len(fd.read().splitlines()) == 3

        assert run('probe', '--k', '1', *SMALL)[0] == 1
        assert run('probe', '--ckpt', os.path.join(tmp, 'missing.spkc'), *SMALL)[0] == 2

        assert run('pretrain', *SMALL)[0] == 0
        ckpt, = glob.glob(os.path.join(tmp, 'pretrain-*', 'checkpoint.spkc'))
        code, out = run('finetune', '--ckpt', ckpt, '--k', '1', '--splits', '1', *SMALL)
        assert code == 0, out
        assert 'fine_tune' in out

        # a checkpoint trained on other frames does not fit
        code, _ = run('probe', '--ckpt', ckpt, '--k', '1', *SMALL[:4],
                      '--data.sensor', '(16, 16)', *SMALL[6:])
        assert code == 2

        del os.environ['SPIKECLR_OUT']


def read_rows(path, drop=('wall_clock_s',)):
    with open(path, newline='') as fd:
        return [{k: v for k, v in row.items() if k not in drop} for row in csv.DictReader(fd)]


def test_rerun_reproduces_metrics():
    print("== rerun into a second output root ==")
    with tempfile.TemporaryDirectory() as tmp:
        for command in [('probe', '--ckpt', 'none'), ('supervised',)]:
            dirs = []
            for root in ['a', 'b']:
                os.environ['SPIKECLR_OUT'] = os.path.join(tmp, root)
                code, out = run(*command, '--k', '1', '--splits', '2', '--seed', '5', *SMALL)
                assert code == 0, out
                dirs.append(glob.glob(os.path.join(tmp, root, command[0] + '-*'))[0])
            assert os.path.basename(dirs[0]) == os.path.basename(dirs[1])
            for name in ['results.csv', 'summary.csv', 'loss_curve.csv']:
                first, second = (read_rows(os.path.join(d, name)) for d in dirs)
                assert first and first == second, name
            with open(os.path.join(dirs[0], 'config.txt')) as a, open(os.path.join(dirs[1], 'config.txt')) as b:
                assert a.read() == b.read()
        del os.environ['SPIKECLR_OUT']


def test_protocol_commands():
    print("== supervised, transfer, data-quantity, ablation ==")
    with tempfile.TemporaryDirectory() as tmp:
        os.environ['SPIKECLR_OUT'] = tmp

        code, out = run('supervised', '--k', '1', '--splits', '2', *SMALL)
        assert code == 0, out
        assert out.startswith('supervised')
        rundir, = glob.glob(os.path.join(tmp, 'supervised-*'))
        for s in range(2):
            encoder = load_checkpoint(os.path.join(rundir, f'checkpoint_split{s}.spkc'))
            assert encoder.topology.kind == 'tiny_conv'
            classifier = load_checkpoint(os.path.join(rundir, f'classifier_split{s}.spkc'))
            assert classifier.topology.kind == 'classifier'

        code, out = run('transfer', '--k', '1', '--splits', '1', '--data.source_num_classes', '2',
                        '--data.source_samples_per_class', '3', *SMALL)
        assert code == 0, out
        rundir, = glob.glob(os.path.join(tmp, 'transfer-*'))
        for name in ['encoder.spkc', 'checkpoint_split0.spkc', 'classifier_split0.spkc',
                     'results.csv', 'loss_curve.csv']:
            assert os.path.isfile(os.path.join(rundir, name)), name
        assert tuple(load_checkpoint(os.path.join(rundir, 'encoder.spkc')).topology.input_shape) == (2, 2, 8, 8)

        code, out = run('data-quantity', '--k', '1', '--splits', '1', '--fractions', '0.5', '1.0', *SMALL)
        assert code == 0, out
        rundir, = glob.glob(os.path.join(tmp, 'data-quantity-*'))
        for name in ['encoder_0.5.spkc', 'encoder_1.spkc']:
            assert os.path.isfile(os.path.join(rundir, name)), name
        assert len(read_rows(os.path.join(rundir, 'summary.csv'))) == 2

        code, out = run('ablation', '--kind', 'loss', '--k', '1', '--splits', '1', *SMALL)
        assert code == 0, out
        rundir, = glob.glob(os.path.join(tmp, 'ablation-*'))
        rows = read_rows(os.path.join(rundir, 'results.csv'))
        assert sorted(r['pretrain_dataset'] for r in rows) == ['loss=mean', 'loss=temporal']

        del os.environ['SPIKECLR_OUT']


def test_usage_errors():
    print("== usage errors ==")
    for argv in [('gradcheck', 'bogus'), ('no-such-command',), (), ('probe', '--splits', 'two')]:
        assert run(*argv)[0] == 1, argv
    assert run('gradcheck', 'primitives', '--threads')[0] == 1


def test_gradcheck_and_preview():
    print("== gradcheck and augment-preview ==")
    assert run('gradcheck', 'primitives')[0] == 0

    with tempfile.TemporaryDirectory() as tmp:
        os.environ['SPIKECLR_OUT'] = tmp
        data = os.path.join(tmp, 'data')
        assert run('synth', data, '--classes', '2', '--per-class', '1', '--sensor', '8', '8')[0] == 0
        sample = os.path.join(data, 'sample_0.evt')
        code, out = run('augment-preview', sample, '--model.T=2')
        assert code == 0, out
        grids = glob.glob(os.path.join(tmp, 'augment-preview-*', '*.csv'))
        # original plus three families, T x 2 matrices each
        assert len(grids) == 4 * 2 * 2
        del os.environ['SPIKECLR_OUT']


if __name__ == '__main__':
    test_synth()
    test_config_dump()
    test_training_commands()
    test_rerun_reproduces_metrics()
    test_protocol_commands()
    test_usage_errors()
    test_gradcheck_and_preview()
