# -*- coding: utf-8 -*-

################################################################################
#
# spikeclr: contrastive self-supervised pretraining of spiking networks
#
# Copyright (C) 2026 The spikeclr developers
#
# spikeclr is free software: you can redistribute it and/or modify it under the
# terms of the GNU General Public License as published by the Free Software
# Foundation, either version 3 of the License, or (at your option) any later
# version.
#
# spikeclr is distributed in the hope that it will be useful, but WITHOUT ANY
# WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS
# FOR A PARTICULAR PURPOSE. See the GNU General Public License for more
# details.
#
# You should have received a copy of the GNU General Public License along with
# spikeclr. If not, see <http://www.gnu.org/licenses/>.
#
################################################################################

""" Command line driver.

Every command resolves a configuration (defaults, ``--config`` document,
shortcut flags and ``--section.key value`` overrides), runs the library
operation and writes its outputs under ``$SPIKECLR_OUT/<command>-<hash>``.

Exit codes: 0 success, 1 validation error, 2 runtime or data error,
3 gradient check failure.
"""

import argparse
import logging
import os
import sys

import numpy as np

from . import train_eval as te
from .version import version
from .logo import spikeclr_banner
from .config import (load_config, set_seed, config_hash, train_config, split_spec,
                     augment_policy)
from .event_core import (synth_moving_shapes, write_dataset_dir, read_dataset_dir,
                         read_canonical, read_nmnist_bin)
from .representation import encode_frames
from .augment import aug_spatial, aug_polarity, aug_temporal, FAMILIES
from .checkpoint import save_checkpoint, load_checkpoint
from .gradcheck import run_gradcheck, assert_passed, SCOPES
from .exceptions import SpikeclrError, ConfigurationError, exit_code

logger = logging.getLogger(__name__)

COMMANDS = ('synth', 'pretrain', 'supervised', 'probe', 'finetune', 'transfer',
            'data-quantity', 'augment-preview', 'gradcheck', 'config-dump', 'ablation')

TEST_SEED_OFFSET = 10007

# ----------------------------------------------------------------------
class ArgumentParser(argparse.ArgumentParser):

    """ Usage errors raise ConfigurationError, so they exit like any invalid configuration. """

    def error(self, message):
        raise ConfigurationError(f'{self.prog}: {message}')


def build_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument('--config', default=None, help='config document (section.key = value lines)')
    common.add_argument('--seed', type=int, default=None, help='seed of every config section')
    common.add_argument('--threads', type=int, default=None, help='parallel few-shot splits')
    common.add_argument('-v', '--verbose', action='store_true', help='debug logging')

    few_shot = ArgumentParser(add_help=False)
    few_shot.add_argument('--k', default=None, help="samples per class or 'full'")
    few_shot.add_argument('--splits', type=int, default=None, help='number of labeled splits')

    ckpt = ArgumentParser(add_help=False)
    ckpt.add_argument('--ckpt', default=None,
                      help="encoder checkpoint, 'none' for a random initialization")

    parser = ArgumentParser(
        prog='spikeclr', description='Contrastive pretraining of spiking networks on event data')
    parser.add_argument('--version', action='version', version=f'spikeclr {version}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('synth', parents=[common], help='write a synthetic moving-shapes dataset')
    p.add_argument('output', help='dataset directory')
    p.add_argument('--classes', type=int, default=3)
    p.add_argument('--per-class', type=int, default=10)
    p.add_argument('--sensor', type=int, nargs=2, default=(16, 16), metavar=('W', 'H'))
    p.add_argument('--duration', type=int, default=10000, help='stream duration in us')
    p.add_argument('--class-offset', type=int, default=0)
    p.add_argument('--motion', type=float, default=1.0)
    p.add_argument('--force', action='store_true', help='write into a non-empty directory')

    sub.add_parser('pretrain', parents=[common], help='contrastive pretraining')
    sub.add_parser('supervised', parents=[common, few_shot], help='supervised baseline')
    sub.add_parser('probe', parents=[common, few_shot, ckpt], help='linear probe of an encoder')
    sub.add_parser('finetune', parents=[common, few_shot, ckpt], help='fine-tune an encoder')
    sub.add_parser('transfer', parents=[common, few_shot], help='cross-dataset transfer')

    p = sub.add_parser('data-quantity', parents=[common, few_shot],
                       help='pretraining pool size sweep')
    p.add_argument('--fractions', type=float, nargs='+', default=None)

    p = sub.add_parser('augment-preview', parents=[common],
                       help='CSV grids of every augmentation family')
    p.add_argument('sample', help='event file (.evt canonical or .bin N-MNIST)')

    p = sub.add_parser('gradcheck', parents=[common], help='finite-difference gradient checks')
    p.add_argument('scope', choices=SCOPES)

    sub.add_parser('config-dump', parents=[common], help='print the resolved configuration')

    p = sub.add_parser('ablation', parents=[common, few_shot],
                       help='augmentation family or loss strategy ablation')
    p.add_argument('--kind', choices=('augment', 'loss'), default='augment')
    return parser


def split_overrides(extra):
    """ ``--section.key value`` pairs from the arguments argparse did not consume. """
    overrides = []
    idx = 0
    while idx < len(extra):
        arg = extra[idx]
        if not arg.startswith('--') or '.' not in arg:
            raise ConfigurationError(f'unrecognized argument {arg!r}')
        key = arg[2:]
        if '=' in key:
            key, value = key.split('=', 1)
            idx += 1
        elif idx + 1 < len(extra):
            value = extra[idx + 1]
            idx += 2
        else:
            raise ConfigurationError(f'missing value for {arg}')
        overrides.append((key, value))
    return overrides


def resolve_config(args, extra):
    overrides = split_overrides(extra)
    if getattr(args, 'k', None) is not None:
        overrides.append(('eval.k', args.k))
    if getattr(args, 'splits', None) is not None:
        overrides.append(('eval.splits', args.splits))
    if getattr(args, 'fractions', None) is not None:
        overrides.append(('eval.fractions', tuple(args.fractions)))
    if args.threads is not None:
        overrides.append(('eval.threads', args.threads))
    p = load_config(args.config, overrides)
    if args.seed is not None:
        set_seed(p, args.seed)
    return p


# ----------------------------------------------------------------------
def run_dir(command, p, extra=''):
    root = os.environ.get('SPIKECLR_OUT', 'runs')
    path = os.path.join(root, f'{command}-{config_hash(p, extra)}')
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, 'config.txt'), 'w') as fd:
        fd.write(f'# spikeclr {command} {extra}'.rstrip() + '\n')
        fd.write(p.to_document())
    logger.info('--> run directory %s', path)
    return path


def load_dataset(d, prefix=''):
    """ Dataset of the ``data`` section: a directory if a path is set, else synthetic. """
    path = d[prefix + 'path']
    num_classes = d[prefix + 'num_classes']
    if path is not None:
        return read_dataset_dir(path, num_classes=num_classes)
    offset = d.source_class_offset if prefix else d.class_offset
    return synth_moving_shapes(num_classes, d[prefix + 'samples_per_class'], tuple(d.sensor),
                               d.duration, d[prefix + 'seed'], class_offset=offset,
                               motion=d.motion)


def load_test_dataset(d):
    if d.test_path is not None:
        return read_dataset_dir(d.test_path, num_classes=d.num_classes)
    if d.path is not None:
        return None
    return synth_moving_shapes(d.num_classes, d.test_samples_per_class, tuple(d.sensor),
                               d.duration, d.seed + TEST_SEED_OFFSET,
                               class_offset=d.class_offset, motion=d.motion,
                               name=f'shapes{d.class_offset}-test')


def write_few_shot(path, reports):
    te.write_results(reports, os.path.join(path, 'results.csv'))
    te.write_summary([te.aggregate([r]) for r in reports], os.path.join(path, 'summary.csv'))
    if len(reports) == 1 and reports[0].pretrain is not None:
        te.write_loss_curve(reports[0].pretrain.loss_curve, os.path.join(path, 'loss_curve.csv'))
    elif len(reports) == 1:
        te.write_loss_curve(reports[0].loss_curve, os.path.join(path, 'loss_curve.csv'))
    for r in reports:
        s = te.aggregate([r])
        print(f'{s.protocol} {s.pretrain_dataset or s.dataset} k={s.k}: '
              f'{s.mean_acc:.4f} +- {s.std_acc:.4f} ({s.n_splits} splits)')


def encoder_from(args, p, dataset):
    if args.ckpt is None:
        raise ConfigurationError(f"{args.command}: --ckpt is required (a path or 'none')")
    if args.ckpt.lower() == 'none':
        logger.info('--> %s: random-init encoder baseline', args.command)
        cfg = train_config(p, 'pretrain').alter(seed=p.model.seed)
        return te.initial_models(dataset, cfg, head=False)[0]
    return load_checkpoint(args.ckpt)


def save_split_checkpoints(path, report):
    """ Trained encoder and classifier of every split of a few-shot report. """
    for s, (encoder, classifier) in enumerate(report.models):
        if encoder is not None:
            save_checkpoint(encoder, os.path.join(path, f'checkpoint_split{s}.spkc'))
        save_checkpoint(classifier, os.path.join(path, f'classifier_split{s}.spkc'))


def save_pretrained(path, report, name='encoder.spkc'):
    encoder = report.pretrain.models[0][0]
    save_checkpoint(encoder, os.path.join(path, name))


# ----------------------------------------------------------------------
def cmd_synth(args, p):
    if os.path.isdir(args.output) and os.listdir(args.output) and not args.force:
        raise ConfigurationError(f'{args.output} exists and is not empty, use --force')
    seed = 0 if args.seed is None else args.seed
    dataset = synth_moving_shapes(args.classes, args.per_class, tuple(args.sensor),
                                  args.duration, seed, class_offset=args.class_offset,
                                  motion=args.motion)
    rows = write_dataset_dir(dataset, args.output)
    counts = np.bincount(dataset.labels, minlength=dataset.num_classes)
    print(f'wrote {len(rows)} samples to {args.output}: '
          + ', '.join(f'class {c}: {n}' for c, n in enumerate(counts)))


def cmd_pretrain(args, p):
    dataset = load_dataset(p.data)
    encoder, report = te.pretrain(dataset, train_config(p, 'pretrain'))
    path = run_dir('pretrain', p)
    save_checkpoint(encoder, os.path.join(path, 'checkpoint.spkc'))
    te.write_loss_curve(report.loss_curve, os.path.join(path, 'loss_curve.csv'))
    print(f'pretrain {dataset.name}: {report.epochs} epochs, '
          f'dead embeddings {report.dead_embeddings}, checkpoint in {path}')


def _few_shot_command(args, p, protocol):
    dataset, test = load_dataset(p.data), load_test_dataset(p.data)
    cfg, spec = train_config(p, 'downstream'), split_spec(p)
    encoder, extra = None, ''
    if protocol != 'supervised':
        encoder = encoder_from(args, p, dataset)
        extra = f'ckpt={args.ckpt}'
    pretrained = '' if encoder is None or args.ckpt.lower() == 'none' else args.ckpt
    report = te.run_few_shot(protocol, dataset, spec, cfg, encoder=encoder, test=test,
                             threads=p.eval.threads, pretrain_dataset=pretrained)
    path = run_dir(args.command, p, extra)
    write_few_shot(path, [report])
    save_split_checkpoints(path, report)


def cmd_supervised(args, p):
    args.ckpt = None
    _few_shot_command(args, p, 'supervised')


def cmd_probe(args, p):
    _few_shot_command(args, p, 'linear_probe')


def cmd_finetune(args, p):
    _few_shot_command(args, p, 'fine_tune')


def cmd_transfer(args, p):
    source = load_dataset(p.data, prefix='source_')
    target, test = load_dataset(p.data), load_test_dataset(p.data)
    report = te.run_transfer(source, target, train_config(p, 'pretrain'), split_spec(p),
                             downstream=train_config(p, 'downstream'), test=test,
                             threads=p.eval.threads)
    path = run_dir('transfer', p)
    write_few_shot(path, [report])
    save_pretrained(path, report)
    save_split_checkpoints(path, report)


def cmd_data_quantity(args, p):
    dataset, test = load_dataset(p.data), load_test_dataset(p.data)
    reports = te.run_data_quantity(dataset, p.eval.fractions, train_config(p, 'pretrain'),
                                   split_spec(p), downstream=train_config(p, 'downstream'),
                                   test=test, threads=p.eval.threads)
    path = run_dir('data-quantity', p)
    write_few_shot(path, reports)
    for f, report in zip(p.eval.fractions, reports):
        save_pretrained(path, report, f'encoder_{f:g}.spkc')


def cmd_ablation(args, p):
    dataset, test = load_dataset(p.data), load_test_dataset(p.data)
    cfg, down, spec = train_config(p, 'pretrain'), train_config(p, 'downstream'), split_spec(p)
    if args.kind == 'augment':
        reports = te.run_augment_ablation(dataset, p.eval.augment_sets, cfg, spec, down, test,
                                          p.eval.threads)
    else:
        reports = te.run_loss_ablation(dataset, p.eval.loss_strategies, cfg, spec, down, test,
                                       p.eval.threads)
    write_few_shot(run_dir('ablation', p, f'kind={args.kind}'), reports)


def write_grid(seq, path, stem):
    """ One dense CSV matrix per timestep and polarity channel. """
    for t in range(seq.T):
        for c in range(2):
            np.savetxt(os.path.join(path, f'{stem}_t{t}_c{c}.csv'), seq.data[t, c],
                       delimiter=',', fmt='%.10g')


def augment_preview(stream, policy, T, seed=0):
    """ Original frames and one view per enabled family, in family order. """
    grids = [('original', encode_frames(stream, T))]
    for family in FAMILIES:
        if family not in policy.enabled:
            continue
        rng = np.random.default_rng([seed, FAMILIES.index(family)])
        if family == 'temporal':
            view = encode_frames(aug_temporal(stream, rng, policy), T)
        elif family == 'spatial':
            view = aug_spatial(encode_frames(stream, T), rng, policy)
        else:
            view = aug_polarity(encode_frames(stream, T), rng, policy)
        grids.append((family, view))
    return grids


def cmd_augment_preview(args, p):
    if args.sample.endswith('.bin'):
        stream = read_nmnist_bin(args.sample)
    else:
        stream = read_canonical(args.sample)
    path = run_dir('augment-preview', p, os.path.basename(args.sample))
    grids = augment_preview(stream, augment_policy(p), p.model.T, p.eval.seed)
    for name, seq in grids:
        write_grid(seq, path, name)
        logger.info('--> augment-preview: %s total mass %.6g', name, seq.data.sum())
    print(f'wrote {len(grids)} grid sets to {path}')


def cmd_gradcheck(args, p):
    results = run_gradcheck(args.scope, seed=p.eval.seed)
    for r in results:
        print(f'{r.name:24s} {r.max_error:.3e} {"ok" if r.passed else "FAILED"}')
    assert_passed(results)


def cmd_config_dump(args, p):
    sys.stdout.write(p.to_document())


COMMAND_FUNCTIONS = {
    'synth': cmd_synth, 'pretrain': cmd_pretrain, 'supervised': cmd_supervised,
    'probe': cmd_probe, 'finetune': cmd_finetune, 'transfer': cmd_transfer,
    'data-quantity': cmd_data_quantity, 'augment-preview': cmd_augment_preview,
    'gradcheck': cmd_gradcheck, 'config-dump': cmd_config_dump, 'ablation': cmd_ablation,
}


# ----------------------------------------------------------------------
def main(argv=None):
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except ConfigurationError as e:
        logging.basicConfig(format='%(message)s', stream=sys.stderr)
        logger.error('%s', e)
        return exit_code(e)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(message)s', stream=sys.stderr)
    if args.command not in ('config-dump', 'synth'):
        logger.info(spikeclr_banner())

    try:
        p = resolve_config(args, extra)
        COMMAND_FUNCTIONS[args.command](args, p)
    except (SpikeclrError, OSError) as e:
        logger.error('spikeclr %s: %s', args.command, e)
        return exit_code(e)
    return 0


if __name__ == '__main__':
    sys.exit(main())
