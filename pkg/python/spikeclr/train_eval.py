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

""" Training loops and evaluation protocols.

Contrastive pretraining of an encoder + projection head, supervised
training from scratch, linear probing of a frozen encoder, end-to-end
fine-tuning, few-shot split sampling and the multi-split, transfer,
data-quantity and ablation drivers built on them.

All randomness is derived from explicit seeds: weight initialization from
the run seed, the batch order of epoch e from (seed, e) and the
augmentations of sample i in epoch e from (seed, e, i). Split s of a
few-shot run trains with seed + s.
"""

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

# ----------------------------------------------------------------------

from . import autodiff as ad
from .autodiff import Tape, SGD
from .augment import make_view, make_view_pair, view_rngs
from .representation import encode_frames
from .snn import (build_backbone, build_projection_head, build_classifier,
                  calibrate, firing_rates, forward_sequence, time_mean)
from .contrastive import contrastive_loss, mean_similarity
from .checkpoint import check_topology
from .config import TrainConfig, SplitSpec
from .ParameterCollection import ParameterCollection, parameter_scan
from .ase_timing import Timer, timer
from .exceptions import ConfigurationError, ContractError, DataError

logger = logging.getLogger(__name__)

PROTOCOLS = ('pretrain', 'supervised', 'linear_probe', 'fine_tune')

RESULT_COLUMNS = ('protocol', 'dataset', 'pretrain_dataset', 'k', 'split', 'seed',
                  'accuracy', 'epochs', 'wall_clock_s')
SUMMARY_COLUMNS = ('protocol', 'k', 'mean_acc', 'std_acc', 'n_splits')
LOSS_COLUMNS = ('epoch', 'mean_loss')

EVAL_CHUNK = 64

# ----------------------------------------------------------------------
def cosine_lr(lr, epoch, epochs):
    """ lr 0.5 (1 + cos(pi epoch / epochs)), decaying to zero. """
    if epochs <= 0:
        return lr
    return lr * 0.5 * (1. + np.cos(np.pi * epoch / epochs))


def epoch_batches(n, batch_size, rng, min_size=1):
    """ Shuffled index batches; a last batch below ``min_size`` joins the previous one. """
    order = rng.permutation(n)
    batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) < min_size:
        batches[-2:] = [np.concatenate(batches[-2:])]
    return batches


def frame_shape(dataset, T, factor=1):
    W, H = dataset.sensor_size
    return (T, 2, H // factor, W // factor)


def encode_streams(streams, T, factor=1):
    """ Unaugmented normalized histogram frames, (B, T, 2, H, W). """
    return np.stack([encode_frames(s, T, normalize=True, factor=factor).data for s in streams])


def calibration_frames(dataset, cfg, factor=1):
    """ Unaugmented frames of up to ``cfg.init_samples`` samples drawn with ``cfg.seed``. """
    n = min(len(dataset), cfg.init_samples)
    picked = np.random.default_rng([cfg.seed, len(dataset)]).choice(len(dataset), n, replace=False)
    return encode_streams([dataset.samples[i][0] for i in np.sort(picked)], cfg.T, factor)


def initial_models(dataset, cfg, factor=1, head=True):
    """ Fresh encoder and, with ``head``, projection head for ``dataset``.

    Unless ``cfg.init_rate`` is 0 the models are calibrated on
    ``calibration_frames`` so every LIF layer fires at ``cfg.init_rate``
    and the projection head emits centered embeddings.
    """
    encoder = build_backbone(cfg.backbone, frame_shape(dataset, cfg.T, factor), seed=cfg.seed,
                             lif=cfg.lif, init_gain=cfg.init_gain)
    models = [encoder]
    if head:
        models.append(build_projection_head(encoder.feature_dim, cfg.proj_dim, seed=cfg.seed + 1,
                                            lif=cfg.lif, init_gain=cfg.init_gain))
    if cfg.init_rate > 0 and len(dataset):
        calibrate(models, calibration_frames(dataset, cfg, factor), cfg.init_rate)
    return models


def cross_entropy(logits, labels):
    """ Mean softmax cross entropy of (B, C) logits against integer labels. """
    labels = np.asarray(labels, dtype=np.int64)
    B, C = logits.shape
    if len(labels) != B:
        raise ContractError(f'cross_entropy: {len(labels)} labels for {B} rows')
    if np.any(labels < 0) or np.any(labels >= C):
        raise DataError(f'cross_entropy: class ids {sorted(set(labels[(labels < 0) | (labels >= C)]))} '
                        f'outside [0, {C})')
    onehot = np.zeros((B, C))
    onehot[np.arange(B), labels] = 1.
    lse = ad.sum(ad.logsumexp(logits, axis=1))
    picked = ad.sum(ad.mul(logits, onehot))
    return ad.scale(ad.sub(lse, picked), 1. / B)


def _map(fn, items, threads=1):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def config_document(cfg, spec=None):
    """ Deterministic text snapshot of a TrainConfig (and split spec). """
    policy = cfg.policy
    p = ParameterCollection(
        train=ParameterCollection(**{k: v for k, v in cfg.__dict__.items() if k not in ('policy', 'lif')}),
        augment=ParameterCollection(
            crop_scale_range=policy.crop_scale_range, flip_prob=policy.flip_prob,
            roll_max=policy.roll_max, brightness_range=policy.brightness_range,
            shift_range=policy.shift_range, clip=policy.clip,
            window_fraction_range=policy.window_fraction_range,
            enabled=tuple(sorted(policy.enabled))),
        lif=cfg.lif)
    if spec is not None:
        p.split = ParameterCollection(**spec.__dict__)
    return p.to_document()


# ----------------------------------------------------------------------
@dataclass
class RunReport:

    """ Outcome of one protocol run over one or more splits.

    ``mean`` and ``std`` are derived from ``accuracies`` (sample standard
    deviation, 0 for a single split).

    ``models`` holds the trained (encoder, classifier) pair of every split,
    the encoder None where it stayed frozen; pretraining reports hold the
    (encoder, projection head) pair.
    """

    protocol: str
    accuracies: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    loss_curve: list = field(default_factory=list)
    train_accuracies: list = field(default_factory=list)
    split_wall_clock: list = field(default_factory=list)
    config: str = ''
    dead_embeddings: int = 0
    wall_clock: float = 0.
    epochs: int = 0
    k: str = ''
    dataset: str = ''
    pretrain_dataset: str = ''
    pretrain: object = None
    models: list = field(default_factory=list, repr=False, compare=False)
    mean: float = field(init=False, default=float('nan'))
    std: float = field(init=False, default=float('nan'))

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ContractError(f'unknown protocol {self.protocol!r}')
        self.accuracies = [float(a) for a in self.accuracies]
        if self.accuracies:
            self.mean, self.std = split_stats(self.accuracies)

    @property
    def single_split(self):
        return len(self.accuracies) == 1

    def rows(self):
        for split, (acc, seed) in enumerate(zip(self.accuracies, self.seeds)):
            wall = self.split_wall_clock[split] if split < len(self.split_wall_clock) else self.wall_clock
            yield dict(protocol=self.protocol, dataset=self.dataset,
                       pretrain_dataset=self.pretrain_dataset, k=self.k, split=split,
                       seed=seed, accuracy=repr(acc), epochs=self.epochs,
                       wall_clock_s=f'{wall:.3f}')


def split_stats(values):
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 1:
        return float(values[0]), 0.
    return float(np.mean(values)), float(np.std(values, ddof=1))


@dataclass(frozen=True)
class Summary:
    protocol: str
    k: str
    mean_acc: float
    std_acc: float
    n_splits: int
    single_split: bool = False
    dataset: str = ''
    pretrain_dataset: str = ''

    def row(self):
        return dict(protocol=self.protocol, k=self.k, mean_acc=repr(self.mean_acc),
                    std_acc=repr(self.std_acc), n_splits=self.n_splits)


def combine_reports(reports, config=None):
    """ One multi-split report from single-split reports of one protocol. """
    if not reports:
        raise ContractError('combine_reports: no reports')
    first = reports[0]
    curves = [r.loss_curve for r in reports if r.loss_curve]
    curve = list(np.mean(curves, axis=0)) if curves else []
    return RunReport(
        first.protocol,
        accuracies=[a for r in reports for a in r.accuracies],
        seeds=[s for r in reports for s in r.seeds],
        loss_curve=[float(v) for v in curve],
        train_accuracies=[a for r in reports for a in r.train_accuracies],
        split_wall_clock=[r.wall_clock for r in reports],
        config=first.config if config is None else config,
        dead_embeddings=int(np.sum([r.dead_embeddings for r in reports])),
        wall_clock=float(np.sum([r.wall_clock for r in reports])),
        epochs=first.epochs, k=first.k, dataset=first.dataset,
        pretrain_dataset=first.pretrain_dataset, pretrain=first.pretrain,
        models=[m for r in reports for m in r.models])


def aggregate(reports):
    """ Mean and sample standard deviation of the accuracies of all splits.

    Parameters
    ----------

    reports : list of RunReport
        Same protocol and config snapshot.

    Returns
    -------

    summary : Summary
        ``single_split`` flags n = 1, where the std is reported as 0.

    """
    if not reports:
        raise ContractError('aggregate: no reports')
    first = reports[0]
    for r in reports[1:]:
        if r.protocol != first.protocol or r.config != first.config:
            raise ContractError(
                f'aggregate: heterogeneous reports ({first.protocol} vs {r.protocol}, '
                f'or differing configs)')
    accs = [a for r in reports for a in r.accuracies]
    if not accs:
        raise ContractError(f'aggregate: {first.protocol} reports carry no accuracies')
    mean, std = split_stats(accs)
    return Summary(first.protocol, first.k, mean, std, len(accs), len(accs) == 1,
                   first.dataset, first.pretrain_dataset)


# ----------------------------------------------------------------------
class ContrastiveTrainer(object):

    """ Encoder + projection head trained on NT-Xent of augmented view pairs.

    Parameters
    ----------

    dataset : LabeledEventDataset
        Labels are ignored.

    cfg : TrainConfig

    factor : int, optional
        Spatial downsampling applied when encoding.

    """

    def __init__(self, dataset, cfg, factor=1):
        if len(dataset) == 0:
            raise DataError(f'{dataset.name}: cannot pretrain on an empty dataset')
        if cfg.batch_size < 2:
            raise ConfigurationError(
                f'pretrain.batch_size must be >= 2 for contrastive negatives, got {cfg.batch_size}')
        if not cfg.policy.enabled:
            raise ConfigurationError('pretraining needs at least one augmentation family')

        self.dataset, self.cfg, self.factor = dataset, cfg, factor
        self.timer = Timer()
        self.input_shape = frame_shape(dataset, cfg.T, factor)
        with self.timer('calibrate'):
            self.encoder, self.head = initial_models(dataset, cfg, factor)
            self.monitor = calibration_frames(dataset, cfg, factor)
        self.optimizer = SGD(cfg.momentum, cfg.weight_decay)
        self.loss_curve = []
        self.similarity_curve = []
        self.spread_curve = []
        self.rate_curve = []
        self.dead_embeddings = 0

    @timer('views')
    def views(self, batch, epoch):
        """ (2B, T, 2, H, W): the first views of the batch, then the second views. """
        first, second = [], []
        for idx in batch:
            rng_a, rng_b = view_rngs(self.cfg.seed, int(idx), epoch)
            pair = make_view_pair(self.dataset.samples[idx][0], self.cfg.policy, self.cfg.T,
                                  rng_a, rng_b, factor=self.factor, source_index=int(idx))
            first.append(pair.view_a.data)
            second.append(pair.view_b.data)
        return np.stack(first + second)

    @timer('step')
    def step(self, frames, lr):
        tape = Tape()
        outputs = forward_sequence([self.encoder, self.head], frames, tape)
        n = frames.shape[0] // 2
        out_a = [ad.slice(o, 0, n, axis=0) for o in outputs]
        out_b = [ad.slice(o, n, 2 * n, axis=0) for o in outputs]
        loss, dead = contrastive_loss(out_a, out_b, self.cfg.tau, self.cfg.loss)

        grads = ad.backward(tape, loss)
        params = self.optimizer.step({**self.encoder.params, **self.head.params}, grads, lr)
        self.encoder.params = {k: params[k] for k in self.encoder.params}
        self.head.params = {k: params[k] for k in self.head.params}
        z = np.mean([o.value for o in outputs], axis=0)
        return float(loss.value), dead, (mean_similarity(z), float(np.mean(np.var(z, axis=0))))

    @timer('epoch')
    def run_epoch(self, epoch):
        lr = cosine_lr(self.cfg.lr, epoch, self.cfg.epochs)
        rng = np.random.default_rng([self.cfg.seed, epoch])
        losses, stats = [], []
        for batch in epoch_batches(len(self.dataset), self.cfg.batch_size, rng, min_size=2):
            loss, dead, head_stats = self.step(self.views(batch, epoch), lr)
            losses.append(loss)
            stats.append(head_stats)
            self.dead_embeddings += dead
        mean_loss = float(np.mean(losses))
        similarity, spread = np.mean(stats, axis=0)
        self.loss_curve.append(mean_loss)
        self.similarity_curve.append(float(similarity))
        self.spread_curve.append(float(spread))
        with self.timer('monitor'):
            self.rate_curve.append(firing_rates([self.encoder, self.head], self.monitor))
        logger.info('--> pretrain: epoch %d/%d lr %.4g mean_loss %.4f similarity %.3f spread %.3g',
                    epoch + 1, self.cfg.epochs, lr, mean_loss, similarity, spread)
        logger.debug('--> pretrain: firing rates %s',
                     ', '.join(f'{k} {v:.3f}' for k, v in self.rate_curve[-1].items()))
        return mean_loss

    def run(self):
        for epoch in range(self.cfg.epochs):
            self.run_epoch(epoch)
        if self.dead_embeddings:
            logger.warning('--> pretrain: %d zero embeddings during training', self.dead_embeddings)
        self.timer.write(logger)
        report = RunReport('pretrain', loss_curve=list(self.loss_curve), seeds=[self.cfg.seed],
                           config=config_document(self.cfg),
                           dead_embeddings=self.dead_embeddings,
                           wall_clock=self.timer.elapsed(), epochs=self.cfg.epochs,
                           dataset=self.dataset.name, pretrain_dataset=self.dataset.name,
                           models=[(self.encoder, self.head)])
        return self.encoder, report


def pretrain(dataset, cfg, factor=1):
    """ Contrastive pretraining without labels.

    Returns
    -------

    encoder : SnnModel
        The trained backbone; the projection head is discarded.

    report : RunReport

    """
    return ContrastiveTrainer(dataset, cfg, factor).run()


# ----------------------------------------------------------------------
def held_out(dataset, labeled_indices, test=None):
    """ Evaluation set: ``test`` if given, else the unlabeled rest of ``dataset``. """
    if test is not None:
        return test, np.arange(len(test))
    rest = np.setdiff1d(np.arange(len(dataset)), labeled_indices)
    if len(rest) == 0:
        raise DataError(f'{dataset.name}: no samples left for evaluation')
    return dataset, rest


def predict(models, frames):
    """ Class predictions of time-averaged logits, evaluation only. """
    preds = []
    for i in range(0, len(frames), EVAL_CHUNK):
        logits = time_mean(forward_sequence(models, frames[i:i + EVAL_CHUNK]))
        preds.append(np.argmax(logits.value, axis=1))
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)


def evaluate(encoder, classifier, dataset, indices, T, factor=1):
    """ Accuracy of encoder + classifier on ``dataset[indices]``. """
    indices = np.asarray(indices, dtype=np.int64)
    if len(indices) == 0:
        raise DataError(f'{dataset.name}: empty evaluation set')
    frames = encode_streams([dataset.samples[i][0] for i in indices], T, factor)
    preds = predict([encoder, classifier], frames)
    return float(np.mean(preds == dataset.labels[indices]))


def extract_features(encoder, frames):
    """ Time-averaged encoder features of a frame batch, no gradients. """
    feats = []
    for i in range(0, len(frames), EVAL_CHUNK):
        feats.append(time_mean(forward_sequence(encoder, frames[i:i + EVAL_CHUNK])).value)
    return np.concatenate(feats)


class ClassifierTrainer(object):

    """ Cross entropy on time-averaged logits of a linear classifier.

    ``supervised`` and ``fine_tune`` train encoder and classifier on
    spatially augmented views, ``linear_probe`` trains the classifier
    only on precomputed frozen features.
    """

    def __init__(self, encoder, dataset, labeled_indices, cfg, protocol, factor=1):
        if protocol not in ('supervised', 'linear_probe', 'fine_tune'):
            raise ContractError(f'ClassifierTrainer: unsupported protocol {protocol!r}')
        labeled = np.asarray(labeled_indices, dtype=np.int64)
        if len(labeled) == 0:
            raise DataError(f'{dataset.name}: no labeled samples')
        labels = dataset.labels[labeled]
        if np.any(labels >= dataset.num_classes) or np.any(labels < 0):
            raise DataError(f'{dataset.name}: unknown class id in labeled samples')

        self.encoder, self.dataset, self.cfg = encoder, dataset, cfg
        self.protocol, self.factor = protocol, factor
        self.labeled, self.labels = labeled, labels
        self.timer = Timer()
        self.classifier = build_classifier(encoder.feature_dim, dataset.num_classes, cfg.lif)
        self.optimizer = SGD(cfg.momentum, cfg.weight_decay)
        self.policy = cfg.policy.with_families('spatial')
        self.loss_curve = []
        self.features = None
        if protocol == 'linear_probe':
            with self.timer('features'):
                self.features = extract_features(encoder, self.frames(labeled))

    def frames(self, indices):
        return encode_streams([self.dataset.samples[i][0] for i in indices], self.cfg.T, self.factor)

    @timer('views')
    def views(self, indices, epoch):
        out = []
        for idx in indices:
            rng = view_rngs(self.cfg.seed, int(idx), epoch)[0]
            out.append(make_view(self.dataset.samples[idx][0], self.policy, self.cfg.T,
                                 rng, self.factor).data)
        return np.stack(out)

    @timer('step')
    def step(self, batch, epoch, lr):
        tape = Tape()
        if self.features is not None:
            tparams = self.classifier.watch(tape)
            logits = self.classifier.step(tape.constant(self.features[batch]), tparams, {})
            models = [self.classifier]
        else:
            frames = self.views(self.labeled[batch], epoch)
            logits = time_mean(forward_sequence([self.encoder, self.classifier], frames, tape))
            models = [self.encoder, self.classifier]

        loss = cross_entropy(logits, self.labels[batch])
        grads = ad.backward(tape, loss)
        params = self.optimizer.step({k: v for m in models for k, v in m.params.items()}, grads, lr)
        for m in models:
            m.params = {k: params[k] for k in m.params}
        return float(loss.value)

    @timer('epoch')
    def run_epoch(self, epoch):
        lr = cosine_lr(self.cfg.lr, epoch, self.cfg.epochs)
        rng = np.random.default_rng([self.cfg.seed, epoch])
        losses = [self.step(batch, epoch, lr)
                  for batch in epoch_batches(len(self.labeled), self.cfg.batch_size, rng)]
        self.loss_curve.append(float(np.mean(losses)))
        logger.debug('--> %s: epoch %d/%d mean_loss %.4f',
                     self.protocol, epoch + 1, self.cfg.epochs, self.loss_curve[-1])

    def train_accuracy(self):
        if self.features is not None:
            logits = self.features @ self.classifier.params['fc.w'] + self.classifier.params['fc.b']
            preds = np.argmax(logits, axis=1)
        else:
            preds = predict([self.encoder, self.classifier], self.frames(self.labeled))
        return float(np.mean(preds == self.labels))

    def run(self, test=None, k='', pretrain_dataset=''):
        for epoch in range(self.cfg.epochs):
            self.run_epoch(epoch)

        with self.timer('evaluate'):
            eval_set, eval_indices = held_out(self.dataset, self.labeled, test)
            if test is None and np.intersect1d(eval_indices, self.labeled).size:
                raise ContractError('evaluation indices intersect the labeled indices')
            accuracy = evaluate(self.encoder, self.classifier, eval_set, eval_indices,
                                self.cfg.T, self.factor)
            train_acc = self.train_accuracy()
        self.timer.write(logger)

        logger.info('--> %s: k=%s seed %d accuracy %.4f (train %.4f)',
                    self.protocol, k, self.cfg.seed, accuracy, train_acc)
        return RunReport(self.protocol, accuracies=[accuracy], seeds=[self.cfg.seed],
                         loss_curve=list(self.loss_curve), train_accuracies=[train_acc],
                         config=config_document(self.cfg), wall_clock=self.timer.elapsed(),
                         epochs=self.cfg.epochs, k=str(k), dataset=self.dataset.name,
                         pretrain_dataset=pretrain_dataset,
                         models=[(None if self.features is not None else self.encoder,
                                  self.classifier)])


def train_supervised(dataset, cfg, labeled_indices, test=None, factor=1, k=''):
    """ Encoder and classifier trained from scratch on the labeled samples.

    Returns
    -------

    encoder, classifier : SnnModel

    report : RunReport

    """
    encoder = initial_models(dataset, cfg, factor, head=False)[0]
    trainer = ClassifierTrainer(encoder, dataset, labeled_indices, cfg, 'supervised', factor)
    report = trainer.run(test, k)
    return trainer.encoder, trainer.classifier, report


def linear_probe(encoder, dataset, labeled_indices, cfg, test=None, factor=1, k='',
                 pretrain_dataset=''):
    """ Linear classifier on the frozen, time-averaged features of ``encoder``.

    The encoder parameters are never written.
    """
    check_topology(encoder, frame_shape(dataset, cfg.T, factor))
    trainer = ClassifierTrainer(encoder, dataset, labeled_indices, cfg, 'linear_probe', factor)
    return trainer.run(test, k, pretrain_dataset)


def fine_tune(encoder, dataset, labeled_indices, cfg, test=None, factor=1, k='',
              pretrain_dataset=''):
    """ End-to-end training of a copy of ``encoder`` and a new linear classifier. """
    check_topology(encoder, frame_shape(dataset, cfg.T, factor))
    trainer = ClassifierTrainer(encoder.copy(), dataset, labeled_indices, cfg, 'fine_tune', factor)
    return trainer.run(test, k, pretrain_dataset)


# ----------------------------------------------------------------------
def _stratified_counts(labels, num_classes, fraction):
    counts = np.bincount(labels, minlength=num_classes)
    total = max(1, int(round(fraction * len(labels))))
    quota = fraction * counts
    base = np.floor(quota).astype(np.int64)
    remainder = total - int(base.sum())
    order = np.argsort(-(quota - base), kind='stable')
    base[order[:remainder]] += 1
    return np.minimum(base, counts)


def sample_few_shot(dataset, spec):
    """ Labeled index sets, one per split.

    Parameters
    ----------

    dataset : LabeledEventDataset

    spec : SplitSpec
        ``k_per_class`` samples of every class without replacement, all
        samples for ``full``, or a stratified ``label_fraction`` of the
        dataset.

    Returns
    -------

    splits : list of numpy.ndarray
        Sorted indices; split s is drawn from (spec.seed, s).

    """
    labels = dataset.labels
    by_class = [np.flatnonzero(labels == c) for c in range(dataset.num_classes)]

    if spec.label_fraction is not None:
        want = _stratified_counts(labels, dataset.num_classes, spec.label_fraction)
    elif spec.k_per_class == 'full':
        return [np.arange(len(dataset)) for _ in range(spec.num_splits)]
    else:
        want = np.full(dataset.num_classes, spec.k_per_class)
        for c, members in enumerate(by_class):
            if len(members) < spec.k_per_class:
                raise DataError(
                    f'{dataset.name}: class {c} has {len(members)} samples, '
                    f'fewer than k={spec.k_per_class}')

    splits = []
    for s in range(spec.num_splits):
        rng = np.random.default_rng([spec.seed, s])
        picked = [rng.choice(members, size=n, replace=False)
                  for members, n in zip(by_class, want) if n > 0]
        splits.append(np.sort(np.concatenate(picked)))
    return splits


def run_few_shot(protocol, dataset, spec, cfg, encoder=None, test=None, factor=1,
                 threads=1, pretrain_dataset=''):
    """ One protocol over every split of ``spec``, combined into one report.

    ``encoder`` is required for ``linear_probe`` and ``fine_tune``;
    ``supervised`` builds its own per split.
    """
    if protocol not in ('supervised', 'linear_probe', 'fine_tune'):
        raise ContractError(f'run_few_shot: unsupported protocol {protocol!r}')
    if protocol != 'supervised' and encoder is None:
        raise ContractError(f'run_few_shot: {protocol} needs an encoder')

    splits = sample_few_shot(dataset, spec)

    def one(item):
        s, labeled = item
        split_cfg = cfg.alter(seed=cfg.seed + s)
        if protocol == 'supervised':
            return train_supervised(dataset, split_cfg, labeled, test, factor, spec.label)[2]
        run = linear_probe if protocol == 'linear_probe' else fine_tune
        return run(encoder, dataset, labeled, split_cfg, test, factor, spec.label, pretrain_dataset)

    reports = _map(one, enumerate(splits), threads)
    report = combine_reports(reports, config=config_document(cfg, spec))
    logger.info('--> %s k=%s: mean accuracy %.4f +- %.4f over %d splits',
                protocol, spec.label, report.mean, report.std, len(report.accuracies))
    return report


# ----------------------------------------------------------------------
def reconcile_sensors(source_size, target_size):
    """ Integer downsample factors mapping both sensor sizes to the smaller one. """
    if tuple(source_size) == tuple(target_size):
        return 1, 1
    (ws, hs), (wt, ht) = source_size, target_size
    if ws >= wt and hs >= ht:
        big, small, source_bigger = (ws, hs), (wt, ht), True
    elif ws <= wt and hs <= ht:
        big, small, source_bigger = (wt, ht), (ws, hs), False
    else:
        raise ConfigurationError(f'sensor sizes {source_size} and {target_size} cannot be reconciled')
    f = big[0] // small[0]
    if big != (f * small[0], f * small[1]):
        raise ConfigurationError(
            f'sensor sizes {source_size} and {target_size} differ by a non-integer factor')
    return (f, 1) if source_bigger else (1, f)


def run_transfer(pretrain_dataset, target_dataset, cfg, spec, downstream=None,
                 test=None, threads=1):
    """ Pretrain on one dataset, fine-tune few-shot on another.

    Parameters
    ----------

    pretrain_dataset, target_dataset : LabeledEventDataset
        Sensor sizes equal or differing by an integer factor.

    cfg : TrainConfig
        Pretraining configuration.

    spec : SplitSpec

    downstream : TrainConfig, optional
        Fine-tuning configuration, ``cfg`` if None.

    Returns
    -------

    report : RunReport
        Fine-tune report, the pretraining report in ``report.pretrain``.

    """
    f_source, f_target = reconcile_sensors(pretrain_dataset.sensor_size, target_dataset.sensor_size)
    encoder, pre_report = pretrain(pretrain_dataset, cfg, factor=f_source)
    report = run_few_shot('fine_tune', target_dataset, spec, downstream or cfg,
                          encoder=encoder, test=test, factor=f_target, threads=threads,
                          pretrain_dataset=pretrain_dataset.name)
    report.pretrain = pre_report
    return report


def nested_subsets(n, fractions, seed):
    """ Index subsets of growing size, prefixes of one seeded permutation. """
    order = np.random.default_rng([seed, n]).permutation(n)
    subsets = []
    for f in fractions:
        if not 0 < f <= 1:
            raise ConfigurationError(f'pretraining fraction {f} outside (0, 1]')
        subsets.append(np.sort(order[:max(2, int(round(f * n)))]))
    return subsets


def run_data_quantity(dataset, fractions, cfg, spec, downstream=None, test=None, threads=1):
    """ Pretrain on nested fractions of the pool, fine-tune each few-shot.

    Returns
    -------

    reports : list of RunReport
        One fine-tune report per fraction, tagged ``<dataset>@<fraction>``.

    """
    reports = []
    for f, subset in zip(fractions, nested_subsets(len(dataset), fractions, cfg.seed)):
        pool = dataset.subset(subset, name=f'{dataset.name}@{f:g}')
        logger.info('--> data-quantity: pretraining on %d of %d samples', len(pool), len(dataset))
        encoder, pre_report = pretrain(pool, cfg)
        report = run_few_shot('fine_tune', dataset, spec, downstream or cfg, encoder=encoder,
                              test=test, threads=threads, pretrain_dataset=pool.name)
        report.pretrain = pre_report
        reports.append(report)
    return reports


# ----------------------------------------------------------------------
def _ablation(dataset, scan, cfg_of, spec, downstream, test, threads):
    reports = []
    for p in scan:
        cfg = cfg_of(p)
        encoder, pre_report = pretrain(dataset, cfg)
        report = run_few_shot('fine_tune', dataset, spec, downstream, encoder=encoder,
                              test=test, threads=threads, pretrain_dataset=p.label)
        report.pretrain = pre_report
        reports.append(report)
    return reports


def run_augment_ablation(dataset, family_sets, cfg, spec, downstream=None, test=None, threads=1):
    """ Pretrain + fine-tune once per augmentation family set. """
    scan = parameter_scan(ParameterCollection(), families=[tuple(s) for s in family_sets])
    for p in scan:
        p.label = '+'.join(p.families)
    return _ablation(dataset, scan, lambda p: cfg.alter(policy=cfg.policy.with_families(*p.families)),
                     spec, downstream or cfg, test, threads)


def run_loss_ablation(dataset, strategies, cfg, spec, downstream=None, test=None, threads=1):
    """ Pretrain + fine-tune once per NT-Xent aggregation strategy. """
    scan = parameter_scan(ParameterCollection(), loss=list(strategies))
    for p in scan:
        p.label = f'loss={p.loss}'
    return _ablation(dataset, scan, lambda p: cfg.alter(loss=p.loss),
                     spec, downstream or cfg, test, threads)


# ----------------------------------------------------------------------
def _write_csv(path, columns, rows):
    try:
        with open(path, 'w', newline='') as fd:
            writer = csv.DictWriter(fd, fieldnames=columns, lineterminator='\n')
            writer.writeheader()
            writer.writerows(rows)
    except OSError as e:
        raise OSError(f'cannot write {path}: {e.strerror}') from e


def write_results(reports, path):
    _write_csv(path, RESULT_COLUMNS, [row for r in reports for row in r.rows()])


def write_summary(summaries, path):
    _write_csv(path, SUMMARY_COLUMNS, [s.row() for s in summaries])


def write_loss_curve(curve, path):
    _write_csv(path, LOSS_COLUMNS, [dict(epoch=e, mean_loss=repr(float(v)))
                                    for e, v in enumerate(curve)])
