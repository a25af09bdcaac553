# ----------------------------------------------------------------------

import numpy as np

# ----------------------------------------------------------------------

from spikeclr.event_core import synth_moving_shapes
from spikeclr.config import TrainConfig, SplitSpec
from spikeclr.augment import AugmentPolicy
from spikeclr import autodiff as ad
from spikeclr.autodiff import Tape
from spikeclr.snn import build_backbone, forward_sequence, time_mean
from spikeclr.contrastive import contrastive_loss, dead_embeddings, mean_similarity
from spikeclr.train_eval import pretrain, train_supervised, linear_probe, fine_tune
from spikeclr.train_eval import ClassifierTrainer, run_few_shot, run_transfer
from spikeclr.train_eval import run_data_quantity, run_loss_ablation, run_augment_ablation
from spikeclr.train_eval import reconcile_sensors, held_out
from spikeclr.train_eval import ContrastiveTrainer, initial_models, calibration_frames
from spikeclr.exceptions import ConfigurationError, CheckpointError, ContractError

# ----------------------------------------------------------------------

def small_config(**kwargs):
    cfg = TrainConfig(epochs=2, batch_size=4, lr=0.05, T=2, backbone='tiny_conv',
                      proj_dim=8, init_gain=2.0, seed=0)
    return cfg.alter(**kwargs)


def small_dataset(num_classes=2, per_class=4, sensor=(8, 8), class_offset=0, seed=0):
    return synth_moving_shapes(num_classes, per_class, sensor=sensor, duration=2000,
                               seed=seed, class_offset=class_offset)


def same_params(a, b):
    return set(a.params) == set(b.params) and all(
        np.array_equal(a.params[k], b.params[k]) for k in a.params)


def test_pretrain():
    print("== Contrastive pretraining ==")
    ds = small_dataset()
    cfg = small_config()

    untrained, report = pretrain(ds, cfg.alter(epochs=0))
    assert same_params(untrained, initial_models(ds, cfg, head=False)[0])
    raw = build_backbone('tiny_conv', (2, 2, 8, 8), seed=0, init_gain=2.)
    assert not same_params(untrained, raw)
    assert same_params(pretrain(ds, cfg.alter(epochs=0, init_rate=0.))[0], raw)
    assert report.loss_curve == [] and report.protocol == 'pretrain'
    assert report.models[0][0] is untrained

    encoder, report = pretrain(ds, cfg)
    print('--> loss curve', report.loss_curve)
    assert len(report.loss_curve) == 2
    assert all(np.isfinite(report.loss_curve))
    assert not same_params(encoder, untrained)
    assert report.dataset == ds.name and report.epochs == 2

    again, again_report = pretrain(ds, cfg)
    assert same_params(encoder, again)
    assert again_report.loss_curve == report.loss_curve

    trainer = ContrastiveTrainer(ds, cfg)
    trainer.run()
    assert trainer.loss_curve == report.loss_curve
    assert len(trainer.rate_curve) == 2 and len(trainer.spread_curve) == 2
    assert sorted(trainer.rate_curve[0]) == ['conv1', 'conv2', 'conv3', 'proj1']
    assert all(0. <= r <= 1. for r in trainer.rate_curve[-1].values())
    assert trainer.rate_curve[0]['conv1'] > 0.
    assert all(s > 0. for s in trainer.spread_curve)
    assert all(-1. - 1e-12 <= s < 1. for s in trainer.similarity_curve)

    temporal, _ = pretrain(ds, cfg.alter(loss='temporal', epochs=1))
    assert temporal.feature_dim == 32

    for bad in [cfg.alter(batch_size=1), cfg.alter(policy=AugmentPolicy().with_families())]:
        try:
            pretrain(ds, bad)
        except ConfigurationError:
            pass
        else:
            raise AssertionError('invalid pretraining config should be rejected')


def test_default_initialization():
    print("== Calibrated initialization with default settings ==")
    ds = synth_moving_shapes(3, 4, sensor=(16, 16), duration=10000, seed=0)
    cfg = TrainConfig()
    encoder, head = initial_models(ds, cfg)
    assert encoder.topology.kind == 'mini_sew'

    z = time_mean(forward_sequence([encoder, head], calibration_frames(ds, cfg))).value
    assert z.shape == (12, 32)
    assert dead_embeddings(z) == 0
    print('--> mean cosine similarity', mean_similarity(z))
    assert mean_similarity(z) < 0.5

    trainer = ContrastiveTrainer(ds, cfg)
    assert same_params(trainer.encoder, encoder) and same_params(trainer.head, head)
    frames = trainer.views(np.arange(6), 0)
    tape = Tape()
    outputs = forward_sequence([trainer.encoder, trainer.head], frames, tape)
    out_a = [ad.slice(o, 0, 6, axis=0) for o in outputs]
    out_b = [ad.slice(o, 6, 12, axis=0) for o in outputs]
    loss, dead = contrastive_loss(out_a, out_b, cfg.tau)
    grads = ad.backward(tape, loss)
    assert dead == 0 and np.isfinite(loss.value)
    for key in ['stem.w', 'stem.b', 'proj1.w', 'proj2.w', 'proj2.b']:
        assert np.any(grads[key] != 0.), key


def test_classifier_protocols():
    print("== Supervised, probe, fine-tune ==")
    ds = small_dataset(per_class=6)
    labeled = np.array([0, 1, 6, 7])
    _, rest = held_out(ds, labeled)

    # with lr = 0 the zero initialized classifier predicts class 0 everywhere
    frozen_cfg = small_config(lr=0.)
    _, clf, report = train_supervised(ds, frozen_cfg, labeled)
    assert not np.any(clf.params['fc.w'])
    np.testing.assert_allclose(report.accuracies[0], np.mean(ds.labels[rest] == 0), rtol=1e-12)

    cfg = small_config(epochs=3, batch_size=2)
    encoder, _ = pretrain(ds, cfg.alter(epochs=1, batch_size=4))
    before = encoder.copy()

    report = linear_probe(encoder, ds, labeled, cfg)
    assert same_params(encoder, before)
    assert 0. <= report.accuracies[0] <= 1.
    assert len(report.loss_curve) == 3

    trainer = ClassifierTrainer(encoder.copy(), ds, labeled, cfg, 'fine_tune')
    report = trainer.run()
    assert same_params(encoder, before)
    assert not same_params(trainer.encoder, before)
    assert report.protocol == 'fine_tune' and report.train_accuracies

    report = fine_tune(encoder, ds, labeled, cfg, test=small_dataset(per_class=3, seed=9))
    assert same_params(encoder, before)
    assert report.accuracies[0] in [i / 6. for i in range(7)]

    wide = build_backbone('tiny_conv', (2, 2, 16, 16))
    try:
        linear_probe(wide, ds, labeled, cfg)
    except CheckpointError:
        pass
    else:
        raise AssertionError('encoder input mismatch should be rejected')


def test_few_shot_runs():
    print("== Multi-split runs ==")
    ds = small_dataset(per_class=5)
    cfg = small_config(epochs=1, batch_size=2)
    spec = SplitSpec(k_per_class=1, num_splits=2, seed=3)

    serial = run_few_shot('supervised', ds, spec, cfg)
    threaded = run_few_shot('supervised', ds, spec, cfg, threads=2)
    assert serial.accuracies == threaded.accuracies
    assert serial.seeds == [0, 1] and serial.k == '1'
    assert len(serial.split_wall_clock) == 2
    assert len(serial.models) == 2
    assert all(enc is not None and clf.topology.kind == 'classifier' for enc, clf in serial.models)

    try:
        run_few_shot('linear_probe', ds, spec, cfg)
    except ContractError:
        pass
    else:
        raise AssertionError('probe without an encoder should be rejected')


def test_transfer_and_sweeps():
    print("== Transfer, data quantity, ablations ==")
    assert reconcile_sensors((16, 16), (16, 16)) == (1, 1)
    assert reconcile_sensors((32, 16), (16, 8)) == (2, 1)
    assert reconcile_sensors((8, 8), (24, 24)) == (1, 3)
    for a, b in [((16, 16), (24, 24)), ((16, 8), (8, 16))]:
        try:
            reconcile_sensors(a, b)
        except ConfigurationError:
            pass
        else:
            raise AssertionError(f'{a} and {b} should not reconcile')

    source = small_dataset(num_classes=3, sensor=(16, 16), class_offset=3, seed=1)
    target = small_dataset(num_classes=2, per_class=4)
    cfg = small_config(epochs=1)
    spec = SplitSpec(k_per_class=1, num_splits=1)

    report = run_transfer(source, target, cfg, spec)
    assert report.protocol == 'fine_tune' and report.pretrain_dataset == source.name
    assert report.pretrain.protocol == 'pretrain' and report.dataset == target.name

    reports = run_data_quantity(target, [0.5, 1.0], cfg, spec)
    assert [r.pretrain_dataset for r in reports] == [f'{target.name}@0.5', f'{target.name}@1']

    reports = run_loss_ablation(target, ['mean', 'temporal'], cfg, spec)
    assert [r.pretrain_dataset for r in reports] == ['loss=mean', 'loss=temporal']

    reports = run_augment_ablation(target, [('spatial',), ('polarity', 'temporal')], cfg, spec)
    assert [r.pretrain_dataset for r in reports] == ['spatial', 'polarity+temporal']
    assert all(len(r.pretrain.loss_curve) == 1 for r in reports)


if __name__ == '__main__':
    test_pretrain()
    test_default_initialization()
    test_classifier_protocols()
    test_few_shot_runs()
    test_transfer_and_sweeps()
