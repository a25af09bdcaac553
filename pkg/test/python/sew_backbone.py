# ----------------------------------------------------------------------

import numpy as np

# ----------------------------------------------------------------------

from spikeclr import autodiff as ad
from spikeclr.autodiff import Tensor, Tape, backward
from spikeclr.snn import build_backbone, build_projection_head, build_classifier
from spikeclr.snn import forward_sequence, sew_block, time_mean, make_lif_config, rebuild, calibrate
from spikeclr.representation import FrameSequence
from spikeclr.exceptions import ConfigurationError, ShapeError

# ----------------------------------------------------------------------

def test_backbone_shapes_and_sizes():
    print("== Backbone shapes and parameter counts ==")
    rng = np.random.default_rng(0)
    frames = rng.uniform(size=(3, 4, 2, 16, 16))

    for spec, n_params in [('mini_sew', 19376), ('tiny_conv', 5960)]:
        model = build_backbone(spec, (4, 2, 16, 16), seed=1)
        print('-->', model)
        assert model.num_parameters() == n_params
        assert model.feature_dim == 32
        outputs = forward_sequence(model, frames)
        assert len(outputs) == 4
        assert all(o.shape == (3, 32) for o in outputs)

    single = forward_sequence(build_backbone('mini_sew', (4, 2, 16, 16)),
                              FrameSequence(frames[0]))
    assert single[0].shape == (1, 32)


def test_backbone_errors():
    print("== Backbone construction errors ==")
    for spec, shape in [('resnet18', (4, 2, 16, 16)), ('mini_sew', (4, 2, 4, 4)),
                        ('tiny_conv', (4, 2, 12, 12))]:
        try:
            build_backbone(spec, shape)
        except ConfigurationError as e:
            print('--> rejected:', e)
        else:
            raise AssertionError(f'{spec} on {shape} should be rejected')

    model = build_backbone('mini_sew', (4, 2, 16, 16))
    try:
        forward_sequence(model, np.zeros((1, 4, 2, 8, 8)))
    except ShapeError:
        pass
    else:
        raise AssertionError('frame size mismatch should be rejected')


def test_deterministic_initialization():
    print("== Seeded initialization ==")
    a = build_backbone('mini_sew', (4, 2, 16, 16), seed=3)
    b = build_backbone('mini_sew', (4, 2, 16, 16), seed=3)
    c = build_backbone('mini_sew', (4, 2, 16, 16), seed=4)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    assert not np.array_equal(a.params['stem.w'], c.params['stem.w'])
    assert not np.any(a.params['stem.b'])

    again = rebuild(a.topology, a.lif)
    assert all(np.array_equal(a.params[k], again.params[k]) for k in a.params)

    clone = a.copy()
    clone.params['stem.w'][0, 0, 0, 0] += 1.
    assert clone.params['stem.w'][0, 0, 0, 0] != a.params['stem.w'][0, 0, 0, 0]


def test_sew_block():
    print("== SEW block ==")
    cfg = make_lif_config()
    rng = np.random.default_rng(1)
    x = (rng.uniform(size=(2, 4, 5, 5)) > 0.5).astype(float)

    zero = {'conv1.w': np.zeros((4, 4, 3, 3)), 'conv1.b': np.zeros(4),
            'conv2.w': np.zeros((4, 4, 3, 3)), 'conv2.b': np.zeros(4)}
    out = sew_block(Tensor(x), {}, zero, cfg)
    # residual path is silent, ADD leaves the identity spikes
    np.testing.assert_array_equal(out.value, x)

    strong = dict(zero, **{'conv2.b': 5 * np.ones(4)})
    out = sew_block(Tensor(x), {}, strong, cfg)
    np.testing.assert_array_equal(out.value, x + 1.)

    widen = {'conv1.w': np.zeros((6, 4, 3, 3)), 'conv1.b': np.zeros(6),
             'conv2.w': np.zeros((6, 6, 3, 3)), 'conv2.b': np.zeros(6)}
    try:
        sew_block(Tensor(x), {}, widen, cfg)
    except ShapeError:
        pass
    else:
        raise AssertionError('channel change without shortcut should be rejected')

    widen.update({'short.w': np.zeros((6, 4, 1, 1)), 'short.b': 5 * np.ones(6)})
    out = sew_block(Tensor(x), {}, widen, cfg)
    np.testing.assert_array_equal(out.value, np.ones((2, 6, 5, 5)))


def test_spiking_outputs_and_gradients():
    print("== Binary spikes, surrogate gradients ==")
    rng = np.random.default_rng(2)
    model = build_backbone('tiny_conv', (3, 2, 8, 8), seed=0, init_gain=3.)
    head = build_projection_head(model.feature_dim, 8, seed=1)
    frames = rng.uniform(size=(2, 3, 2, 8, 8))

    tape = Tape()
    outputs = forward_sequence([model, head], frames, tape)
    assert all(o.shape == (2, 8) for o in outputs)

    features = forward_sequence(model, frames)
    for f in features:
        # rates of binary spikes on a 1x1 map after three 2x pools
        assert np.all((f.value >= 0.) & (f.value <= 1.))

    grads = backward(tape, ad.sum(time_mean(outputs)))
    assert set(grads) == set(model.params) | set(head.params)
    assert all(np.all(np.isfinite(g)) for g in grads.values())
    assert np.any(grads['conv1.w'] != 0.)


def test_classifier_head():
    print("== Zero initialized classifier ==")
    clf = build_classifier(32, 5)
    assert clf.num_parameters() == 32 * 5 + 5
    assert not any(np.any(v) for v in clf.params.values())
    head = build_projection_head(32, 16)
    assert head.num_parameters() == 32 * 32 + 32 + 32 * 16 + 16


def test_calibration():
    print("== Data-driven calibration ==")
    rng = np.random.default_rng(2)
    frames = rng.uniform(size=(8, 4, 2, 16, 16)) * (rng.uniform(size=(8, 4, 2, 16, 16)) < 0.3)
    model = build_backbone('tiny_conv', (4, 2, 16, 16), seed=1)
    head = build_projection_head(32, 8, seed=2)
    before = model.copy()

    rates = calibrate([model, head], frames, rate=0.2)
    print('--> rates', rates)
    assert sorted(rates) == ['conv1', 'conv2', 'conv3', 'proj1']
    assert all(0. < r < 0.4 for r in rates.values())

    # first layer rate per channel, driven directly
    layer, states, total = model.layers[0], {}, 0.
    for t in range(4):
        total = total + layer.forward(frames[:, t], model.params, states, model.lif).value.mean(axis=(0, 2, 3))
    print('--> conv1 channel rates', total / 4)
    assert np.all(np.abs(total / 4 - 0.2) < 0.02)

    ratio = model.params['conv1.w'] / before.params['conv1.w']
    np.testing.assert_allclose(ratio, ratio[:, :1, :1, :1] * np.ones_like(ratio), rtol=1e-10)
    assert np.all(ratio > 0)

    outputs = forward_sequence([model, head], frames)
    np.testing.assert_allclose(np.mean([o.value for o in outputs], axis=(0, 1)), 0., atol=1e-10)

    classifier = build_classifier(32, 3)
    calibrate([model.copy(), classifier], frames)
    assert not np.any(classifier.params['fc.w']) and not np.any(classifier.params['fc.b'])

    for rate in [0., 1., 1.5]:
        try:
            calibrate(model, frames, rate)
        except ConfigurationError:
            pass
        else:
            raise AssertionError(f'rate {rate} should be rejected')
    try:
        calibrate(model, frames[:, :, :, :8, :8])
    except ShapeError:
        pass
    else:
        raise AssertionError('frames of another sensor should be rejected')


if __name__ == '__main__':
    test_backbone_shapes_and_sizes()
    test_backbone_errors()
    test_deterministic_initialization()
    test_sew_block()
    test_spiking_outputs_and_gradients()
    test_classifier_head()
    test_calibration()
