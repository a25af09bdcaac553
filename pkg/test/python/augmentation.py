# ----------------------------------------------------------------------

import numpy as np
from collections import Counter

# ----------------------------------------------------------------------

from spikeclr.event_core import EventStream, synth_moving_shapes
from spikeclr.representation import FrameSequence, encode_histogram
from spikeclr.augment import AugmentPolicy, FAMILIES
from spikeclr.augment import crop_resize, flip_horizontal, roll, scale_shift, temporal_crop
from spikeclr.augment import aug_spatial, aug_polarity, aug_temporal
from spikeclr.augment import make_view_pair, view_rngs

from spikeclr.exceptions import ParameterError

# ----------------------------------------------------------------------

def random_frames(rng, shape=(3, 2, 8, 8)):
    return FrameSequence(rng.uniform(size=shape))


def test_flip_and_roll_properties():
    print("== Flip involution, roll mass ==")
    rng = np.random.default_rng(0)
    for _ in range(100):
        seq = random_frames(rng)
        assert flip_horizontal(flip_horizontal(seq)) == seq
        np.testing.assert_array_equal(flip_horizontal(seq).data[..., 0], seq.data[..., -1])

        dx, dy = rng.integers(-4, 5, size=2)
        rolled = roll(seq, int(dx), int(dy))
        assert np.sort(rolled.data.ravel()).tolist() == np.sort(seq.data.ravel()).tolist()
        assert rolled.data[0, 0, dy % 8, dx % 8] == seq.data[0, 0, 0, 0]


def test_crop_resize():
    print("== Resized crop ==")
    rng = np.random.default_rng(1)
    seq = random_frames(rng)
    assert crop_resize(seq, 0, 0, 8, 8) == seq

    # corner aligned: output corners are the window corners
    out = crop_resize(seq, 2, 1, 5, 4).data
    np.testing.assert_allclose(out[:, :, 0, 0], seq.data[:, :, 2, 1], atol=1e-12)
    np.testing.assert_allclose(out[:, :, -1, -1], seq.data[:, :, 6, 4], atol=1e-12)

    # bilinear interpolation reproduces a linear ramp exactly
    ramp = np.broadcast_to(np.arange(8.)[None, :], (8, 8))
    seq = FrameSequence(np.broadcast_to(ramp, (1, 2, 8, 8)).copy())
    out = crop_resize(seq, 0, 0, 8, 4).data
    np.testing.assert_allclose(out[0, 0, 3], np.arange(8) * 3. / 7., atol=1e-12)

    for args in [(0, 0, 0, 4), (5, 0, 4, 4), (-1, 0, 2, 2)]:
        try:
            crop_resize(seq, *args)
        except ParameterError:
            pass
        else:
            raise AssertionError(f'crop {args} should be rejected')


def test_spatial_identity_policy():
    print("== Degenerate spatial policy ==")
    rng = np.random.default_rng(2)
    policy = AugmentPolicy(crop_scale_range=(1.0, 1.0), flip_prob=0., roll_max=0)
    for _ in range(20):
        seq = random_frames(rng)
        assert aug_spatial(seq, rng, policy) == seq

    policy = AugmentPolicy(flip_prob=0., crop_scale_range=(1.0, 1.0))
    seq = random_frames(rng)
    out = aug_spatial(seq, rng, policy)
    np.testing.assert_allclose(out.data.sum(), seq.data.sum(), rtol=1e-12)


def test_polarity_transform():
    print("== Polarity / intensity ==")
    rng = np.random.default_rng(3)
    seq = random_frames(rng)
    assert scale_shift(seq, 1., (0., 0.)) == seq

    one = FrameSequence(np.full((1, 2, 1, 1), 0.7))
    assert scale_shift(one, 2., (0., 0.), clip=(0., 1.)).data[0, 0, 0, 0] == 1.0

    g, s = 1.3, (0.05, -0.08)
    out = scale_shift(seq, g, s, clip=(0., 1.2)).data
    for idx in np.ndindex(*seq.shape):
        ref = seq.data[idx] * g + s[idx[1]]
        ref = min(max(ref, 0.), 1.2)
        assert abs(out[idx] - ref) <= 1e-15

    policy = AugmentPolicy()
    for _ in range(100):
        out = aug_polarity(random_frames(rng), rng, policy).data
        assert out.min() >= 0. and out.max() <= 1.5

    policy = AugmentPolicy(brightness_range=(1., 1.), shift_range=(0., 0.), clip=None)
    assert aug_polarity(seq, rng, policy) == seq

    try:
        scale_shift(seq, 1., (0., 0.), clip=(1., 0.))
    except ParameterError:
        pass
    else:
        raise AssertionError('clip min > max should be rejected')


def test_temporal_crop():
    print("== Temporal crop ==")
    s = EventStream([1, 5, 9], [0, 1, 2], [0, 0, 0], [1, -1, 1], (3, 1), 10)
    out = temporal_crop(s, 4, 4)
    assert out.events == [(1, 1, 0, -1)] and out.duration == 4

    policy = AugmentPolicy(window_fraction_range=(1., 1.))
    assert aug_temporal(s, np.random.default_rng(0), policy) == s

    empty = aug_temporal(EventStream.empty((3, 1), 10), np.random.default_rng(0),
                         AugmentPolicy(window_fraction_range=(0.5, 0.5)))
    assert len(empty) == 0 and empty.duration == 5

    rng = np.random.default_rng(4)
    policy = AugmentPolicy()
    ds = synth_moving_shapes(3, 4, seed=1)
    for stream in ds.streams * 8:
        out = aug_temporal(stream, rng, policy)
        assert len(out) <= len(stream)
        assert out.duration <= stream.duration
        # output events are input events (x, y, p) re-based in time
        source = Counter((e.x, e.y, e.p) for e in stream)
        cropped = Counter((e.x, e.y, e.p) for e in out)
        assert not cropped - source
        assert np.all(out.t < out.duration)


def test_policy_validation():
    print("== Policy validation ==")
    for kwargs in [dict(flip_prob=1.5), dict(crop_scale_range=(0.9, 0.5)),
                   dict(window_fraction_range=(0., 1.)), dict(window_fraction_range=(0.5, 1.2)),
                   dict(clip=(1., 0.)), dict(enabled={'colour'}), dict(roll_max=-1)]:
        try:
            AugmentPolicy(**kwargs)
        except ParameterError as e:
            print('--> rejected:', e)
        else:
            raise AssertionError(f'{kwargs} should be rejected')
    assert AugmentPolicy().resolved_roll_max(16) == 4
    assert AugmentPolicy().resolved_roll_max(10) == 3
    assert AugmentPolicy().with_families('spatial').enabled == {'spatial'}


def test_view_pairs():
    print("== View pairs ==")
    ds = synth_moving_shapes(3, 2, seed=5)
    stream = ds.streams[0]
    policy = AugmentPolicy()

    a, b = view_rngs(3, 0, 1)
    pair = make_view_pair(stream, policy, 4, a, b)
    assert pair.view_a.shape == pair.view_b.shape == (4, 2, 16, 16)

    a, b = view_rngs(3, 0, 1)
    again = make_view_pair(stream, policy, 4, a, b)
    assert again.view_a == pair.view_a and again.view_b == pair.view_b

    state = np.random.default_rng(9).bit_generator.state
    r1, r2 = np.random.default_rng(), np.random.default_rng()
    r1.bit_generator.state = state
    r2.bit_generator.state = state
    same = make_view_pair(stream, policy, 4, r1, r2)
    assert same.view_a == same.view_b

    try:
        make_view_pair(stream, policy.with_families(), 4, a)
    except ParameterError:
        pass
    else:
        raise AssertionError('no enabled family should be rejected')

    original = encode_histogram(stream, 4)
    rng = np.random.default_rng(10)
    changed = sum(make_view_pair(stream, policy, 4, rng).view_a != original for _ in range(200))
    print('--> views differing from the original:', changed, 'of 200')
    assert changed >= 198


if __name__ == '__main__':
    test_flip_and_roll_properties()
    test_crop_resize()
    test_spatial_identity_policy()
    test_polarity_transform()
    test_temporal_crop()
    test_policy_validation()
    test_view_pairs()
