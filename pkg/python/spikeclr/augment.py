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

""" Event augmentations for contrastive view generation.

Three families: spatial (resized crop, horizontal flip, cyclic roll) and
polarity/intensity (global gain, per-channel shift, clipping) act on
encoded frames; temporal cropping acts on the raw stream before encoding.
The ``aug_*`` functions draw parameters from a ``numpy.random.Generator``
and apply the deterministic transforms defined first.
"""

import math
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .exceptions import ParameterError
from .event_core import EventStream
from .representation import FrameSequence, encode_frames

logger = logging.getLogger(__name__)

FAMILIES = ('spatial', 'polarity', 'temporal')

# ----------------------------------------------------------------------
def _check_range(name, rng, lo_bound=-np.inf, hi_bound=np.inf):
    lo, hi = rng
    if not lo <= hi:
        raise ParameterError(f'{name}: lower bound {lo} exceeds upper bound {hi}')
    if lo < lo_bound or hi > hi_bound:
        raise ParameterError(f'{name}: range ({lo}, {hi}) outside [{lo_bound}, {hi_bound}]')


@dataclass(frozen=True)
class AugmentPolicy:

    """ Parameters of the three augmentation families.

    ``roll_max=None`` resolves to ceil(W / 4) at application time. ``clip``
    is a (min, max) pair or ``None`` for no clipping.
    """

    crop_scale_range: tuple = (0.6, 1.0)
    flip_prob: float = 0.5
    roll_max: object = None
    brightness_range: tuple = (0.5, 1.5)
    shift_range: tuple = (-0.1, 0.1)
    clip: object = (0.0, 1.5)
    window_fraction_range: tuple = (0.5, 1.0)
    enabled: frozenset = field(default_factory=lambda: frozenset(FAMILIES))

    def __post_init__(self):
        object.__setattr__(self, 'enabled', frozenset(self.enabled))
        unknown = self.enabled - set(FAMILIES)
        if unknown:
            raise ParameterError(f'unknown augmentation families {sorted(unknown)}')
        _check_range('crop_scale_range', self.crop_scale_range, 0., 1.)
        if self.crop_scale_range[0] <= 0:
            raise ParameterError('crop_scale_range: lower bound must be positive')
        if not 0. <= self.flip_prob <= 1.:
            raise ParameterError(f'flip_prob {self.flip_prob} outside [0, 1]')
        if self.roll_max is not None and self.roll_max < 0:
            raise ParameterError(f'roll_max must be non-negative, got {self.roll_max}')
        _check_range('brightness_range', self.brightness_range)
        _check_range('shift_range', self.shift_range)
        if self.clip is not None and self.clip[0] > self.clip[1]:
            raise ParameterError(f'clip min {self.clip[0]} exceeds clip max {self.clip[1]}')
        _check_range('window_fraction_range', self.window_fraction_range)
        lo, hi = self.window_fraction_range
        if lo <= 0 or hi > 1:
            raise ParameterError(
                f'window_fraction_range ({lo}, {hi}) must lie in (0, 1]')

    @classmethod
    def from_parameters(cls, p):
        """ Build from the ``augment`` config section. """
        return cls(crop_scale_range=tuple(p.crop_scale_range),
                   flip_prob=p.flip_prob,
                   roll_max=p.roll_max,
                   brightness_range=tuple(p.brightness_range),
                   shift_range=tuple(p.shift_range),
                   clip=tuple(p.clip) if p.clip is not None else None,
                   window_fraction_range=tuple(p.window_fraction_range),
                   enabled=frozenset(p.enabled))

    def with_families(self, *families):
        return AugmentPolicy(**{**self.__dict__, 'enabled': frozenset(families)})

    def resolved_roll_max(self, W):
        return int(math.ceil(0.25 * W)) if self.roll_max is None else int(self.roll_max)


@dataclass(frozen=True, eq=False)
class ViewPair:
    view_a: FrameSequence
    view_b: FrameSequence
    source_index: int = -1

    def __post_init__(self):
        if self.view_a.shape != self.view_b.shape:
            raise ParameterError(
                f'ViewPair: views differ in shape {self.view_a.shape} vs {self.view_b.shape}')


# ----------------------------------------------------------------------
def _data(seq):
    return seq.data if isinstance(seq, FrameSequence) else np.asarray(seq, dtype=np.float64)


def crop_resize(seq, top, left, h, w):
    """ Cut the h x w window at (top, left) and resize it bilinearly to H x W.

    Sampling is corner aligned: output pixel 0 maps to the first window
    pixel and output pixel H - 1 to the last.
    """
    data = _data(seq)
    T, C, H, W = data.shape
    if h < 1 or w < 1:
        raise ParameterError(f'crop window {h}x{w} is smaller than 1x1')
    if top < 0 or left < 0 or top + h > H or left + w > W:
        raise ParameterError(f'crop window {h}x{w} at ({top}, {left}) exceeds {H}x{W}')
    if (h, w) == (H, W):
        return FrameSequence(data.copy())

    ys = top + np.arange(H) * ((h - 1) / (H - 1) if H > 1 else 0.)
    xs = left + np.arange(W) * ((w - 1) / (W - 1) if W > 1 else 0.)
    tt, cc, yy, xx = np.meshgrid(np.arange(T), np.arange(C), ys, xs, indexing='ij')
    out = map_coordinates(data, [tt, cc, yy, xx], order=1, mode='nearest')
    return FrameSequence(out)


def flip_horizontal(seq):
    """ Mirror the x axis, x -> W - 1 - x. """
    return FrameSequence(_data(seq)[..., ::-1].copy())


def roll(seq, dx, dy):
    """ Cyclic shift by dx columns and dy rows. """
    return FrameSequence(np.roll(_data(seq), shift=(dy, dx), axis=(2, 3)))


def scale_shift(seq, gain, shifts, clip=None):
    """ clip(data * gain + shift[c]) with one shift per polarity channel. """
    if clip is not None and clip[0] > clip[1]:
        raise ParameterError(f'clip min {clip[0]} exceeds clip max {clip[1]}')
    data = _data(seq) * gain + np.asarray(shifts, dtype=np.float64)[None, :, None, None]
    if clip is not None:
        data = np.clip(data, clip[0], clip[1])
    return FrameSequence(data)


def temporal_crop(stream, t0, length):
    """ Events with t in [t0, t0 + length), re-based to start at zero. """
    keep = (stream.t >= t0) & (stream.t < t0 + length)
    return EventStream(stream.t[keep] - t0, stream.x[keep], stream.y[keep],
                       stream.p[keep], stream.sensor_size, length)


# ----------------------------------------------------------------------
def aug_spatial(seq, rng, policy):
    """ Random resized crop, horizontal flip and cyclic roll, shared by all slices. """
    data = _data(seq)
    _, _, H, W = data.shape

    lo, hi = policy.crop_scale_range
    area = rng.uniform(lo, hi)
    h = int(round(math.sqrt(area) * H))
    w = int(round(math.sqrt(area) * W))
    if h < 1 or w < 1:
        raise ParameterError(f'crop scale {area:.3g} degenerates below 1x1 on {H}x{W}')
    top = int(rng.integers(0, H - h + 1))
    left = int(rng.integers(0, W - w + 1))
    out = crop_resize(data, top, left, h, w)

    if rng.uniform() < policy.flip_prob:
        out = flip_horizontal(out)

    r = policy.resolved_roll_max(W)
    dx, dy = rng.integers(-r, r + 1, size=2)
    if dx or dy:
        out = roll(out, int(dx), int(dy))
    return out


def aug_polarity(seq, rng, policy):
    """ Global gain and per-channel shift with optional clipping. """
    gain = rng.uniform(*policy.brightness_range)
    shifts = rng.uniform(*policy.shift_range, size=2)
    return scale_shift(seq, gain, shifts, policy.clip)


def aug_temporal(stream, rng, policy):
    """ Random temporal window of a fraction of the stream duration. """
    if stream.duration <= 0:
        raise ParameterError('aug_temporal: stream duration must be positive')
    lo, hi = policy.window_fraction_range
    if lo <= 0 or hi > 1 or lo > hi:
        raise ParameterError(f'window_fraction_range ({lo}, {hi}) must lie in (0, 1]')
    f = rng.uniform(lo, hi)
    length = min(stream.duration, max(1, int(round(f * stream.duration))))
    t0 = int(rng.integers(0, stream.duration - length + 1))
    return temporal_crop(stream, t0, length)


# ----------------------------------------------------------------------
def make_view(stream, policy, T, rng, factor=1):
    """ One augmented view: temporal crop, encode, spatial, polarity. """
    if 'temporal' in policy.enabled:
        stream = aug_temporal(stream, rng, policy)
    view = encode_frames(stream, T, normalize=True, factor=factor)
    if 'spatial' in policy.enabled:
        view = aug_spatial(view, rng, policy)
    if 'polarity' in policy.enabled:
        view = aug_polarity(view, rng, policy)
    return view


def make_view_pair(stream, policy, T, rng, rng_b=None, factor=1, source_index=-1):
    """ Two independently augmented views of one stream.

    Parameters
    ----------

    stream : EventStream

    policy : AugmentPolicy
        Needs at least one enabled family.

    T : int
        Number of time bins.

    rng : numpy.random.Generator
        Random source of view a, and of view b when ``rng_b`` is None.

    rng_b : numpy.random.Generator, optional
        Separate random source for view b.

    factor : int, optional
        Spatial sum pooling factor applied at encoding.

    Returns
    -------

    pair : ViewPair

    """
    if not policy.enabled:
        raise ParameterError('make_view_pair: at least one augmentation family must be enabled')
    view_a = make_view(stream, policy, T, rng, factor)
    view_b = make_view(stream, policy, T, rng if rng_b is None else rng_b, factor)
    return ViewPair(view_a, view_b, source_index)


def view_rngs(seed, sample_index, *stream_keys):
    """ The two per-view generators seeded from (seed, sample, keys, view). """
    return tuple(np.random.default_rng([seed, *stream_keys, sample_index, view])
                 for view in (0, 1))
