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

""" Dense encodings of event streams: normalized two-channel event
histograms, bilinear voxel grids and spatial sum pooling.

A ``FrameSequence`` holds a ``T x 2 x H x W`` float64 array; channel 0
carries positive polarity, channel 1 negative polarity.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, ShapeError

# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class FrameSequence:

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 4 or data.shape[1] != 2:
            raise ShapeError(f'FrameSequence: expected T x 2 x H x W, got {data.shape}')
        object.__setattr__(self, 'data', data)

    @property
    def T(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, FrameSequence):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    __hash__ = None


# ----------------------------------------------------------------------
def time_bins(t, duration, T):
    """ Bin index floor(t T / duration), clamped to T - 1. """
    if duration <= 0:
        return np.zeros(len(t), dtype=np.int64)
    return np.minimum(np.asarray(t, dtype=np.int64) * T // duration, T - 1)


def normalize_slices(data):
    """ Divide every time slice by its own maximum; all-zero slices stay zero. """
    data = np.array(data, dtype=np.float64)
    peak = data.reshape(data.shape[0], -1).max(axis=1)
    nonzero = peak > 0
    data[nonzero] /= peak[nonzero][:, None, None, None]
    return data


def encode_histogram(stream, T, normalize=True):
    """ Per-bin, per-polarity event count frames.

    Parameters
    ----------

    stream : EventStream

    T : int
        Number of equal time bins over [0, duration).

    normalize : bool
        Divide each time slice by its maximum.

    Returns
    -------

    frames : FrameSequence

    """
    if T < 1:
        raise ConfigurationError(f'encode_histogram: T must be >= 1, got {T}')
    W, H = stream.sensor_size
    data = np.zeros((T, 2, H, W))
    b = time_bins(stream.t, stream.duration, T)
    c = (stream.p < 0).astype(np.int64)
    np.add.at(data, (b, c, stream.y, stream.x), 1.)
    if normalize:
        data = normalize_slices(data)
    return FrameSequence(data)


def encode_voxel_grid(stream, T):
    """ Bilinear-in-time voxel grid, positive and negative mass split by channel.

    Each event at normalized time t* = t (T - 1) / duration puts weight
    1 - |t* - b| into the two bins b adjacent to t*.
    """
    if T < 2:
        raise ConfigurationError(f'encode_voxel_grid: T must be >= 2, got {T}')
    W, H = stream.sensor_size
    data = np.zeros((T, 2, H, W))
    if len(stream) == 0:
        return FrameSequence(data)

    ts = stream.t * (T - 1) / stream.duration
    ts = np.minimum(ts, T - 1)
    b0 = np.minimum(np.floor(ts).astype(np.int64), T - 2)
    w1 = ts - b0
    w0 = 1. - w1
    c = (stream.p < 0).astype(np.int64)

    np.add.at(data, (b0, c, stream.y, stream.x), w0)
    np.add.at(data, (b0 + 1, c, stream.y, stream.x), w1)
    return FrameSequence(data)


def voxel_weights(t, duration, T):
    """ (bin, weight) pairs of the voxel kernel for single timestamps. """
    ts = min(t * (T - 1) / duration, T - 1)
    b0 = min(int(np.floor(ts)), T - 2)
    w1 = ts - b0
    return [(b0, 1. - w1), (b0 + 1, w1)]


def downsample(seq, factor):
    """ Non-overlapping factor x factor sum pooling of every slice. """
    data = seq.data if isinstance(seq, FrameSequence) else np.asarray(seq)
    if factor < 1:
        raise ConfigurationError(f'downsample: factor must be >= 1, got {factor}')
    T, C, H, W = data.shape
    if H % factor or W % factor:
        raise ShapeError(f'downsample: {H}x{W} not divisible by factor {factor}')
    if factor == 1:
        return FrameSequence(data.copy())
    out = data.reshape(T, C, H // factor, factor, W // factor, factor).sum(axis=(3, 5))
    return FrameSequence(out)


def encode_frames(stream, T, normalize=True, factor=1):
    """ Histogram encoding at reduced resolution: count, pool, then normalize. """
    seq = encode_histogram(stream, T, normalize=False)
    if factor != 1:
        seq = downsample(seq, factor)
    if normalize:
        seq = FrameSequence(normalize_slices(seq.data))
    return seq
