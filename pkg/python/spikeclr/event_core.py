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

""" Event data model, event file readers/writers and the synthetic
moving-shapes dataset generator.

Streams keep their events in four parallel integer arrays (``t``, ``x``,
``y``, ``p``) that are made read-only on construction. Iterating a stream
yields ``Event`` tuples.
"""

# ----------------------------------------------------------------------

import os
import csv
import logging
from typing import NamedTuple
from dataclasses import dataclass, field

import numpy as np

# ----------------------------------------------------------------------

from .exceptions import (ParseError, BoundsError, TruncationError,
                         ConfigurationError, DataError)

logger = logging.getLogger(__name__)

CANONICAL_MAGIC = 'EVT1'
NMNIST_SENSOR = (34, 34)
MICRO_STEP_US = 100

# ----------------------------------------------------------------------
class Event(NamedTuple):
    t: int
    x: int
    y: int
    p: int


# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class EventStream:

    """ Time ordered events of one recording.

    Parameters
    ----------

    t, x, y, p : array_like of int
        Timestamps (us), pixel columns, pixel rows and polarities (+1/-1).

    sensor_size : (int, int)
        Sensor width and height (W, H).

    duration : int
        Recording length in us, every timestamp is smaller.

    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    sensor_size: tuple
    duration: int

    def __post_init__(self):
        arrays = {}
        for name in ('t', 'x', 'y', 'p'):
            a = np.array(getattr(self, name), dtype=np.int64).reshape(-1)
            a.setflags(write=False)
            arrays[name] = a
            object.__setattr__(self, name, a)

        object.__setattr__(self, 'sensor_size', tuple(int(s) for s in self.sensor_size))
        object.__setattr__(self, 'duration', int(self.duration))

        n = len(arrays['t'])
        if any(len(a) != n for a in arrays.values()):
            raise ValueError('EventStream: field arrays differ in length')
        check_bounds(arrays['x'], arrays['y'], self.sensor_size)
        if not np.all(np.isin(arrays['p'], (-1, 1))):
            raise ValueError('EventStream: polarity must be +1 or -1')
        if n:
            if np.any(arrays['t'] < 0):
                raise ValueError('EventStream: negative timestamp')
            if np.any(np.diff(arrays['t']) < 0):
                raise ValueError('EventStream: events not sorted by time')
            if arrays['t'][-1] >= self.duration:
                raise BoundsError(
                    f'EventStream: timestamp {arrays["t"][-1]} >= duration {self.duration}')

    @classmethod
    def from_events(cls, events, sensor_size, duration=None):
        """ Build a stream from (t, x, y, p) records, sorting stably by t. """
        ev = np.array([tuple(e) for e in events], dtype=np.int64).reshape(-1, 4)
        order = np.argsort(ev[:, 0], kind='stable')
        ev = ev[order]
        if duration is None:
            duration = int(ev[-1, 0]) + 1 if len(ev) else 0
        return cls(ev[:, 0], ev[:, 1], ev[:, 2], ev[:, 3], sensor_size, duration)

    @classmethod
    def empty(cls, sensor_size, duration=0):
        return cls([], [], [], [], sensor_size, duration)

    def __len__(self):
        return len(self.t)

    def __iter__(self):
        for rec in zip(self.t.tolist(), self.x.tolist(), self.y.tolist(), self.p.tolist()):
            yield Event(*rec)

    def __eq__(self, other):
        if not isinstance(other, EventStream):
            return NotImplemented
        return (self.sensor_size == other.sensor_size
                and self.duration == other.duration
                and all(np.array_equal(getattr(self, n), getattr(other, n))
                        for n in ('t', 'x', 'y', 'p')))

    __hash__ = None

    @property
    def events(self):
        return list(self)


# ----------------------------------------------------------------------
@dataclass
class LabeledEventDataset:

    """ Labeled event streams sharing one sensor size. """

    samples: list
    num_classes: int
    name: str = 'dataset'

    def __post_init__(self):
        if self.num_classes < 1:
            raise DataError(f'{self.name}: num_classes must be positive')
        sizes = {s.sensor_size for s, _ in self.samples}
        if len(sizes) > 1:
            raise DataError(f'{self.name}: samples have different sensor sizes {sorted(sizes)}')
        for idx, (_, label) in enumerate(self.samples):
            if not 0 <= label < self.num_classes:
                raise DataError(
                    f'{self.name}: sample {idx} has class id {label} '
                    f'outside [0, {self.num_classes})')

    def __len__(self):
        return len(self.samples)

    @property
    def labels(self):
        return np.array([label for _, label in self.samples], dtype=np.int64)

    @property
    def streams(self):
        return [s for s, _ in self.samples]

    @property
    def sensor_size(self):
        return self.samples[0][0].sensor_size if self.samples else None

    def subset(self, indices, name=None):
        return LabeledEventDataset(
            [self.samples[i] for i in indices], self.num_classes,
            name if name is not None else self.name)


# ----------------------------------------------------------------------
def check_bounds(x, y, sensor_size, path=None):
    W, H = sensor_size
    bad = (x < 0) | (x >= W) | (y < 0) | (y >= H)
    if np.any(bad):
        idx = int(np.argmax(bad))
        where = f'{path}: ' if path is not None else ''
        raise BoundsError(
            f'{where}event {idx} at (x={int(x[idx])}, y={int(y[idx])}) '
            f'outside sensor {W}x{H}')


# ----------------------------------------------------------------------
def read_canonical(path, sensor_size=None):
    """ Read a canonical ``.evt`` event file.

    The header line ``EVT1 <W> <H> [<duration_us>]`` is optional when
    ``sensor_size`` is given. Without a declared duration it defaults to the
    largest timestamp plus one. Unsorted events are sorted stably by time.

    Parameters
    ----------

    path : str
        File to read.

    sensor_size : (int, int), optional
        Sensor size for header-less files.

    Returns
    -------

    stream : EventStream

    """
    duration = None
    rows = []
    try:
        with open(path, 'r') as fd:
            lines = fd.read().splitlines()
    except OSError as e:
        raise OSError(f'{path}: {e.strerror or e}') from e

    for lineno, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields:
            continue
        if fields[0] == CANONICAL_MAGIC:
            if rows or lineno != 1:
                raise ParseError('header must be the first line', path, lineno)
            if len(fields) not in (3, 4):
                raise ParseError(f'malformed header {line!r}', path, lineno)
            try:
                sensor_size = (int(fields[1]), int(fields[2]))
                if len(fields) == 4:
                    duration = int(fields[3])
            except ValueError:
                raise ParseError(f'malformed header {line!r}', path, lineno)
            continue
        if len(fields) != 4:
            raise ParseError(f'expected "t x y p", got {line!r}', path, lineno)
        try:
            t, x, y, p = (int(f) for f in fields)
        except ValueError:
            raise ParseError(f'non-integer field in {line!r}', path, lineno)
        if p not in (-1, 1):
            raise ParseError(f'polarity must be 1 or -1, got {p}', path, lineno)
        if t < 0:
            raise ParseError(f'negative timestamp {t}', path, lineno)
        rows.append((t, x, y, p))

    if sensor_size is None:
        if rows:
            raise ParseError('missing EVT1 header and no sensor size given', path, 1)
        sensor_size = (0, 0)

    ev = np.array(rows, dtype=np.int64).reshape(-1, 4)
    check_bounds(ev[:, 1], ev[:, 2], sensor_size, path)

    order = np.argsort(ev[:, 0], kind='stable')
    ev = ev[order]

    if duration is None:
        duration = int(ev[-1, 0]) + 1 if len(ev) else 0
    elif len(ev) and ev[-1, 0] >= duration:
        raise BoundsError(f'{path}: timestamp {ev[-1, 0]} >= declared duration {duration}')

    return EventStream(ev[:, 0], ev[:, 1], ev[:, 2], ev[:, 3], sensor_size, duration)


# ----------------------------------------------------------------------
def write_canonical(stream, path):
    """ Write ``stream`` in the canonical text format, header included. """
    W, H = stream.sensor_size
    lines = [f'{CANONICAL_MAGIC} {W} {H} {stream.duration}']
    lines += [f'{t} {x} {y} {p}' for t, x, y, p in stream]
    try:
        with open(path, 'w') as fd:
            fd.write('\n'.join(lines) + '\n')
    except OSError as e:
        raise OSError(f'{path}: {e.strerror or e}') from e


# ----------------------------------------------------------------------
def decode_nmnist(buffer):
    """ Decode N-MNIST 40-bit records into (t, x, y, p) arrays.

    Byte 0 is x, byte 1 is y, bit 7 of byte 2 the polarity and the
    remaining 23 bits the big-endian timestamp in us.
    """
    raw = np.frombuffer(buffer, dtype=np.uint8)
    if raw.size % 5:
        raise TruncationError(
            f'N-MNIST data of {raw.size} bytes is not a multiple of 5 bytes')
    rec = raw.reshape(-1, 5).astype(np.int64)
    x = rec[:, 0]
    y = rec[:, 1]
    p = np.where(rec[:, 2] >> 7, 1, -1)
    t = ((rec[:, 2] & 0x7F) << 16) | (rec[:, 3] << 8) | rec[:, 4]
    return t, x, y, p


def read_nmnist_bin(path):
    """ Read an N-MNIST ``.bin`` recording on the fixed 34x34 sensor. """
    try:
        with open(path, 'rb') as fd:
            buffer = fd.read()
    except OSError as e:
        raise OSError(f'{path}: {e.strerror or e}') from e

    try:
        t, x, y, p = decode_nmnist(buffer)
    except TruncationError as e:
        raise TruncationError(f'{path}: {e}') from None

    check_bounds(x, y, NMNIST_SENSOR, path)
    order = np.argsort(t, kind='stable')
    duration = int(t.max()) + 1 if len(t) else 0
    return EventStream(t[order], x[order], y[order], p[order], NMNIST_SENSOR, duration)


# ----------------------------------------------------------------------
def shape_masks(size):
    """ Binary masks of the ten synthetic shape classes on a size x size grid. """
    s = size
    m = s // 2
    eye = np.eye(s, dtype=bool)
    masks = []

    def blank():
        return np.zeros((s, s), dtype=bool)

    bar = blank(); bar[m, :] = True
    masks.append(('bar', bar))

    box = blank(); box[0, :] = box[-1, :] = box[:, 0] = box[:, -1] = True
    masks.append(('box', box))

    masks.append(('cross', eye | eye[:, ::-1]))
    masks.append(('diagonal', eye.copy()))

    tee = blank(); tee[0, :] = True; tee[:, m] = True
    masks.append(('tee', tee))

    ell = blank(); ell[:, 0] = True; ell[-1, :] = True
    masks.append(('ell', ell))

    vbar = blank(); vbar[:, m] = True
    masks.append(('vbar', vbar))

    plus = blank(); plus[m, :] = True; plus[:, m] = True
    masks.append(('plus', plus))

    masks.append(('antidiagonal', eye[:, ::-1].copy()))

    block = blank(); block[m // 2:m // 2 + m + 1, m // 2:m // 2 + m + 1] = True
    masks.append(('block', block))

    return masks


SHAPE_NAMES = [name for name, _ in shape_masks(5)]


def _occupancy(mask, pos, sensor_size):
    W, H = sensor_size
    s = mask.shape[0]
    occ = np.zeros((H, W), dtype=bool)
    x0, y0 = pos
    ys, xs = np.nonzero(mask)
    xs = xs + x0
    ys = ys + y0
    keep = (xs >= 0) & (xs < W) & (ys >= 0) & (ys < H)
    occ[ys[keep], xs[keep]] = True
    return occ


def shape_stream(mask, start, stop, sensor_size, duration):
    """ Events of ``mask`` translating linearly from ``start`` to ``stop``.

    The occupancy is sampled every ``MICRO_STEP_US``; pixels entering the
    shape emit +1 events and pixels leaving it emit -1 events. Step 0
    compares against an empty sensor, which produces the appearance events.
    """
    n_steps = max(1, -(-duration // MICRO_STEP_US))
    start = np.asarray(start, dtype=float)
    stop = np.asarray(stop, dtype=float)

    W, H = sensor_size
    prev = np.zeros((H, W), dtype=bool)
    t, x, y, p = [], [], [], []
    for k in range(n_steps):
        frac = k / (n_steps - 1) if n_steps > 1 else 0.
        pos = np.rint(start + frac * (stop - start)).astype(int)
        occ = _occupancy(mask, pos, sensor_size)
        for pol, changed in ((1, occ & ~prev), (-1, prev & ~occ)):
            ys, xs = np.nonzero(changed)
            t.append(np.full(len(xs), k * MICRO_STEP_US))
            x.append(xs)
            y.append(ys)
            p.append(np.full(len(xs), pol))
        prev = occ

    cat = lambda a: np.concatenate(a) if a else np.zeros(0, dtype=np.int64)
    t, x, y, p = cat(t), cat(x), cat(y), cat(p)
    order = np.argsort(t, kind='stable')
    return EventStream(t[order], x[order], y[order], p[order], sensor_size, duration)


def synth_moving_shapes(num_classes, samples_per_class, sensor=(16, 16),
                        duration=10000, seed=0, class_offset=0, motion=1.0,
                        name=None):
    """ Generate a labeled dataset of translating shapes.

    Parameters
    ----------

    num_classes : int
        Number of shape classes, 2 to 10.

    samples_per_class : int
        Streams generated per class.

    sensor : (int, int)
        Sensor (W, H), at least 8x8.

    duration : int
        Stream duration in us.

    seed : int
        Seed of the trajectories, the dataset is a pure function of it.

    class_offset : int, optional
        First shape used, which gives datasets with disjoint classes.

    motion : float, optional
        Scale of the per-sample displacement, 0 gives static shapes.

    Returns
    -------

    dataset : LabeledEventDataset

    """
    if not 2 <= num_classes <= 10 or class_offset < 0 or class_offset + num_classes > 10:
        raise ConfigurationError(
            f'num_classes must lie in [2, 10] with class_offset + num_classes <= 10, '
            f'got num_classes={num_classes}, class_offset={class_offset}')
    W, H = sensor
    if W < 8 or H < 8:
        raise ConfigurationError(f'sensor must be at least 8x8, got {W}x{H}')
    if samples_per_class < 1 or duration < 1:
        raise ConfigurationError('samples_per_class and duration must be positive')

    size = max(3, min(W, H) // 3)
    if size % 2 == 0:
        size += 1
    masks = shape_masks(size)

    samples = []
    for label in range(num_classes):
        mask = masks[class_offset + label][1]
        for idx in range(samples_per_class):
            rng = np.random.default_rng([seed, class_offset + label, idx])
            start = rng.uniform([0, 0], [W - size, H - size])
            stop = rng.uniform([0, 0], [W - size, H - size])
            stop = start + motion * (stop - start)
            samples.append((shape_stream(mask, start, stop, (W, H), duration), label))

    if name is None:
        name = f'shapes{class_offset}-{class_offset + num_classes - 1}'
    logger.debug('--> synth_moving_shapes: %d samples, %d classes, seed %d',
                 len(samples), num_classes, seed)
    return LabeledEventDataset(samples, num_classes, name)


# ----------------------------------------------------------------------
def write_dataset_dir(dataset, path):
    """ Write one canonical file per sample plus ``labels.csv``. """
    os.makedirs(path, exist_ok=True)
    width = len(str(max(len(dataset) - 1, 0)))
    rows = []
    for idx, (stream, label) in enumerate(dataset.samples):
        fname = f'sample_{idx:0{width}d}.evt'
        write_canonical(stream, os.path.join(path, fname))
        rows.append((fname, label))

    with open(os.path.join(path, 'labels.csv'), 'w', newline='') as fd:
        writer = csv.writer(fd, lineterminator='\n')
        writer.writerow(['filename', 'class_id'])
        writer.writerows(rows)
    return rows


def read_dataset_dir(path, num_classes=None, name=None):
    """ Read a directory written by ``write_dataset_dir``. """
    manifest = os.path.join(path, 'labels.csv')
    if not os.path.isfile(manifest):
        raise DataError(f'{path}: missing labels.csv')

    samples = []
    with open(manifest, newline='') as fd:
        for row in csv.DictReader(fd):
            stream = read_canonical(os.path.join(path, row['filename']))
            samples.append((stream, int(row['class_id'])))

    if num_classes is None:
        num_classes = max((label for _, label in samples), default=0) + 1
    if name is None:
        name = os.path.basename(os.path.normpath(path))
    return LabeledEventDataset(samples, num_classes, name)
