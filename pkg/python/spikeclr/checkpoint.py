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

""" Encoder checkpoints.

Text format ``SPKC1``::

    SPKC1
    topology.kind = 'mini_sew'
    ...
    lif.beta = 0.9
    ...
    tensor stem.w 16 2 3 3
    <all values on one line, repr floats>
    ...
    end

Floats are written with ``repr`` so reading back is bit-exact.
"""

import logging

import numpy as np

from .ParameterCollection import ParameterCollection
from .snn import rebuild, make_lif_config
from .exceptions import CheckpointError, ConfigurationError

logger = logging.getLogger(__name__)

MAGIC = 'SPKC1'

# ----------------------------------------------------------------------
def dumps(model):
    header = ParameterCollection(topology=model.topology, lif=model.lif).to_document()
    lines = [MAGIC, header.rstrip('\n')]
    for name in sorted(model.params):
        value = model.params[name]
        lines.append(' '.join(['tensor', name] + [str(n) for n in value.shape]))
        lines.append(' '.join(repr(float(v)) for v in value.ravel()))
    lines.append('end')
    return '\n'.join(lines) + '\n'


def save_checkpoint(model, path):
    """ Write the topology, LIF parameters and weights of ``model``. """
    text = dumps(model)
    try:
        with open(path, 'w') as fd:
            fd.write(text)
    except OSError as e:
        raise OSError(f'cannot write checkpoint {path}: {e.strerror}') from e
    logger.debug('--> save_checkpoint: %s, %d tensors', path, len(model.params))


def loads(text, source='<checkpoint>'):
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise CheckpointError(f'{source}: not a {MAGIC} checkpoint')

    idx = 1
    header = []
    while idx < len(lines) and not lines[idx].startswith('tensor ') and lines[idx] != 'end':
        header.append(lines[idx])
        idx += 1

    try:
        meta = ParameterCollection.from_document('\n'.join(header), source)
        lif = make_lif_config(**meta.lif.dict())
        model = rebuild(meta.topology, lif)
    except (ConfigurationError, AttributeError, TypeError) as e:
        raise CheckpointError(f'{source}: invalid topology section: {e}') from None

    params = {}
    while idx < len(lines) and lines[idx] != 'end':
        fields = lines[idx].split()
        if len(fields) < 2 or fields[0] != 'tensor' or idx + 1 >= len(lines):
            raise CheckpointError(f'{source}:{idx + 1}: expected a tensor header')
        name, shape = fields[1], tuple(int(n) for n in fields[2:])
        values = np.array([float(v) for v in lines[idx + 1].split()], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise CheckpointError(
                f'{source}: tensor {name} has {values.size} values for shape {shape}')
        params[name] = values.reshape(shape)
        idx += 2
    if idx >= len(lines):
        raise CheckpointError(f'{source}: truncated, missing end marker')

    expected = {k: v.shape for k, v in model.params.items()}
    found = {k: v.shape for k, v in params.items()}
    if expected != found:
        raise CheckpointError(
            f'{source}: tensors do not match the {meta.topology.kind} topology '
            f'(missing {sorted(set(expected) - set(found))}, '
            f'unexpected {sorted(set(found) - set(expected))})')
    model.params = params
    return model


def load_checkpoint(path):
    """ Rebuild the model stored at ``path``. """
    try:
        with open(path) as fd:
            text = fd.read()
    except FileNotFoundError:
        raise CheckpointError(f'checkpoint not found: {path}') from None
    except OSError as e:
        raise OSError(f'cannot read checkpoint {path}: {e.strerror}') from e
    return loads(text, path)


def check_topology(model, input_shape):
    """ Raise CheckpointError unless ``model`` accepts (T, 2, H, W) frames. """
    expected = tuple(model.topology.input_shape)
    if tuple(input_shape[1:]) != tuple(expected[1:]):
        raise CheckpointError(
            f'encoder expects {expected[1:]} frames, dataset gives {tuple(input_shape[1:])}')
