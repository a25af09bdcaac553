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

""" NT-Xent contrastive objective with time-averaged and per-timestep
aggregation of spiking embeddings.

Embedding batches use the paired layout: rows 2k and 2k+1 are the two
views of sample k.
"""

import logging

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .exceptions import ShapeError, ParameterError, ConfigurationError

logger = logging.getLogger(__name__)

LOSS_STRATEGIES = ('mean', 'temporal')

# ----------------------------------------------------------------------
def _as_tensor(z):
    return z if isinstance(z, Tensor) else Tensor(np.asarray(z, dtype=np.float64))


def _check_batch(z):
    if z.ndim != 2 or z.shape[0] < 2 or z.shape[0] % 2:
        raise ShapeError(f'expected a paired 2N x D embedding batch, got {z.shape}')


def positive_index(n_rows):
    """ Row index of the positive partner in the paired layout. """
    return np.arange(n_rows) ^ 1


def interleave(z_a, z_b):
    """ Paired 2N x D layout from the two N x D view batches. """
    z_a, z_b = _as_tensor(z_a), _as_tensor(z_b)
    if z_a.shape != z_b.shape or z_a.ndim != 2:
        raise ShapeError(f'interleave: view batches {z_a.shape} and {z_b.shape} differ')
    n, d = z_a.shape
    stacked = ad.concat([ad.reshape(z_a, (n, 1, d)), ad.reshape(z_b, (n, 1, d))], axis=1)
    return ad.reshape(stacked, (2 * n, d))


# ----------------------------------------------------------------------
def cosine_sim_matrix(z):
    """ Cosine similarities S[i, k] of the L2 normalized rows of ``z``. """
    z = _as_tensor(z)
    if z.ndim != 2:
        raise ShapeError(f'cosine_sim_matrix: expected a matrix, got {z.shape}')
    zn = ad.l2_normalize(z)
    return ad.matmul(zn, ad.transpose(zn))


def mean_similarity(z):
    """ Mean cosine similarity of distinct rows, 1 when all embeddings coincide. """
    s = cosine_sim_matrix(z).value
    n = s.shape[0]
    if n < 2:
        return 1.
    return float((s.sum() - np.trace(s)) / (n * (n - 1)))


def dead_embeddings(z):
    """ Number of all-zero embedding rows. """
    return ad.dead_rows(_as_tensor(z))


def nt_xent(z, tau=0.5):
    """ Normalized temperature-scaled cross entropy.

    Parameters
    ----------

    z : Tensor or array, shape (2N, D)
        Paired embedding batch.

    tau : float
        Temperature, tau > 0.

    Returns
    -------

    loss : Tensor
        Mean over all 2N anchors i of
        -log(exp(S[i, j] / tau) / sum_{k != i} exp(S[i, k] / tau))
        with j the positive partner of i.

    """
    if not tau > 0:
        raise ParameterError(f'nt_xent: temperature must be positive, got {tau}')
    z = _as_tensor(z)
    _check_batch(z)

    n_rows = z.shape[0]
    dead = dead_embeddings(z)
    if dead:
        logger.debug('--> nt_xent: %d of %d embeddings are zero', dead, n_rows)

    logits = ad.scale(cosine_sim_matrix(z), 1. / tau)
    others = ~np.eye(n_rows, dtype=bool)
    positives = np.zeros((n_rows, n_rows))
    positives[np.arange(n_rows), positive_index(n_rows)] = 1.

    denominator = ad.sum(ad.logsumexp(logits, axis=1, mask=others))
    numerator = ad.sum(ad.mul(logits, positives))
    return ad.scale(ad.sub(denominator, numerator), 1. / n_rows)


def aggregate_time_mean(z_t):
    """ (1/T) sum_t z[t] of a T x 2N x D stack, before normalization. """
    if isinstance(z_t, (list, tuple)):
        steps = [_as_tensor(z) for z in z_t]
    else:
        z_t = np.asarray(z_t, dtype=np.float64)
        if z_t.ndim != 3:
            raise ShapeError(f'aggregate_time_mean: expected T x 2N x D, got {z_t.shape}')
        steps = [Tensor(z) for z in z_t]
    if not steps:
        raise ShapeError('aggregate_time_mean: need at least one timestep')

    total = steps[0]
    for z in steps[1:]:
        total = ad.add(total, z)
    return ad.scale(total, 1. / len(steps))


def temporal_nt_xent(z_t, tau=0.5):
    """ NT-Xent at every timestep independently, averaged over T. """
    steps = list(z_t) if isinstance(z_t, (list, tuple)) else list(np.asarray(z_t, dtype=np.float64))
    if not steps:
        raise ShapeError('temporal_nt_xent: need at least one timestep')
    total = nt_xent(steps[0], tau)
    for z in steps[1:]:
        total = ad.add(total, nt_xent(z, tau))
    return ad.scale(total, 1. / len(steps))


# ----------------------------------------------------------------------
def contrastive_loss(outputs_a, outputs_b, tau=0.5, strategy='mean'):
    """ Loss of two per-timestep view embedding sequences.

    Parameters
    ----------

    outputs_a, outputs_b : list of Tensor
        Head outputs (N, D) per timestep for the first and second views.

    tau : float

    strategy : str
        ``mean`` aggregates over time then applies NT-Xent, ``temporal``
        averages the per-timestep NT-Xent values.

    Returns
    -------

    loss : Tensor

    dead : int
        Zero rows among the embeddings the loss normalized.

    """
    if strategy not in LOSS_STRATEGIES:
        raise ConfigurationError(f'unknown loss strategy {strategy!r}, expected one of {LOSS_STRATEGIES}')
    if len(outputs_a) != len(outputs_b):
        raise ShapeError('contrastive_loss: views have different numbers of timesteps')

    paired = [interleave(a, b) for a, b in zip(outputs_a, outputs_b)]
    if strategy == 'mean':
        z = aggregate_time_mean(paired)
        return nt_xent(z, tau), dead_embeddings(z)
    return temporal_nt_xent(paired, tau), int(np.sum([dead_embeddings(z) for z in paired]))
