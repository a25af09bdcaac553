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

""" Finite-difference gradient checks of the autodiff primitives, the
smooth-mode LIF recurrence and the full encoder + head + NT-Xent graph.

The error at a coordinate is |a - n| / max(|a|, |n|, 1e-6) with ``a`` the
reverse-mode and ``n`` the central difference derivative.
"""

import logging
from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .snn import make_lif_config, lif_step, build_backbone, build_projection_head, forward_sequence
from .contrastive import contrastive_loss
from .exceptions import GradcheckError, ConfigurationError

logger = logging.getLogger(__name__)

SCOPES = ('primitives', 'lif', 'full')

# ----------------------------------------------------------------------
class CheckResult(NamedTuple):
    name: str
    max_error: float
    coordinates: int
    passed: bool


def relative_error(a, n, floor=1e-6):
    return abs(a - n) / max(abs(a), abs(n), floor)


def check_function(name, f, inputs, rng, samples=6, h=1e-5, tol=1e-4):
    """ Compare ``backward`` against central differences.

    Parameters
    ----------

    name : str

    f : callable
        Maps a dict of input tensors to a scalar tensor.

    inputs : dict
        Input name to float64 array, every input is a leaf.

    rng : numpy.random.Generator
        Picks the checked coordinates.

    samples : int
        Coordinates checked per input (all of them for smaller inputs).

    Returns
    -------

    result : CheckResult

    """
    tape = Tape()
    loss = f({k: tape.leaf(v, k) for k, v in inputs.items()})
    grads = ad.backward(tape, loss)

    def evaluate(values):
        off = Tape(enabled=False)
        return float(f({k: off.constant(v) for k, v in values.items()}).value)

    worst, count = 0., 0
    for key, value in inputs.items():
        flat = rng.permutation(value.size)[:samples]
        for i in flat:
            index = np.unravel_index(i, value.shape)
            plus = {k: v.copy() for k, v in inputs.items()}
            minus = {k: v.copy() for k, v in inputs.items()}
            plus[key][index] += h
            minus[key][index] -= h
            numeric = (evaluate(plus) - evaluate(minus)) / (2 * h)
            worst = max(worst, relative_error(grads[key][index], numeric))
            count += 1

    result = CheckResult(name, worst, count, worst <= tol)
    logger.info('--> gradcheck %-24s max rel error %.3e over %d coordinates %s',
                name, worst, count, 'ok' if result.passed else 'FAILED')
    return result


def _projected(op, rng, inputs):
    """ Scalar sum(op(x) * R) with a fixed random R. """
    shape = op({k: Tensor(v) for k, v in inputs.items()}).shape
    weight = rng.normal(size=shape)
    return lambda t: ad.sum(ad.mul(op(t), weight))


def _away_from_zero(rng, shape, lo=0.1):
    return rng.choice([-1., 1.], size=shape) * rng.uniform(lo, 1., size=shape)


# ----------------------------------------------------------------------
def primitive_cases(rng):
    n = rng.normal
    mask = rng.uniform(size=(4, 5)) > 0.3
    mask[:, 0] = True
    return [
        ('add', lambda t: t['a'] + t['b'], dict(a=n(size=(3, 4)), b=n(size=(3, 4)))),
        ('sub', lambda t: t['a'] - t['b'], dict(a=n(size=(3, 4)), b=n(size=(3, 4)))),
        ('mul', lambda t: t['a'] * t['b'], dict(a=n(size=(3, 4)), b=n(size=(3, 4)))),
        ('scale', lambda t: ad.scale(t['a'], -1.7), dict(a=n(size=(5,)))),
        ('add_scalar', lambda t: ad.add_scalar(t['a'], 0.3), dict(a=n(size=(5,)))),
        ('matmul', lambda t: t['a'] @ t['b'], dict(a=n(size=(3, 4)), b=n(size=(4, 2)))),
        ('transpose', lambda t: ad.transpose(t['a']), dict(a=n(size=(3, 4)))),
        ('reshape', lambda t: ad.reshape(t['a'], (6, 2)), dict(a=n(size=(3, 4)))),
        ('add_bias', lambda t: ad.add_bias(t['x'], t['b'], axis=1),
         dict(x=n(size=(2, 3, 4, 4)), b=n(size=(3,)))),
        ('conv2d', lambda t: ad.conv2d(t['x'], t['w'], stride=1, padding=1),
         dict(x=n(size=(2, 3, 5, 5)), w=n(size=(4, 3, 3, 3)))),
        ('conv2d_stride2', lambda t: ad.conv2d(t['x'], t['w'], stride=2, padding=0),
         dict(x=n(size=(1, 2, 6, 6)), w=n(size=(3, 2, 2, 2)))),
        ('sum_pool2d', lambda t: ad.sum_pool2d(t['x'], 2), dict(x=n(size=(2, 2, 4, 4)))),
        ('avg_pool2d', lambda t: ad.avg_pool2d(t['x'], 2), dict(x=n(size=(2, 2, 4, 4)))),
        ('global_avg_pool', lambda t: ad.global_avg_pool(t['x']), dict(x=n(size=(2, 3, 4, 4)))),
        ('relu', lambda t: ad.relu(t['x']), dict(x=_away_from_zero(rng, (4, 5)))),
        ('exp', lambda t: ad.exp(t['x']), dict(x=n(size=(4, 5)))),
        ('log', lambda t: ad.log(t['x']), dict(x=rng.uniform(0.5, 2., size=(4, 5)))),
        ('l2_normalize', lambda t: ad.l2_normalize(t['x']), dict(x=n(size=(4, 5)))),
        ('concat', lambda t: ad.concat([t['a'], t['b']], axis=1),
         dict(a=n(size=(3, 2)), b=n(size=(3, 4)))),
        ('slice', lambda t: ad.slice(t['x'], 1, 3, axis=0), dict(x=n(size=(4, 3)))),
        ('sum', lambda t: ad.sum(t['x'], axis=1), dict(x=n(size=(3, 4)))),
        ('mean', lambda t: ad.mean(t['x'], axis=0), dict(x=n(size=(3, 4)))),
        ('logsumexp', lambda t: ad.logsumexp(t['x'], axis=1), dict(x=n(size=(4, 5)))),
        ('logsumexp_masked', lambda t: ad.logsumexp(t['x'], axis=1, mask=mask), dict(x=n(size=(4, 5)))),
        ('spike_surrogate', lambda t: ad.spike_surrogate(t['x'], 2., 'smooth'),
         dict(x=n(scale=0.5, size=(4, 5)))),
    ]


def check_primitives(rng, h=1e-5, tol=1e-4):
    results = []
    for name, op, inputs in primitive_cases(rng):
        results.append(check_function(name, _projected(op, rng, inputs), inputs, rng, h=h, tol=tol))
    return results


def check_lif(rng, T=4, h=1e-5, tol=1e-4):
    """ Smooth-mode LIF over T steps, gradients through the reset gate. """
    results = []
    x = rng.uniform(0., 1., size=(T, 3, 4))
    weight = rng.normal(size=(T, 3, 5))
    for reset in ('reset_then_decay', 'literal'):
        cfg = make_lif_config(beta=0.8, v_th=1.0, surrogate_alpha=2.0, mode='smooth',
                              reset=reset, detach_reset=False)

        def f(t, cfg=cfg):
            state, loss = None, 0.
            for step in range(T):
                current = ad.add_bias(ad.matmul(Tensor(x[step]), t['w']), t['b'], axis=1)
                spikes, state = lif_step(current, state, cfg)
                loss = ad.add(loss, ad.sum(ad.mul(spikes, weight[step])))
            return loss

        inputs = dict(w=rng.normal(scale=0.8, size=(4, 5)), b=rng.normal(scale=0.3, size=(5,)))
        results.append(check_function(f'lif_{reset}', f, inputs, rng, samples=10, h=h, tol=tol))
    return results


def check_full(rng, backbone='mini_sew', T=2, batch=2, h=1e-5, tol=1e-4):
    """ Encoder + projection head + NT-Xent in smooth mode. """
    lif = make_lif_config(mode='smooth', detach_reset=False)
    shape = (T, 2, 8, 8)
    encoder = build_backbone(backbone, shape, seed=int(rng.integers(1 << 31)), lif=lif)
    head = build_projection_head(encoder.feature_dim, 8, seed=int(rng.integers(1 << 31)), lif=lif)
    view_a = rng.uniform(0., 1., size=(batch,) + shape)
    view_b = rng.uniform(0., 1., size=(batch,) + shape)
    names = sorted(encoder.params)

    def f(t):
        tape = next(v.tape for v in t.values())
        enc = {k: t[k] for k in names}
        out = {}
        for key, frames in (('a', view_a), ('b', view_b)):
            states = [{}, {}]
            steps = []
            for step in range(T):
                feat = encoder.step(tape.constant(frames[:, step]), enc, states[0])
                steps.append(head.step(feat, t, states[1]))
            out[key] = steps
        loss, _ = contrastive_loss(out['a'], out['b'], tau=0.5)
        return loss

    inputs = {**encoder.params, **head.params}
    inputs = {k: v.copy() for k, v in inputs.items()}
    return [check_function(f'full_{backbone}', f, inputs, rng, samples=2, h=h, tol=tol)]


# ----------------------------------------------------------------------
def run_gradcheck(scope='primitives', seed=0, h=1e-5, tol=1e-4):
    """ Run one suite and return its results. """
    if scope not in SCOPES:
        raise ConfigurationError(f'unknown gradcheck scope {scope!r}, expected one of {SCOPES}')
    rng = np.random.default_rng(seed)
    if scope == 'primitives':
        return check_primitives(rng, h, tol)
    if scope == 'lif':
        return check_lif(rng, h=h, tol=tol)
    return check_full(rng, h=h, tol=tol)


def assert_passed(results):
    failed = [r for r in results if not r.passed]
    if failed:
        raise GradcheckError(
            'finite-difference check failed for '
            + ', '.join(f'{r.name} ({r.max_error:.3e})' for r in failed))
