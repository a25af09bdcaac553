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

""" Reverse-mode automatic differentiation on dense float64 arrays.

A ``Tape`` records one node per primitive evaluation; the node keeps the
ids of its differentiable inputs and a closure mapping the output
gradient to input gradients. Nodes are appended as they are computed, so
inputs always precede their consumers and ``backward`` is a single
reverse sweep. Unrolling a spiking network over T steps on one tape gives
backpropagation through time.

Broadcasting is limited to scalar operands and per-channel bias.
"""

# ----------------------------------------------------------------------

from typing import NamedTuple, Callable, Optional

import numpy as np
from scipy.special import logsumexp as _logsumexp

# ----------------------------------------------------------------------

from .exceptions import ShapeError, ContractError, ParameterError
from .numpy_compat import np_sliding_window_view

# ----------------------------------------------------------------------
class Node(NamedTuple):
    op: str
    parents: tuple
    vjp: Optional[Callable]
    key: Optional[str] = None


class Tape(object):

    """ Record of primitive evaluations for reverse-mode differentiation.

    Parameters
    ----------

    enabled : bool, optional
        A disabled tape records nothing, every tensor it produces is a
        constant. Used for evaluation-only forward passes.

    """

    def __init__(self, enabled=True):
        self.enabled = enabled
        self.nodes = []
        self.leaf_shapes = {}

    def __len__(self):
        return len(self.nodes)

    def leaf(self, value, key):
        """ Trainable input, its gradient is returned by ``backward`` under ``key``. """
        value = np.asarray(value, dtype=np.float64)
        if not self.enabled:
            return Tensor(value, self)
        self.nodes.append(Node('leaf', (), None, key))
        self.leaf_shapes[key] = value.shape
        return Tensor(value, self, len(self.nodes) - 1)

    def constant(self, value):
        return Tensor(np.asarray(value, dtype=np.float64), self)

    def record(self, op, value, inputs, vjp):
        parents = tuple(t.node if isinstance(t, Tensor) else None for t in inputs)
        if not self.enabled or all(p is None for p in parents):
            return Tensor(value, self)
        self.nodes.append(Node(op, parents, vjp))
        return Tensor(value, self, len(self.nodes) - 1)

    def leaves(self):
        return {n.key: i for i, n in enumerate(self.nodes) if n.op == 'leaf'}


class Tensor(object):

    """ Array value with an optional node on a tape.

    ``node`` is None for constants, which receive no gradient.
    """

    __slots__ = ('value', 'tape', 'node')
    __array_priority__ = 1000

    def __init__(self, value, tape=None, node=None):
        self.value = value
        self.tape = tape
        self.node = node

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    @property
    def size(self):
        return self.value.size

    @property
    def requires_grad(self):
        return self.node is not None

    def __repr__(self):
        return f'Tensor(shape={self.shape}, node={self.node})'

    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __neg__(self): return scale(self, -1.)
    def __matmul__(self, other): return matmul(self, other)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError('division by a tensor is not a primitive')
        return scale(self, 1. / other)


# ----------------------------------------------------------------------
def _value(x):
    return x.value if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def _tape(*xs):
    tapes = [x.tape for x in xs if isinstance(x, Tensor) and x.tape is not None]
    for tape in tapes:
        if tape.enabled:
            return tape
    return tapes[0] if tapes else Tape(enabled=False)


def _record(op, value, inputs, vjp):
    return _tape(*inputs).record(op, value, inputs, vjp)


def _unbroadcast(g, shape):
    return np.sum(g) if shape == () else g


def _check_elementwise(op, a, b):
    if a.shape != b.shape and a.shape != () and b.shape != ():
        raise ShapeError(f'{op}: operand shapes {a.shape} and {b.shape} differ')


# ----------------------------------------------------------------------
def add(a, b):
    av, bv = _value(a), _value(b)
    _check_elementwise('add', av, bv)
    return _record('add', av + bv, (a, b), lambda g: (
        _unbroadcast(g, av.shape), _unbroadcast(g, bv.shape)))


def sub(a, b):
    av, bv = _value(a), _value(b)
    _check_elementwise('sub', av, bv)
    return _record('sub', av - bv, (a, b), lambda g: (
        _unbroadcast(g, av.shape), -_unbroadcast(g, bv.shape)))


def mul(a, b):
    av, bv = _value(a), _value(b)
    _check_elementwise('mul', av, bv)
    return _record('mul', av * bv, (a, b), lambda g: (
        _unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)))


def scale(x, c):
    c = float(c)
    return _record('scale', _value(x) * c, (x,), lambda g: (g * c,))


def add_scalar(x, c):
    c = float(c)
    return _record('add_scalar', _value(x) + c, (x,), lambda g: (g,))


def matmul(a, b):
    av, bv = _value(a), _value(b)
    if av.ndim != 2 or bv.ndim != 2 or av.shape[1] != bv.shape[0]:
        raise ShapeError(f'matmul: cannot multiply {av.shape} by {bv.shape}')
    return _record('matmul', av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def transpose(x):
    xv = _value(x)
    if xv.ndim != 2:
        raise ShapeError(f'transpose: expected a matrix, got {xv.shape}')
    return _record('transpose', xv.T.copy(), (x,), lambda g: (g.T,))


def reshape(x, shape):
    xv = _value(x)
    try:
        out = xv.reshape(shape)
    except ValueError:
        raise ShapeError(f'reshape: cannot reshape {xv.shape} to {tuple(shape)}') from None
    return _record('reshape', out, (x,), lambda g: (g.reshape(xv.shape),))


def add_bias(x, b, axis=1):
    """ x + b broadcast along ``axis`` (per-channel bias). """
    xv, bv = _value(x), _value(b)
    if bv.ndim != 1 or xv.ndim <= axis or xv.shape[axis] != bv.shape[0]:
        raise ShapeError(f'add_bias: bias {bv.shape} does not match axis {axis} of {xv.shape}')
    shape = [1] * xv.ndim
    shape[axis] = -1
    other = tuple(i for i in range(xv.ndim) if i != axis)
    return _record('add_bias', xv + bv.reshape(shape), (x, b),
                   lambda g: (g, g.sum(axis=other)))


# ----------------------------------------------------------------------
def conv2d(x, w, stride=1, padding=0):
    """ Cross-correlation of a (B, C, H, W) input with (O, C, k, k) kernels. """
    xv, wv = _value(x), _value(w)
    if xv.ndim != 4 or wv.ndim != 4 or xv.shape[1] != wv.shape[1]:
        raise ShapeError(f'conv2d: input {xv.shape} incompatible with kernel {wv.shape}')
    if stride < 1 or padding < 0:
        raise ShapeError(f'conv2d: invalid stride {stride} or padding {padding}')

    B, C, H, W = xv.shape
    O, _, kh, kw = wv.shape
    Ho = (H + 2 * padding - kh) // stride + 1
    Wo = (W + 2 * padding - kw) // stride + 1
    if Ho < 1 or Wo < 1:
        raise ShapeError(f'conv2d: kernel {kh}x{kw} larger than padded input {xv.shape}')

    xp = np.pad(xv, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = np_sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * Ho * Wo, C * kh * kw)
    wmat = wv.reshape(O, -1)
    out = (cols @ wmat.T).reshape(B, Ho, Wo, O).transpose(0, 3, 1, 2)

    def vjp(g):
        g2 = g.transpose(0, 2, 3, 1).reshape(B * Ho * Wo, O)
        gw = (g2.T @ cols).reshape(wv.shape)
        dcols = (g2 @ wmat).reshape(B, Ho, Wo, C, kh, kw).transpose(0, 3, 1, 2, 4, 5)
        dxp = np.zeros(xp.shape)
        for i in range(kh):
            for j in range(kw):
                dxp[:, :, i:i + stride * Ho:stride, j:j + stride * Wo:stride] += dcols[..., i, j]
        return dxp[:, :, padding:padding + H, padding:padding + W], gw

    return _record('conv2d', np.ascontiguousarray(out), (x, w), vjp)


def sum_pool2d(x, factor):
    xv = _value(x)
    if xv.ndim != 4 or xv.shape[2] % factor or xv.shape[3] % factor:
        raise ShapeError(f'sum_pool2d: {xv.shape} not divisible by factor {factor}')
    B, C, H, W = xv.shape
    out = xv.reshape(B, C, H // factor, factor, W // factor, factor).sum(axis=(3, 5))
    return _record('sum_pool2d', out, (x,), lambda g: (
        np.repeat(np.repeat(g, factor, axis=2), factor, axis=3),))


def avg_pool2d(x, factor):
    return scale(sum_pool2d(x, factor), 1. / factor**2)


def global_avg_pool(x):
    xv = _value(x)
    if xv.ndim != 4:
        raise ShapeError(f'global_avg_pool: expected (B, C, H, W), got {xv.shape}')
    n = xv.shape[2] * xv.shape[3]
    return _record('global_avg_pool', xv.mean(axis=(2, 3)), (x,), lambda g: (
        np.broadcast_to(g[:, :, None, None] / n, xv.shape).copy(),))


# ----------------------------------------------------------------------
def relu(x):
    xv = _value(x)
    return _record('relu', np.maximum(xv, 0.), (x,), lambda g: (g * (xv > 0),))


def exp(x):
    out = np.exp(_value(x))
    return _record('exp', out, (x,), lambda g: (g * out,))


def log(x):
    xv = _value(x)
    return _record('log', np.log(xv), (x,), lambda g: (g / xv,))


def l2_normalize(x, eps=0.):
    """ Rows of a matrix scaled to unit L2 norm.

    All-zero rows map to the first unit basis vector and pass no gradient.
    """
    xv = _value(x)
    if xv.ndim != 2:
        raise ShapeError(f'l2_normalize: expected a matrix, got {xv.shape}')
    norm = np.sqrt(np.sum(xv**2, axis=-1, keepdims=True))
    dead = norm[:, 0] <= eps
    safe = np.where(dead[:, None], 1., norm)
    out = xv / safe
    out[dead] = 0.
    out[dead, 0] = 1.

    def vjp(g):
        gx = (g - out * np.sum(g * out, axis=-1, keepdims=True)) / safe
        gx[dead] = 0.
        return (gx,)

    return _record('l2_normalize', out, (x,), vjp)


def dead_rows(x, eps=0.):
    """ Number of rows that ``l2_normalize`` treats as zero. """
    xv = _value(x)
    return int(np.sum(np.sqrt(np.sum(xv**2, axis=-1)) <= eps))


def concat(xs, axis=0):
    values = [_value(x) for x in xs]
    try:
        out = np.concatenate(values, axis=axis)
    except ValueError:
        raise ShapeError(f'concat: incompatible shapes {[v.shape for v in values]}') from None
    bounds = np.cumsum([v.shape[axis] for v in values])[:-1]
    return _record('concat', out, tuple(xs), lambda g: tuple(np.split(g, bounds, axis=axis)))


def slice(x, start, stop, axis=0):
    xv = _value(x)
    if not 0 <= start <= stop <= xv.shape[axis]:
        raise ShapeError(f'slice: [{start}, {stop}) outside axis {axis} of {xv.shape}')
    index = [np.s_[:]] * xv.ndim
    index[axis] = np.s_[start:stop]
    index = tuple(index)

    def vjp(g):
        gx = np.zeros(xv.shape)
        gx[index] = g
        return (gx,)

    return _record('slice', xv[index].copy(), (x,), vjp)


def sum(x, axis=None):
    xv = _value(x)

    def vjp(g):
        if axis is None:
            return (np.full(xv.shape, float(g)),)
        return (np.broadcast_to(np.expand_dims(g, axis), xv.shape).copy(),)

    return _record('sum', np.asarray(xv.sum(axis=axis)), (x,), vjp)


def mean(x, axis=None):
    xv = _value(x)
    n = xv.size if axis is None else xv.shape[axis]
    return scale(sum(x, axis), 1. / n)


def logsumexp(x, axis=-1, mask=None):
    """ log(sum(exp(x))) along ``axis`` over the entries where ``mask`` is True. """
    xv = _value(x)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != xv.shape:
            raise ShapeError(f'logsumexp: mask {mask.shape} does not match {xv.shape}')
        xm = np.where(mask, xv, -np.inf)
    else:
        xm = xv
    out = _logsumexp(xm, axis=axis)

    def vjp(g):
        soft = np.exp(xm - np.expand_dims(out, axis))
        return (soft * np.expand_dims(g, axis),)

    return _record('logsumexp', np.asarray(out), (x,), vjp)


# ----------------------------------------------------------------------
def spike_surrogate(x, alpha, mode='spiking'):
    """ Spike nonlinearity with the arctan surrogate derivative.

    Forward is the Heaviside step (1 at x >= 0) in ``spiking`` mode and
    arctan(pi alpha x) / pi + 1/2 in ``smooth`` mode. The backward rule is
    alpha / (1 + (pi alpha x)^2) in both modes.
    """
    if alpha <= 0:
        raise ParameterError(f'spike_surrogate: alpha must be positive, got {alpha}')
    xv = _value(x)
    if mode == 'spiking':
        out = (xv >= 0).astype(np.float64)
    elif mode == 'smooth':
        out = np.arctan(np.pi * alpha * xv) / np.pi + 0.5
    else:
        raise ParameterError(f'spike_surrogate: unknown mode {mode!r}')
    return _record('spike_surrogate', out, (x,), lambda g: (
        g * surrogate_grad(xv, alpha),))


def surrogate_grad(x, alpha):
    return alpha / (1. + (np.pi * alpha * x)**2)


# ----------------------------------------------------------------------
def backward(tape, loss):
    """ Gradients of a scalar ``loss`` with respect to every leaf of ``tape``.

    Returns
    -------

    grads : dict
        Leaf key to gradient array; leaves the loss does not depend on get
        zeros.

    """
    if np.size(loss.value) != 1:
        raise ContractError(f'backward: loss must be scalar, got shape {loss.shape}')
    if loss.tape is not tape:
        raise ContractError('backward: loss was not recorded on this tape')

    grads = [None] * len(tape.nodes)
    if loss.node is not None:
        grads[loss.node] = np.ones_like(loss.value)

    for idx in range(len(tape.nodes) - 1, -1, -1):
        g = grads[idx]
        node = tape.nodes[idx]
        if g is None or node.vjp is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            if parent is None:
                continue
            if grads[parent] is None:
                grads[parent] = np.array(pg, dtype=np.float64)
            else:
                grads[parent] = grads[parent] + pg

    out = {}
    for key, idx in tape.leaves().items():
        g = grads[idx]
        out[key] = g if g is not None else np.zeros(tape.leaf_shapes[key])
    return out


# ----------------------------------------------------------------------
def sgd_step(params, grads, lr, momentum=0.9, weight_decay=0., velocity=None):
    """ One SGD step with momentum and L2 weight decay.

        v <- momentum v + grad + weight_decay param
        param <- param - lr v

    Returns
    -------

    params, velocity : dict, dict
        New parameter and velocity dicts; the inputs are not modified.

    """
    if set(params) != set(grads):
        raise ContractError(
            f'sgd_step: parameter and gradient keys differ: '
            f'{sorted(set(params) ^ set(grads))}')
    if velocity is None:
        velocity = {}
    new_params, new_velocity = {}, {}
    for key, p in params.items():
        g = np.broadcast_to(grads[key], p.shape)
        v = momentum * velocity.get(key, 0.) + g + weight_decay * p
        new_velocity[key] = v
        new_params[key] = p - lr * v
    return new_params, new_velocity


class SGD(object):

    """ Momentum SGD keeping its velocity between steps. """

    def __init__(self, momentum=0.9, weight_decay=0.):
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.velocity = {}

    def step(self, params, grads, lr):
        params, self.velocity = sgd_step(
            params, grads, lr, self.momentum, self.weight_decay, self.velocity)
        return params
