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

""" Spiking layers: leaky integrate-and-fire dynamics with surrogate
gradients, spike-element-wise (SEW) residual blocks, and the backbone,
projection head and classifier constructors.

An ``SnnModel`` is an ordered list of layers plus a dict of named
parameter arrays. Running it over a frame sequence zeroes all membrane
states and unrolls the T steps on one tape.

Fresh models can be calibrated on sample frames (``calibrate``): every
LIF layer gets a per-channel weight scale and bias that put its firing
rate at a target value, plain linear outputs are centered.
"""

# ----------------------------------------------------------------------

import logging
from typing import NamedTuple

import numpy as np

# ----------------------------------------------------------------------

from . import autodiff as ad
from .autodiff import Tensor, Tape
from .exceptions import ShapeError, ConfigurationError
from .representation import FrameSequence
from .ParameterCollection import ParameterCollection

logger = logging.getLogger(__name__)

BACKBONES = ('mini_sew', 'tiny_conv')
RESET_MODES = ('reset_then_decay', 'literal')

# calibrated current spread, in units of v_th - v_reset
CALIBRATION_STD = 0.5
CALIBRATION_STEPS = 30

# ----------------------------------------------------------------------
def make_lif_config(beta=0.9, v_th=1.0, v_reset=0.0, surrogate_alpha=2.0,
                    mode='spiking', reset='reset_then_decay', detach_reset=True):
    """ Validated LIF neuron parameters.

    Parameters
    ----------

    beta : float
        Membrane decay factor in (0, 1).

    v_th, v_reset : float
        Firing threshold and reset potential, v_th > v_reset.

    surrogate_alpha : float
        Width of the arctan surrogate derivative.

    mode : str
        ``spiking`` (Heaviside forward) or ``smooth`` (arctan forward).

    reset : str
        ``reset_then_decay``: u[t] = beta (u[t-1] (1 - s[t-1]) + v_reset s[t-1]) + I[t].
        ``literal``: u[t] = beta u[t-1] + I[t] - (u[t-1] - v_reset) s[t-1].

    detach_reset : bool
        Treat the previous spikes in the reset gate as constants.

    Returns
    -------

    cfg : ParameterCollection

    """
    if not 0. < beta < 1.:
        raise ConfigurationError(f'lif: beta must lie in (0, 1), got {beta}')
    if not v_th > v_reset:
        raise ConfigurationError(f'lif: v_th {v_th} must exceed v_reset {v_reset}')
    if not surrogate_alpha > 0:
        raise ConfigurationError(f'lif: surrogate_alpha must be positive, got {surrogate_alpha}')
    if mode not in ('spiking', 'smooth'):
        raise ConfigurationError(f'lif: unknown mode {mode!r}')
    if reset not in RESET_MODES:
        raise ConfigurationError(f'lif: unknown reset {reset!r}, expected one of {RESET_MODES}')
    return ParameterCollection(beta=float(beta), v_th=float(v_th), v_reset=float(v_reset),
                               surrogate_alpha=float(surrogate_alpha), mode=mode,
                               reset=reset, detach_reset=bool(detach_reset))


class LifState(NamedTuple):
    u: Tensor
    s_prev: Tensor


# ----------------------------------------------------------------------
def lif_step(input_current, state, cfg):
    """ One LIF update.

    Parameters
    ----------

    input_current : Tensor
        Synaptic input I[t].

    state : LifState or None
        Previous membrane potential and spikes, None for the zero state.

    cfg : ParameterCollection
        From ``make_lif_config``.

    Returns
    -------

    spikes : Tensor

    state : LifState

    """
    if state is None:
        u = input_current
    else:
        if state.u.shape != input_current.shape:
            raise ShapeError(
                f'lif_step: state {state.u.shape} does not match input {input_current.shape}')
        s = state.s_prev.value if cfg.detach_reset else state.s_prev
        if cfg.reset == 'reset_then_decay':
            carry = ad.add(ad.mul(state.u, ad.sub(1., s)), ad.scale(s, cfg.v_reset))
            u = ad.add(ad.scale(carry, cfg.beta), input_current)
        else:
            leak = ad.mul(ad.add_scalar(state.u, -cfg.v_reset), s)
            u = ad.sub(ad.add(ad.scale(state.u, cfg.beta), input_current), leak)

    spikes = ad.spike_surrogate(ad.add_scalar(u, -cfg.v_th), cfg.surrogate_alpha, cfg.mode)
    return spikes, LifState(u, spikes)


def spike_surrogate(x, alpha, mode='spiking'):
    """ Heaviside / arctan spike function with the arctan surrogate gradient. """
    return ad.spike_surrogate(x, alpha, mode)


# ----------------------------------------------------------------------
def kaiming(rng, shape, fan_in, gain=1.):
    return rng.normal(0., gain * np.sqrt(2. / fan_in), size=shape)


def _lif_rate(currents, bias, cfg):
    """ Firing rate per channel of LIF neurons driven by currents[t] + bias. """
    axes = (0,) + tuple(range(2, currents[0].ndim))
    state, total = None, 0.
    for c in currents:
        spikes, state = lif_step(Tensor(c + bias), state, cfg)
        total = total + spikes.value.mean(axis=axes)
    return total / len(currents)


def calibrate_lif(currents, w, cfg, rate, w_axis=0):
    """ Weight scale and bias putting a LIF layer at a target firing rate.

    Parameters
    ----------

    currents : list of numpy.ndarray
        Bias-free input currents of the layer, one (B, C, ...) array per
        timestep.

    w : numpy.ndarray
        Layer weights, output channels along ``w_axis``.

    cfg : ParameterCollection
        LIF configuration.

    rate : float
        Target mean firing rate of every output channel.

    Returns
    -------

    w, b : numpy.ndarray
        Weights rescaled so every channel's current has standard deviation
        CALIBRATION_STD (v_th - v_reset), and the per-channel bias, found by
        bisection, at which the channel fires at ``rate`` or just above.

    """
    stacked = np.stack(currents)
    axes = (0, 1) + tuple(range(3, stacked.ndim))
    shape = (1, -1) + (1,) * (stacked.ndim - 3)
    gap = cfg.v_th - cfg.v_reset

    std = stacked.std(axis=axes)
    scale = np.where(std > 0, CALIBRATION_STD * gap / np.where(std > 0, std, 1.), 1.)
    mean = stacked.mean(axis=axes) * scale
    currents = [c * scale.reshape(shape) for c in currents]

    # invariant: rate(lo) < rate <= rate(hi), offsets relative to the mean current
    lo = np.full_like(scale, cfg.v_th - 4. * gap)
    hi = np.full_like(scale, cfg.v_th + gap)
    for _ in range(CALIBRATION_STEPS):
        mid = 0.5 * (lo + hi)
        below = _lif_rate(currents, (mid - mean).reshape(shape), cfg) < rate
        lo, hi = np.where(below, mid, lo), np.where(below, hi, mid)

    w_shape = [1] * w.ndim
    w_shape[w_axis] = -1
    return w * scale.reshape(w_shape), hi - mean


def _outputs(layer, xs, p, cfg):
    states = {}
    return [ad._value(layer.forward(x, p, states, cfg)) for x in xs]


class ConvLif(object):

    """ conv2d + per-channel bias + LIF. """

    def __init__(self, name, in_ch, out_ch, kernel=3):
        self.name, self.in_ch, self.out_ch, self.kernel = name, in_ch, out_ch, kernel

    def init_params(self, rng, gain):
        k = self.kernel
        return {f'{self.name}.w': kaiming(rng, (self.out_ch, self.in_ch, k, k), self.in_ch * k * k, gain),
                f'{self.name}.b': np.zeros(self.out_ch)}

    def out_shape(self, shape):
        return (self.out_ch,) + tuple(shape[1:])

    def current(self, x, p):
        if x.shape[1] != self.in_ch:
            raise ShapeError(f'{self.name}: expected {self.in_ch} input channels, got {x.shape[1]}')
        return ad.conv2d(x, p[f'{self.name}.w'], stride=1, padding=self.kernel // 2)

    def forward(self, x, p, states, cfg):
        current = ad.add_bias(self.current(x, p), p[f'{self.name}.b'], axis=1)
        spikes, states[self.name] = lif_step(current, states.get(self.name), cfg)
        return spikes

    def calibrate(self, xs, p, cfg, rate, rates):
        currents = [ad._value(self.current(x, p)) for x in xs]
        p[f'{self.name}.w'], p[f'{self.name}.b'] = calibrate_lif(
            currents, p[f'{self.name}.w'], cfg, rate, w_axis=0)
        out = _outputs(self, xs, p, cfg)
        rates[self.name] = float(np.mean(out))
        return out


class SewBlock(object):

    """ Spike-element-wise residual block with ADD connection.

    Two conv-LIF stages on the residual path; the identity path is the
    input spikes, or a 1x1 conv-LIF shortcut when the channel count
    changes.
    """

    def __init__(self, name, in_ch, out_ch, shortcut=None):
        self.name, self.in_ch, self.out_ch = name, in_ch, out_ch
        self.shortcut = (in_ch != out_ch) if shortcut is None else shortcut
        self.conv1 = ConvLif(f'{name}.conv1', in_ch, out_ch, 3)
        self.conv2 = ConvLif(f'{name}.conv2', out_ch, out_ch, 3)
        self.short = ConvLif(f'{name}.short', in_ch, out_ch, 1) if self.shortcut else None

    def init_params(self, rng, gain):
        params = {}
        for layer in (self.conv1, self.conv2, self.short):
            if layer is not None:
                params.update(layer.init_params(rng, gain))
        return params

    def out_shape(self, shape):
        return (self.out_ch,) + tuple(shape[1:])

    def forward(self, x, p, states, cfg):
        if self.short is None and self.in_ch != self.out_ch:
            raise ShapeError(
                f'{self.name}: identity path needs equal channels, got {self.in_ch} -> {self.out_ch}')
        out = self.conv2.forward(self.conv1.forward(x, p, states, cfg), p, states, cfg)
        identity = self.short.forward(x, p, states, cfg) if self.short is not None else x
        if identity.shape != out.shape:
            raise ShapeError(f'{self.name}: residual {out.shape} and identity {identity.shape} differ')
        return ad.add(out, identity)

    def calibrate(self, xs, p, cfg, rate, rates):
        out = self.conv2.calibrate(self.conv1.calibrate(xs, p, cfg, rate, rates), p, cfg, rate, rates)
        identity = self.short.calibrate(xs, p, cfg, rate, rates) if self.short is not None else xs
        return [a + b for a, b in zip(out, identity)]


class AvgPool(object):

    def __init__(self, factor=2):
        self.factor = factor

    def init_params(self, rng, gain):
        return {}

    def out_shape(self, shape):
        c, h, w = shape
        if h % self.factor or w % self.factor:
            raise ConfigurationError(f'pool: {h}x{w} not divisible by {self.factor}')
        return (c, h // self.factor, w // self.factor)

    def forward(self, x, p, states, cfg):
        return ad.avg_pool2d(x, self.factor)

    def calibrate(self, xs, p, cfg, rate, rates):
        return _outputs(self, xs, p, cfg)


class GlobalAvgPool(object):

    def init_params(self, rng, gain):
        return {}

    def out_shape(self, shape):
        return (shape[0],)

    def forward(self, x, p, states, cfg):
        return ad.global_avg_pool(x)

    def calibrate(self, xs, p, cfg, rate, rates):
        return _outputs(self, xs, p, cfg)


class Linear(object):

    """ Affine map on the last axis; ``zero_init`` for linear classifiers. """

    def __init__(self, name, in_dim, out_dim, lif=False, zero_init=False):
        self.name, self.in_dim, self.out_dim = name, in_dim, out_dim
        self.lif, self.zero_init = lif, zero_init

    def init_params(self, rng, gain):
        if self.zero_init:
            w = np.zeros((self.in_dim, self.out_dim))
        else:
            w = kaiming(rng, (self.in_dim, self.out_dim), self.in_dim, gain)
        return {f'{self.name}.w': w, f'{self.name}.b': np.zeros(self.out_dim)}

    def out_shape(self, shape):
        return (self.out_dim,)

    def current(self, x, p):
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f'{self.name}: expected {self.in_dim} features, got {x.shape[-1]}')
        return ad.matmul(x, p[f'{self.name}.w'])

    def forward(self, x, p, states, cfg):
        y = ad.add_bias(self.current(x, p), p[f'{self.name}.b'], axis=1)
        if not self.lif:
            return y
        spikes, states[self.name] = lif_step(y, states.get(self.name), cfg)
        return spikes

    def calibrate(self, xs, p, cfg, rate, rates):
        """ LIF outputs get a target rate, plain outputs zero mean; zero-init layers stay. """
        if not self.zero_init:
            currents = [ad._value(self.current(x, p)) for x in xs]
            if self.lif:
                p[f'{self.name}.w'], p[f'{self.name}.b'] = calibrate_lif(
                    currents, p[f'{self.name}.w'], cfg, rate, w_axis=1)
            else:
                p[f'{self.name}.b'] = -np.mean(np.stack(currents), axis=(0, 1))
        out = _outputs(self, xs, p, cfg)
        if self.lif:
            rates[self.name] = float(np.mean(out))
        return out


# ----------------------------------------------------------------------
class SnnModel(object):

    """ Ordered spiking layers with named parameters.

    Parameters
    ----------

    layers : list
        Layer objects, applied in order at every timestep.

    params : dict
        Parameter name to float64 array.

    lif : ParameterCollection
        LIF configuration shared by all spiking layers.

    topology : ParameterCollection
        Constructor arguments, enough to rebuild the layers.

    """

    def __init__(self, layers, params, lif, topology):
        self.layers = layers
        self.params = params
        self.lif = lif
        self.topology = topology

    def num_parameters(self):
        return int(np.sum([v.size for v in self.params.values()]))

    def copy(self):
        model = SnnModel(self.layers, {k: v.copy() for k, v in self.params.items()},
                         self.lif, self.topology.copy())
        if hasattr(self, 'feature_dim'):
            model.feature_dim = self.feature_dim
        return model

    def watch(self, tape, trainable=True):
        if trainable:
            return {k: tape.leaf(v, k) for k, v in self.params.items()}
        return {k: tape.constant(v) for k, v in self.params.items()}

    def step(self, x, tparams, states):
        for layer in self.layers:
            x = layer.forward(x, tparams, states, self.lif)
        return x

    def __repr__(self):
        return (f'SnnModel({self.topology.kind}, {len(self.layers)} layers, '
                f'{self.num_parameters()} parameters)')


def _init_model(layers, lif, topology, seed, gain, input_shape):
    rng = np.random.default_rng(seed)
    params = {}
    shape = tuple(input_shape)
    for layer in layers:
        params.update(layer.init_params(rng, gain))
        shape = layer.out_shape(shape)
    topology.output_shape = shape
    return SnnModel(layers, params, lif, topology)


def build_backbone(spec, input_shape, seed=0, lif=None, init_gain=1.):
    """ Spiking encoder emitting one feature vector per timestep.

    Parameters
    ----------

    spec : str
        ``mini_sew``: stem conv (2 -> 16, 3x3) + LIF, SEW blocks of 16 and
        32 channels each followed by a stride-2 average pool, global
        average pool (32 features).
        ``tiny_conv``: three conv + LIF + pool stages (8, 16, 32 channels),
        global average pool (32 features).

    input_shape : (T, 2, H, W)

    seed : int
        Weight initialization seed.

    lif : ParameterCollection, optional
        LIF parameters, defaults of ``make_lif_config`` if None.

    init_gain : float, optional
        Multiplier of the fan-in scaled initialization.

    Returns
    -------

    model : SnnModel

    """
    T, C, H, W = input_shape
    if spec not in BACKBONES:
        raise ConfigurationError(f'unsupported backbone {spec!r}, expected one of {BACKBONES}')
    if H < 8 or W < 8:
        raise ConfigurationError(f'{spec}: input must be at least 8x8, got {H}x{W}')
    if lif is None:
        lif = make_lif_config()

    if spec == 'mini_sew':
        layers = [ConvLif('stem', C, 16, 3),
                  SewBlock('sew1', 16, 16), AvgPool(2),
                  SewBlock('sew2', 16, 32), AvgPool(2),
                  GlobalAvgPool()]
    else:
        layers = [ConvLif('conv1', C, 8, 3), AvgPool(2),
                  ConvLif('conv2', 8, 16, 3), AvgPool(2),
                  ConvLif('conv3', 16, 32, 3), AvgPool(2),
                  GlobalAvgPool()]

    topology = ParameterCollection(kind=spec, input_shape=tuple(input_shape),
                                   seed=seed, init_gain=init_gain)
    model = _init_model(layers, lif, topology, seed, init_gain, (C, H, W))
    model.feature_dim = model.topology.output_shape[0]
    logger.debug('--> build_backbone: %s on %s, %d parameters',
                 spec, tuple(input_shape), model.num_parameters())
    return model


def build_projection_head(feature_dim, out_dim, seed=0, lif=None, init_gain=1.):
    """ linear(feature_dim -> feature_dim) + LIF + linear(feature_dim -> out_dim). """
    if feature_dim < 1 or out_dim < 1:
        raise ConfigurationError('projection head dimensions must be positive')
    if lif is None:
        lif = make_lif_config()
    layers = [Linear('proj1', feature_dim, feature_dim, lif=True),
              Linear('proj2', feature_dim, out_dim)]
    topology = ParameterCollection(kind='projection_head', feature_dim=feature_dim,
                                   out_dim=out_dim, seed=seed, init_gain=init_gain)
    return _init_model(layers, lif, topology, seed, init_gain, (feature_dim,))


def build_classifier(feature_dim, num_classes, lif=None):
    """ Zero initialized linear classifier on features. """
    if lif is None:
        lif = make_lif_config()
    topology = ParameterCollection(kind='classifier', feature_dim=feature_dim,
                                   num_classes=num_classes)
    return _init_model([Linear('fc', feature_dim, num_classes, zero_init=True)],
                       lif, topology, 0, 1., (feature_dim,))


def rebuild(topology, lif):
    """ Model with the layers described by ``topology`` and fresh parameters. """
    kind = topology.kind
    if kind in BACKBONES:
        return build_backbone(kind, topology.input_shape, topology.seed, lif, topology.init_gain)
    if kind == 'projection_head':
        return build_projection_head(topology.feature_dim, topology.out_dim,
                                     topology.seed, lif, topology.init_gain)
    if kind == 'classifier':
        return build_classifier(topology.feature_dim, topology.num_classes, lif)
    raise ConfigurationError(f'unknown model kind {kind!r}')


def calibrate(models, frames, rate=0.1):
    """ Data-driven initialization of chained models on sample frames.

    Layers are calibrated in order, each on the outputs of the already
    calibrated layers before it. A LIF layer gets its weights rescaled per
    output channel and a bias that fires every channel at ``rate`` on
    ``frames``; a plain linear layer gets the bias that centers its outputs.
    Zero-initialized classifiers are left alone.

    Parameters
    ----------

    models : SnnModel or list of SnnModel
        Parameters are replaced in place.

    frames : FrameSequence or array
        One sequence (T, 2, H, W) or a batch (B, T, 2, H, W).

    rate : float
        Target firing rate in (0, 1).

    Returns
    -------

    rates : dict
        Mean firing rate on ``frames`` of every LIF layer after calibration.

    """
    if not 0. < rate < 1.:
        raise ConfigurationError(f'calibrate: rate must lie in (0, 1), got {rate}')
    models = models if isinstance(models, (list, tuple)) else [models]
    data = _batched(frames)
    expected = tuple(models[0].topology.input_shape[1:]) if 'input_shape' in models[0].topology.keys() else None
    if expected is not None and data.shape[2:] != expected:
        raise ShapeError(f'calibrate: frames {data.shape[2:]} do not match model input {expected}')

    xs = [data[:, t] for t in range(data.shape[1])]
    rates = {}
    for m in models:
        params = dict(m.params)
        for layer in m.layers:
            xs = layer.calibrate(xs, params, m.lif, rate, rates)
        m.params = params
    for name, r in rates.items():
        logger.debug('--> calibrate: %s firing rate %.3f', name, r)
    return rates


def firing_rates(models, frames):
    """ Mean spike rate of every LIF layer of chained models on ``frames``. """
    models = models if isinstance(models, (list, tuple)) else [models]
    data = _batched(frames)
    states = [{} for _ in models]
    totals = {}
    for t in range(data.shape[1]):
        x = data[:, t]
        for m, st in zip(models, states):
            x = m.step(x, m.params, st)
            for name, state in st.items():
                totals[name] = totals.get(name, 0.) + float(np.mean(state.s_prev.value))
    return {name: v / data.shape[1] for name, v in totals.items()}


# ----------------------------------------------------------------------
def sew_block(x_spikes, state, weights, cfg, name='sew'):
    """ Apply one SEW block for a single timestep.

    Parameters
    ----------

    x_spikes : Tensor
        Input spikes (B, C_in, H, W).

    state : dict
        LIF states of the block, updated in place.

    weights : dict
        ``conv1.w/b``, ``conv2.w/b`` and, when channels change, ``short.w/b``.

    cfg : ParameterCollection
        LIF configuration.

    Returns
    -------

    spikes : Tensor
        Residual output spikes plus identity path spikes.

    """
    w1 = ad._value(weights['conv1.w'])
    in_ch, out_ch = w1.shape[1], w1.shape[0]
    if x_spikes.shape[1] != in_ch:
        raise ShapeError(f'sew_block: input has {x_spikes.shape[1]} channels, kernel expects {in_ch}')
    if in_ch != out_ch and 'short.w' not in weights:
        raise ShapeError(f'sew_block: channel change {in_ch} -> {out_ch} needs shortcut weights')
    block = SewBlock(name, in_ch, out_ch, shortcut='short.w' in weights)
    p = {f'{name}.{k}': v for k, v in weights.items()}
    return block.forward(x_spikes, p, state, cfg)


def _batched(frames):
    if isinstance(frames, FrameSequence):
        data = frames.data[None]
    else:
        data = np.asarray(frames, dtype=np.float64)
        if data.ndim == 4:
            data = data[None]
    if data.ndim != 5 or data.shape[2] != 2:
        raise ShapeError(f'forward_sequence: expected (B, T, 2, H, W) frames, got {data.shape}')
    return data


def forward_sequence(model, frames, tape=None, trainable=True):
    """ Run one or more chained models over T timesteps.

    Parameters
    ----------

    model : SnnModel or list of SnnModel
        Models applied in order at every timestep (e.g. backbone, head).

    frames : FrameSequence or array
        One sequence (T, 2, H, W) or a batch (B, T, 2, H, W).

    tape : Tape, optional
        Tape to record on; a disabled tape is used if None.

    trainable : bool or list of bool
        Whether the parameters of each model are gradient leaves.

    Returns
    -------

    outputs : list of Tensor
        Output of the last model at every timestep, (B, F) each.

    """
    models = model if isinstance(model, (list, tuple)) else [model]
    if isinstance(trainable, bool):
        trainable = [trainable] * len(models)
    if tape is None:
        tape = Tape(enabled=False)

    data = _batched(frames)
    expected = tuple(models[0].topology.input_shape[1:]) if 'input_shape' in models[0].topology.keys() else None
    if expected is not None and data.shape[2:] != expected:
        raise ShapeError(f'forward_sequence: frames {data.shape[2:]} do not match model input {expected}')

    tparams = {}
    for m, train in zip(models, trainable):
        tparams.update(m.watch(tape, train))

    states = [{} for _ in models]
    outputs = []
    for t in range(data.shape[1]):
        x = tape.constant(data[:, t])
        for m, st in zip(models, states):
            x = m.step(x, tparams, st)
        outputs.append(x)
    return outputs


def time_mean(outputs):
    """ (1/T) sum_t outputs[t] on the tape. """
    total = outputs[0]
    for out in outputs[1:]:
        total = ad.add(total, out)
    return ad.scale(total, 1. / len(outputs))
