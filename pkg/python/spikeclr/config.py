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

""" Run configuration: defaults, document loading with dotted overrides,
validation and the typed views (LIF, training, splits) of its sections. """

import hashlib
import logging
from dataclasses import dataclass, field

from .ParameterCollection import ParameterCollection, parse_value
from .augment import AugmentPolicy, FAMILIES
from .contrastive import LOSS_STRATEGIES
from .snn import make_lif_config, BACKBONES
from .exceptions import ConfigurationError, ParameterError

logger = logging.getLogger(__name__)

SECTIONS = ('data', 'model', 'augment', 'pretrain', 'downstream', 'eval')

# ----------------------------------------------------------------------
def default_config():
    """ The complete default configuration, every addressable key present. """

    data = ParameterCollection(
        path=None, test_path=None,
        num_classes=3, samples_per_class=40, test_samples_per_class=20,
        sensor=(16, 16), duration=10000, class_offset=0, motion=1.0, seed=0,
        source_path=None, source_num_classes=4, source_class_offset=3,
        source_samples_per_class=40, source_seed=1)

    model = ParameterCollection(
        backbone='mini_sew', T=8, proj_dim=32,
        init_gain=1.0, init_rate=0.1, init_samples=32,
        beta=0.9, v_th=1.0, v_reset=0.0, surrogate_alpha=2.0,
        mode='spiking', reset='reset_then_decay', detach_reset=True, seed=0)

    policy = AugmentPolicy()
    augment = ParameterCollection(
        crop_scale_range=policy.crop_scale_range, flip_prob=policy.flip_prob,
        roll_max=policy.roll_max, brightness_range=policy.brightness_range,
        shift_range=policy.shift_range, clip=policy.clip,
        window_fraction_range=policy.window_fraction_range,
        enabled=FAMILIES)

    pretrain = ParameterCollection(
        epochs=40, batch_size=32, lr=0.05, momentum=0.9, weight_decay=1e-4,
        tau=0.5, loss='mean', seed=0)

    downstream = ParameterCollection(
        epochs=30, batch_size=32, lr=0.05, momentum=0.9, weight_decay=1e-4,
        tau=0.5, loss='mean', seed=0)

    evaluation = ParameterCollection(
        k=5, splits=3, label_fraction=None, seed=0, threads=1,
        fractions=(0.25, 1.0),
        augment_sets=(('spatial',), ('polarity',), ('temporal',),
                      ('spatial', 'temporal'), FAMILIES),
        loss_strategies=LOSS_STRATEGIES)

    return ParameterCollection(data=data, model=model, augment=augment,
                               pretrain=pretrain, downstream=downstream,
                               eval=evaluation)


def apply_overrides(p, overrides):
    """ Set ``(dotted_key, value)`` pairs on ``p``, string values parsed as literals. """
    for key, value in overrides:
        if isinstance(value, str):
            value = parse_value(value)
        p.set_dotted(key, value, strict=True)
    return p


def set_seed(p, seed):
    """ One seed for every section that carries one. """
    for section in SECTIONS:
        sec = p[section]
        if 'seed' in sec.keys():
            sec.seed = int(seed)
    return p


def load_config(path=None, overrides=()):
    """ Defaults, then the document at ``path``, then dotted overrides.

    Parameters
    ----------

    path : str, optional
        Config document, ``section.key = literal`` per line.

    overrides : sequence of (str, object)
        Dotted key and value, applied last.

    Returns
    -------

    p : ParameterCollection
        Validated configuration.

    """
    p = default_config()
    if path is not None:
        try:
            with open(path) as fd:
                text = fd.read()
        except OSError as e:
            raise OSError(f'cannot read config {path}: {e.strerror}') from e
        doc = ParameterCollection.from_document(text, source=path)
        apply_overrides(p, doc.flatten().items())
    apply_overrides(p, overrides)
    validate_config(p)
    return p


# ----------------------------------------------------------------------
def _require(cond, key, message):
    if not cond:
        raise ConfigurationError(f'{key}: {message}')


def validate_config(p):
    """ Check value ranges, errors name the offending dotted key. """
    for section in SECTIONS:
        _require(section in p.keys(), section, 'missing section')

    d = p.data
    _require(isinstance(d.num_classes, int) and d.num_classes >= 2, 'data.num_classes', 'must be an integer >= 2')
    _require(d.samples_per_class >= 1, 'data.samples_per_class', 'must be >= 1')
    _require(d.test_samples_per_class >= 1, 'data.test_samples_per_class', 'must be >= 1')
    _require(len(d.sensor) == 2 and min(d.sensor) >= 8, 'data.sensor', 'must be (W, H) with W, H >= 8')
    _require(d.duration >= 1, 'data.duration', 'must be positive')

    m = p.model
    _require(m.backbone in BACKBONES, 'model.backbone', f'must be one of {BACKBONES}')
    _require(isinstance(m.T, int) and m.T >= 1, 'model.T', 'must be an integer >= 1')
    _require(m.proj_dim >= 1, 'model.proj_dim', 'must be >= 1')
    _require(m.init_gain > 0, 'model.init_gain', 'must be positive')
    _require(0 <= m.init_rate < 1, 'model.init_rate', 'must lie in [0, 1), 0 disables calibration')
    _require(isinstance(m.init_samples, int) and m.init_samples >= 1, 'model.init_samples', 'must be an integer >= 1')
    try:
        lif_config(p)
    except ConfigurationError as e:
        raise ConfigurationError(f'model: {e}') from None

    try:
        augment_policy(p)
    except ParameterError as e:
        raise ConfigurationError(f'augment: {e}') from None

    for stage in ('pretrain', 'downstream'):
        s = p[stage]
        _require(isinstance(s.epochs, int) and s.epochs >= 0, f'{stage}.epochs', 'must be an integer >= 0')
        _require(isinstance(s.batch_size, int) and s.batch_size >= 1, f'{stage}.batch_size', 'must be an integer >= 1')
        _require(s.lr >= 0, f'{stage}.lr', 'must be >= 0')
        _require(0 <= s.momentum < 1, f'{stage}.momentum', 'must lie in [0, 1)')
        _require(s.weight_decay >= 0, f'{stage}.weight_decay', 'must be >= 0')
        _require(s.tau > 0, f'{stage}.tau', 'must be positive')
        _require(s.loss in LOSS_STRATEGIES, f'{stage}.loss', f'must be one of {LOSS_STRATEGIES}')

    e = p.eval
    _require(e.k == 'full' or (isinstance(e.k, int) and e.k >= 1), 'eval.k', "must be an integer >= 1 or 'full'")
    _require(isinstance(e.splits, int) and e.splits >= 1, 'eval.splits', 'must be an integer >= 1')
    _require(e.label_fraction is None or 0 < e.label_fraction <= 1, 'eval.label_fraction', 'must lie in (0, 1]')
    _require(isinstance(e.threads, int) and e.threads >= 1, 'eval.threads', 'must be an integer >= 1')
    _require(all(0 < f <= 1 for f in e.fractions), 'eval.fractions', 'must lie in (0, 1]')
    for families in e.augment_sets:
        _require(families and set(families) <= set(FAMILIES), 'eval.augment_sets',
                 f'entries must be non-empty subsets of {FAMILIES}')
    _require(set(e.loss_strategies) <= set(LOSS_STRATEGIES), 'eval.loss_strategies',
             f'must be drawn from {LOSS_STRATEGIES}')
    return p


def config_hash(p, extra=''):
    """ First 12 hex digits of the SHA-256 of the config document (and ``extra``). """
    text = p.to_document() + extra
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:12]


# ----------------------------------------------------------------------
def lif_config(p):
    m = p.model
    return make_lif_config(beta=m.beta, v_th=m.v_th, v_reset=m.v_reset,
                           surrogate_alpha=m.surrogate_alpha, mode=m.mode,
                           reset=m.reset, detach_reset=m.detach_reset)


def augment_policy(p):
    return AugmentPolicy.from_parameters(p.augment)


@dataclass(frozen=True)
class TrainConfig:

    """ Hyperparameters of one training stage. """

    epochs: int = 40
    batch_size: int = 32
    lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-4
    tau: float = 0.5
    T: int = 8
    backbone: str = 'mini_sew'
    policy: AugmentPolicy = field(default_factory=AugmentPolicy)
    loss: str = 'mean'
    seed: int = 0
    proj_dim: int = 32
    init_gain: float = 1.0
    init_rate: float = 0.1
    init_samples: int = 32
    lif: ParameterCollection = field(default_factory=make_lif_config)

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigurationError(f'epochs must be >= 0, got {self.epochs}')
        if self.batch_size < 1:
            raise ConfigurationError(f'batch_size must be >= 1, got {self.batch_size}')
        if self.lr < 0 or self.weight_decay < 0 or not 0 <= self.momentum < 1:
            raise ConfigurationError('lr and weight_decay must be >= 0, momentum in [0, 1)')
        if not self.tau > 0:
            raise ConfigurationError(f'tau must be positive, got {self.tau}')
        if self.T < 1:
            raise ConfigurationError(f'T must be >= 1, got {self.T}')
        if self.loss not in LOSS_STRATEGIES:
            raise ConfigurationError(f'unknown loss strategy {self.loss!r}')
        if not 0 <= self.init_rate < 1:
            raise ConfigurationError(f'init_rate must lie in [0, 1), got {self.init_rate}')
        if self.init_samples < 1:
            raise ConfigurationError(f'init_samples must be >= 1, got {self.init_samples}')

    def alter(self, **kwargs):
        return TrainConfig(**{**self.__dict__, **kwargs})


def train_config(p, stage='pretrain'):
    """ TrainConfig of the ``pretrain`` or ``downstream`` section. """
    if stage not in ('pretrain', 'downstream'):
        raise ConfigurationError(f'unknown training stage {stage!r}')
    s, m = p[stage], p.model
    return TrainConfig(epochs=s.epochs, batch_size=s.batch_size, lr=s.lr,
                       momentum=s.momentum, weight_decay=s.weight_decay,
                       tau=s.tau, T=m.T, backbone=m.backbone,
                       policy=augment_policy(p), loss=s.loss, seed=s.seed,
                       proj_dim=m.proj_dim, init_gain=m.init_gain,
                       init_rate=m.init_rate, init_samples=m.init_samples,
                       lif=lif_config(p))


@dataclass(frozen=True)
class SplitSpec:

    """ Few-shot labeled split sampling: k per class (or ``full``), or a
    stratified fraction of the pool. """

    k_per_class: object = 5
    num_splits: int = 3
    seed: int = 0
    label_fraction: object = None

    def __post_init__(self):
        k = self.k_per_class
        if not (k == 'full' or (isinstance(k, int) and k >= 1)):
            raise ConfigurationError(f"k_per_class must be >= 1 or 'full', got {k!r}")
        if self.num_splits < 1:
            raise ConfigurationError(f'num_splits must be >= 1, got {self.num_splits}')
        if self.label_fraction is not None and not 0 < self.label_fraction <= 1:
            raise ConfigurationError(f'label_fraction must lie in (0, 1], got {self.label_fraction}')

    @property
    def label(self):
        """ The ``k`` column of result tables. """
        if self.label_fraction is not None:
            return f'{self.label_fraction:g}'
        return str(self.k_per_class)


def split_spec(p):
    e = p.eval
    return SplitSpec(k_per_class=e.k, num_splits=e.splits, seed=e.seed,
                     label_fraction=e.label_fraction)
